"""Experiment configuration: INI-style ``key = value`` sections.

Angles in the file are in degrees (keys end in ``_deg``); everything else
is SI. Unknown sections or keys are rejected. See README for the grammar.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import muscle as mm
from .errors import ConfigError, ValidationError
from .loop import MODES, PiGains, PiOnlyGains, SensorModel
from .platform import Disturbance, PlatformGeometry
from .reference import AxisSignal, ReferenceProgram, Sinusoid, default_program, waypoints_to_piecewise
from .valve import AnalyticValve, check_valve, load_polynomial_csv

# Gains below were tuned on this default configuration by scripts/tune_gains.py;
# they are artifact choices for this simulated plant, not hardware values.
DEFAULT_PI = PiGains(
    kp=(8.0e4, 8.0e4, 30.0),
    ki=(1.25e4, 1.25e4, 50.0),
    limit=(0.05, 0.05, 50.0),
)
DEFAULT_PI_ONLY = PiOnlyGains(
    angle=PiGains(kp=(6400.0, 6400.0), ki=(64000.0, 64000.0), limit=(0.5, 0.5)),
    pressure=PiGains(kp=(1e-7, 1e-7, 1e-7), ki=(5e-7, 5e-7, 5e-7), limit=(1e5, 1e5, 1e5)),
)
DEFAULT_DISTURBANCE = Disturbance(
    kind="sinusoid", gamma_x=0.5, gamma_y=0.5, frequency=0.3, phase_x=0.0, phase_y=math.pi / 2, viscous=0.5
)


@dataclass(frozen=True)
class ExperimentConfig:
    muscle: mm.MuscleParams = field(default_factory=mm.MuscleParams)
    geometry: PlatformGeometry = field(default_factory=PlatformGeometry)
    valve: object = field(default_factory=AnalyticValve)
    sensors: SensorModel = field(default_factory=SensorModel)
    pi: PiGains = DEFAULT_PI
    pi_only: PiOnlyGains = DEFAULT_PI_ONLY
    reference: ReferenceProgram = field(default_factory=default_program)
    disturbance: Disturbance = DEFAULT_DISTURBANCE
    mode: str = "flatness-pi"
    seed: int = 0
    substeps: int = 10
    out_dir: str = "out"

    def validate(self) -> "ExperimentConfig":
        """Check every cross-module invariant; returns self."""
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.substeps < 1:
            raise ValidationError("substeps must be >= 1")
        if abs(self.valve_P0() - self.muscle.P0) > 1e-9 * self.muscle.P0:
            raise ValidationError("valve and muscle atmospheric pressures differ")
        mm.check_operating_range(self.muscle)
        check_valve(self.valve, self.muscle.P_min_abs, self.muscle.P_max_abs)
        self.reference.validate(self.geometry)
        return self

    def valve_P0(self) -> float:
        return getattr(self.valve, "P0", self.muscle.P0)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)


# -- parsing -----------------------------------------------------------------

_MUSCLE_KEYS = {
    "l0": "l0", "D0": "D0", "theta0_deg": "theta0", "alpha": "alpha", "K": "K", "eps_a": "eps_a",
    "eps_b": "eps_b", "eps0": "eps0", "k": "k", "r": "r", "T": "T", "P0": "P0",
    "P_min_abs": "P_min_abs", "P_max_abs": "P_max_abs", "V0_ref": "V0_ref",
}  # fmt: skip
_SECTIONS = {"muscle", "platform", "valve", "sensor", "pi", "pi_only", "reference", "disturbance", "run"}
_SINUSOID_KEY = re.compile(r"^[xy]_sinusoid_\d+$")


def _floats(text, n=None, what="value"):
    try:
        vals = [float(v) for v in re.split(r"[,\s]+", text.strip()) if v]
    except ValueError as exc:
        raise ConfigError(f"bad {what}: {text!r}") from exc
    if n is not None and len(vals) != n:
        raise ConfigError(f"{what} needs {n} numbers, got {text!r}")
    return vals


class _Section:
    """Tracks which keys were consumed so leftovers can be reported."""

    def __init__(self, parser, name):
        self.name = name
        self.data = dict(parser[name]) if parser.has_section(name) else {}
        self.used = set()

    def get(self, key, default=None):
        self.used.add(key)
        return self.data.get(key, default)

    def float(self, key, default):
        raw = self.get(key)
        if raw is None:
            return default
        return _floats(raw, 1, f"[{self.name}] {key}")[0]

    def keys(self):
        return list(self.data)

    def check_unused(self, pattern=None):
        extra = [k for k in self.data if k not in self.used and not (pattern and pattern.match(k))]
        if extra:
            raise ConfigError(f"unknown key(s) in [{self.name}]: {', '.join(sorted(extra))}")


def parse_config(text: str, base_dir=".") -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    parser.optionxform = str  # keys are case sensitive (D0, K, T)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse configuration: {exc}") from exc
    unknown = set(parser.sections()) - _SECTIONS
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")

    sec = _Section(parser, "muscle")
    kw = {}
    for key, attr in _MUSCLE_KEYS.items():
        raw = sec.get(key)
        if raw is not None:
            val = _floats(raw, 1, f"[muscle] {key}")[0]
            kw[attr] = math.radians(val) if key.endswith("_deg") else val
    sec.check_unused()
    muscle = mm.MuscleParams(**kw)

    sec = _Section(parser, "platform")
    g = PlatformGeometry()
    phi = sec.get("phi_deg")
    geometry = PlatformGeometry(
        R=sec.float("R", g.R),
        J=sec.float("J", g.J),
        phi=tuple(math.radians(v) for v in _floats(phi, 3, "[platform] phi_deg")) if phi else g.phi,
        theta_limit=math.radians(sec.float("theta_limit_deg", math.degrees(g.theta_limit))),
    )
    sec.check_unused()

    sec = _Section(parser, "valve")
    kind = sec.get("kind", "default-analytic")
    v0 = sec.float("v0", 5.0)
    v_min = sec.float("v_min", 0.0)
    v_max = sec.float("v_max", 10.0)
    if kind == "default-analytic":
        valve = AnalyticValve(
            k_q=sec.float("k_q", 1e-3), v0=v0, P_s=sec.float("P_s", 8e5), P0=muscle.P0, v_min=v_min, v_max=v_max
        )
    elif kind == "polynomial-table":
        table = sec.get("table")
        if not table:
            raise ConfigError("[valve] kind=polynomial-table needs 'table = PATH'")
        path = Path(table)
        if not path.is_absolute():
            path = Path(base_dir) / path
        valve = load_polynomial_csv(path, v0=v0, v_min=v_min, v_max=v_max)
    else:
        raise ConfigError(f"[valve] unknown kind {kind!r}")
    sec.check_unused()

    sec = _Section(parser, "sensor")
    sensors = SensorModel(
        quantization=math.radians(sec.float("quantization_deg", 0.18)),
        pressure_noise=sec.float("pressure_noise", 0.0),
        period=sec.float("period", 1e-3),
    )
    sec.check_unused()

    sec = _Section(parser, "pi")
    d = DEFAULT_PI
    pi = PiGains(
        kp=tuple(sec.float(f"kp_{c}", d.kp[i]) for i, c in enumerate("xyf")),
        ki=tuple(sec.float(f"ki_{c}", d.ki[i]) for i, c in enumerate("xyf")),
        limit=tuple(sec.float(f"limit_{c}", d.limit[i]) for i, c in enumerate("xyf")),
    )
    sec.check_unused()

    sec = _Section(parser, "pi_only")
    da, dp = DEFAULT_PI_ONLY.angle, DEFAULT_PI_ONLY.pressure
    pi_only = PiOnlyGains(
        angle=PiGains(
            kp=tuple(sec.float(f"kp_{c}", da.kp[i]) for i, c in enumerate("xy")),
            ki=tuple(sec.float(f"ki_{c}", da.ki[i]) for i, c in enumerate("xy")),
            limit=tuple(sec.float(f"limit_{c}", da.limit[i]) for i, c in enumerate("xy")),
        ),
        pressure=PiGains(
            kp=(sec.float("kp_pressure", dp.kp[0]),) * 3,
            ki=(sec.float("ki_pressure", dp.ki[0]),) * 3,
            limit=(sec.float("limit_pressure", dp.limit[0]),) * 3,
        ),
    )
    sec.check_unused()

    sec = _Section(parser, "reference")
    duration = sec.float("duration", 60.0)
    if any(_SINUSOID_KEY.match(k) for k in sec.keys()) or sec.get("x_waypoints") or sec.get("y_waypoints"):
        axes = {}
        for axis in "xy":
            sins = []
            for key in sorted(k for k in sec.keys() if k.startswith(f"{axis}_sinusoid_") and _SINUSOID_KEY.match(k)):
                amp_deg, freq, phase = _floats(sec.get(key), 3, f"[reference] {key}")
                sins.append(Sinusoid(math.radians(amp_deg), freq, phase))
            pw = None
            wp = sec.get(f"{axis}_waypoints")
            if wp:
                pts = []
                for item in wp.split(","):
                    t_s, ang = _floats(item.replace(":", " "), 2, f"[reference] {axis}_waypoints")
                    pts.append((t_s, math.radians(ang)))
                pw = waypoints_to_piecewise(pts)
            axes[axis] = AxisSignal(tuple(sins), pw)
        reference = ReferenceProgram(axes["x"], axes["y"], duration)
    else:
        reference = default_program(duration)
    sec.check_unused(_SINUSOID_KEY)

    sec = _Section(parser, "disturbance")
    dd = DEFAULT_DISTURBANCE
    dkind = sec.get("kind", dd.kind)
    table = ()
    if dkind == "table":
        raw = sec.get("table", "")
        rows = [r for r in raw.split(",") if r.strip()]
        table = tuple(tuple(_floats(r.replace(":", " "), 3, "[disturbance] table")) for r in rows)
    disturbance = Disturbance(
        kind=dkind,
        gamma_x=sec.float("gamma_x", dd.gamma_x),
        gamma_y=sec.float("gamma_y", dd.gamma_y),
        frequency=sec.float("frequency", dd.frequency),
        phase_x=sec.float("phase_x", dd.phase_x),
        phase_y=sec.float("phase_y", dd.phase_y),
        table=table,
        viscous=sec.float("viscous", dd.viscous),
    )
    sec.check_unused()

    sec = _Section(parser, "run")
    mode = sec.get("mode", "flatness-pi")
    seed_raw = sec.get("seed", "0")
    substeps_raw = sec.get("substeps", "10")
    try:
        seed, substeps = int(seed_raw), int(substeps_raw)
    except ValueError as exc:
        raise ConfigError(f"[run] seed and substeps must be integers: {exc}") from exc
    out_dir = sec.get("out", "out")
    sec.check_unused()

    return ExperimentConfig(
        muscle=muscle, geometry=geometry, valve=valve, sensors=sensors, pi=pi, pi_only=pi_only,
        reference=reference, disturbance=disturbance, mode=mode, seed=seed, substeps=substeps,
        out_dir=out_dir,
    )  # fmt: skip


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text, base_dir=path.parent)
