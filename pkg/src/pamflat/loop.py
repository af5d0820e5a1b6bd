"""Closed-loop executive: plant integration, sensors, PI feedback, the
flow -> voltage -> flow command pipeline and telemetry."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import muscle as mm
from .errors import DivergenceError, InfeasibleWindowError, ValidationError
from .flatness import FlatJet, feedforward_control
from .platform import Disturbance, PlantState, torque_rows
from .reference import assemble_jet, reference_point
from .valve import command

log = logging.getLogger(__name__)

MODES = ("flatness-pi", "flatness-only", "pi-only")
P_FLOOR = 1.0  # Pa, pressures are clamped above this
ANGLE_GUARD = math.pi / 2
RATE_GUARD = 1e3  # rad/s
PRESSURE_GUARD = 1e8  # Pa


@dataclass(frozen=True)
class SensorModel:
    quantization: float = math.radians(0.18)  # rad, 0 disables
    pressure_noise: float = 0.0  # Pa, standard deviation
    period: float = 1e-3  # s

    def __post_init__(self):
        if self.quantization < 0 or self.pressure_noise < 0:
            raise ValidationError("sensor quantization and noise must be non-negative")
        if not self.period > 0:
            raise ValidationError("sensor period must be positive")


@dataclass(frozen=True)
class PiGains:
    """Per-channel PI gains; ``limit`` bounds each integrator state."""

    kp: tuple = (0.0, 0.0, 0.0)
    ki: tuple = (0.0, 0.0, 0.0)
    limit: tuple = (1.0, 1.0, 1.0)

    def __post_init__(self):
        n = len(self.kp)
        if len(self.ki) != n or len(self.limit) != n:
            raise ValidationError("kp, ki and limit must have the same length")
        if any(g < 0 for g in self.kp + self.ki):
            raise ValidationError("PI gains must be non-negative")
        if any(not lim > 0 for lim in self.limit):
            raise ValidationError("integrator limits must be positive")


@dataclass(frozen=True)
class PiOnlyGains:
    """Baseline cascade: angle PI -> acceleration, pressure PI -> mass flow."""

    angle: PiGains = field(default_factory=lambda: PiGains((0.0, 0.0), (0.0, 0.0), (1.0, 1.0)))
    pressure: PiGains = field(default_factory=PiGains)


@dataclass
class RunRecord:
    t: float
    theta_x: float
    theta_y: float
    omega_x: float
    omega_y: float
    P1: float
    P2: float
    P3: float
    theta_x_meas: float
    theta_y_meas: float
    ref_theta_x: float
    ref_theta_y: float
    ref_F3: float
    ref_F3_rate: float
    q1: float
    q2: float
    q3: float
    v1: float
    v2: float
    v3: float
    F1: float
    F2: float
    F3: float
    e1: float
    e2: float
    e3: float
    sat1: int
    sat2: int
    sat3: int
    force_violation: int


RECORD_FIELDS = tuple(f.name for f in fields(RunRecord))
RECORD_UNITS = (
    "s", "rad", "rad", "rad/s", "rad/s", "Pa", "Pa", "Pa", "rad", "rad", "rad", "rad", "N", "N/s",
    "kg/s", "kg/s", "kg/s", "V", "V", "V", "N", "N", "N", "rad", "rad", "N", "1", "1", "1", "1",
)  # fmt: skip
assert len(RECORD_UNITS) == len(RECORD_FIELDS)


@dataclass
class RunResult:
    records: list
    summary: dict
    switch_events: list = field(default_factory=list)


# -- plant -------------------------------------------------------------------


def plant_rhs(params, geom, x, q, gamma=(0.0, 0.0)) -> tuple:
    """Right-hand side of the 7-state ODE for inflows ``q`` and torques ``gamma``."""
    tx, ty, wx, wy = x[0], x[1], x[2], x[3]
    ctx, stx = math.cos(tx), math.sin(tx)
    cty, sty = math.cos(ty), math.sin(ty)
    scale = geom.R / params.l0
    ax = ay = 0.0
    dP = [0.0, 0.0, 0.0]
    for i in range(3):
        s, c = geom.sin_phi[i], geom.cos_phi[i]
        r1 = -s * ctx * cty
        r2 = c * cty + s * stx * sty
        eps = scale * (c * sty - s * stx * cty) + params.eps0
        eps_dot = scale * (r1 * wx + r2 * wy)
        P = x[4 + i]
        F, dP[i] = mm.force_and_pressure_rate(params, P, eps, eps_dot, q[i])
        ax += r1 * F
        ay += r2 * F
    k = geom.R_over_J
    return (wx, wy, k * ax + gamma[0] / geom.J, k * ay + gamma[1] / geom.J, dP[0], dP[1], dP[2])


def make_rhs(params, geom, disturbance=None):
    """Fast closure ``fun(t, x, q)`` equal to ``plant_rhs`` with the disturbance torque.

    Parameters are bound once as locals; the integrator calls this 40 times
    per control period.
    """
    sphi, cphi = geom.sin_phi, geom.cos_phi
    scale, eps0 = geom.R / params.l0, params.eps0
    kRJ, invJ = geom.R_over_J, 1.0 / geom.J
    alpha, area, it2, is2 = params.alpha, params.area, params.inv_tan2, params.inv_sin2
    P0, K, ea, eb = params.P0, params.K, params.eps_a, params.eps_b
    al, vc, kk, rT = params.area * params.l0, params.volume_constant, params.k, params.rT
    torque = disturbance.torque if disturbance is not None else None

    def fun(t, x, q):
        tx, ty, wx, wy = x[0], x[1], x[2], x[3]
        ctx, stx = math.cos(tx), math.sin(tx)
        cty, sty = math.cos(ty), math.sin(ty)
        ax = ay = 0.0
        dP = [0.0, 0.0, 0.0]
        for i in range(3):
            s, c = sphi[i], cphi[i]
            r1 = -s * ctx * cty
            r2 = c * cty + s * stx * sty
            eps = scale * (c * sty - s * stx * cty) + eps0
            eps_dot = scale * (r1 * wx + r2 * wy)
            P = x[4 + i]
            om = 1.0 - eps
            pa = om**alpha
            denom = eps + eb
            V = al * (-eps * is2 - om * pa * it2) + vc
            if denom < mm.DENOM_MIN or V <= 0:
                # slow path raises the specific model error
                mm.force_and_pressure_rate(params, P, eps, eps_dot, q[i])
            F = area * (3.0 * pa * it2 - is2) * (P - P0) + K * eps * (eps - ea) / denom
            dV = al * (-is2 + (alpha + 1.0) * pa * it2)
            dP[i] = kk * (rT * q[i] - P * dV * eps_dot) / V
            ax += r1 * F
            ay += r2 * F
        if torque is not None:
            gx, gy = torque(t, wx, wy)
            ax = kRJ * ax + gx * invJ
            ay = kRJ * ay + gy * invJ
        else:
            ax *= kRJ
            ay *= kRJ
        return (wx, wy, ax, ay, dP[0], dP[1], dP[2])

    return fun


def rk4_step(fun, t, x, h):
    k1 = fun(t, x)
    k2 = fun(t + 0.5 * h, [a + 0.5 * h * b for a, b in zip(x, k1)])
    k3 = fun(t + 0.5 * h, [a + 0.5 * h * b for a, b in zip(x, k2)])
    k4 = fun(t + h, [a + h * b for a, b in zip(x, k3)])
    return [a + (h / 6.0) * (b + 2 * c + 2 * d + e) for a, b, c, d, e in zip(x, k1, k2, k3, k4)]


def integrate(params, geom, x, q, disturbance=None, dt=1e-3, t=0.0, substeps=1, rhs=None):
    """Advance the state over ``dt`` with q held; returns (state list, clamp count).

    ``rhs`` is an optional closure from :func:`make_rhs` reused across calls.
    """
    h = dt / substeps
    rhs = rhs or make_rhs(params, geom, disturbance)

    def fun(tt, xx):
        return rhs(tt, xx, q)

    x = list(x)
    clamped = 0
    for n in range(substeps):
        x = rk4_step(fun, t + n * h, x, h)
        for i in (4, 5, 6):
            if x[i] < P_FLOOR:
                x[i] = P_FLOOR
                clamped += 1
    _check_divergence(x, t + dt)
    return x, clamped


def _check_divergence(x, t):
    ok = (
        all(math.isfinite(v) for v in x)
        and abs(x[0]) < ANGLE_GUARD
        and abs(x[1]) < ANGLE_GUARD
        and abs(x[2]) < RATE_GUARD
        and abs(x[3]) < RATE_GUARD
        and max(x[4:]) < PRESSURE_GUARD
    )
    if not ok:
        raise DivergenceError(f"state diverged at t={t:.6g}: {x}")


def plant_step(params, geom, x, q, disturbance=None, dt=1e-3, t=0.0, substeps=1) -> PlantState:
    """One zero-order-hold step of the plant with classical RK4."""
    xs = x.as_tuple() if isinstance(x, PlantState) else tuple(x)
    out, clamped = integrate(params, geom, xs, q, disturbance, dt, t, substeps)
    if clamped:
        log.warning("pressure clamped to %g Pa %d time(s) near t=%g", P_FLOOR, clamped, t)
    return PlantState(*out)


# -- sensors and PI ----------------------------------------------------------


def quantize(value: float, step: float) -> float:
    """Round to the nearest multiple of ``step``, halves away from zero."""
    if step <= 0:
        return value
    n = math.floor(abs(value) / step + 0.5)
    return math.copysign(n * step, value) if n else 0.0


def measure(sensors: SensorModel, x, rng=None):
    """(theta_x_meas, theta_y_meas, (P1, P2, P3)_meas)."""
    tx = quantize(x[0], sensors.quantization)
    ty = quantize(x[1], sensors.quantization)
    P = tuple(x[4:7])
    if sensors.pressure_noise > 0:
        if rng is None:
            raise ValueError("pressure noise needs a random generator")
        P = tuple(p + sensors.pressure_noise * rng.standard_normal() for p in P)
    return tx, ty, P


def pi_update(gains: PiGains, e, integ, dt):
    """w_i = kp_i e_i + ki_i I_i with I_i <- clamp(I_i + e_i dt, +-limit)."""
    new_integ = tuple(
        min(max(I + ei * dt, -lim), lim) for I, ei, lim in zip(integ, e, gains.limit)
    )
    w = tuple(kp * ei + ki * I for kp, ki, ei, I in zip(gains.kp, gains.ki, e, new_integ))
    return w, new_integ


# -- experiment --------------------------------------------------------------


def initial_state(cfg) -> tuple:
    """Plant state consistent with the reference jet at t=0 (transient-free start)."""
    from .flatness import flat_to_state

    jet = assemble_jet(cfg.muscle, cfg.geometry, cfg.reference, 0.0)
    return flat_to_state(cfg.muscle, cfg.geometry, jet).as_tuple()


def _pi_only_flows(cfg, jet, meas, integ_angle, integ_p, dt):
    params, geom = cfg.muscle, cfg.geometry
    tx_m, ty_m, P_m = meas
    e = (jet.y1[0] - tx_m, jet.y2[0] - ty_m)
    acc, integ_angle = pi_update(cfg.pi_only.angle, e, integ_angle, dt)
    row1, row2 = torque_rows(geom, tx_m, ty_m)
    k = geom.R_over_J
    F3 = jet.y3[0]
    b1 = acc[0] / k - row1[2] * F3
    b2 = acc[1] / k - row2[2] * F3
    det = row1[0] * row2[1] - row1[1] * row2[0]
    F1 = (row2[1] * b1 - row1[1] * b2) / det
    F2 = (row1[0] * b2 - row2[0] * b1) / det
    eps, _ = mm.contractions(params, geom, tx_m, ty_m)
    P_des = [mm.pressure_from_force(params, F, ep) for F, ep in zip((F1, F2, F3), eps)]
    ep = tuple(pd - pm for pd, pm in zip(P_des, P_m))
    q, integ_p = pi_update(cfg.pi_only.pressure, ep, integ_p, dt)
    return q, integ_angle, integ_p


def held_jet(params, geom, program, t, T, jet_now=None):
    """Reference jet for a command held over [t, t+T].

    Angle derivatives are taken at the period midpoint. The force rate is the
    secant of F3_ref across the period, so the held y3 command integrates to
    the exact reference increment even when the active allocation bound
    switches inside the period.
    """
    t_end = min(t + T, program.duration)
    mid = assemble_jet(params, geom, program, 0.5 * (t + t_end))
    if t_end <= t:
        return mid
    start = jet_now if jet_now is not None else assemble_jet(params, geom, program, t)
    end = assemble_jet(params, geom, program, t_end)
    rate = (end.y3[0] - start.y3[0]) / (t_end - t)
    return FlatJet(mid.y1, mid.y2, (mid.y3[0], rate))


def run_experiment(cfg, x0=None) -> RunResult:
    """Run one closed-loop experiment.

    ``cfg`` is an :class:`pamflat.config.ExperimentConfig`. The feedforward
    law is evaluated half a period ahead, which centres the zero-order-held
    flow on the interval it acts over.
    """
    params, geom, valve = cfg.muscle, cfg.geometry, cfg.valve
    sensors, program, dist = cfg.sensors, cfg.reference, cfg.disturbance
    mode = cfg.mode
    if mode not in MODES:
        raise ValidationError(f"unknown mode {mode!r}")
    T = sensors.period
    substeps = cfg.substeps
    n_periods = int(round(program.duration / T))
    rng = np.random.default_rng(cfg.seed)
    rhs = make_rhs(params, geom, dist)

    x = list(x0) if x0 is not None else list(initial_state(cfg)) if n_periods else None
    integ = (0.0, 0.0, 0.0)
    integ_angle = (0.0, 0.0)
    integ_p = (0.0, 0.0, 0.0)
    records = []
    switches = []
    active = None
    sat_count = violation_count = clamp_count = 0

    for n in range(n_periods):
        t = n * T
        meas = measure(sensors, x, rng)
        tx_m, ty_m, P_m = meas
        try:
            jet, alloc = reference_point(params, geom, program, t)
        except InfeasibleWindowError:
            log.error("allocation window infeasible at t=%g", t)
            raise
        e1 = tx_m - jet.y1[0]
        e2 = ty_m - jet.y2[0]
        eps3_m = mm.contraction(params, geom, tx_m, ty_m, 3)
        e3 = mm.force(params, P_m[2], eps3_m) - jet.y3[0]

        if mode == "pi-only":
            q, integ_angle, integ_p = _pi_only_flows(cfg, jet, meas, integ_angle, integ_p, T)
        else:
            ahead = held_jet(params, geom, program, t, T, jet)
            if mode == "flatness-pi":
                w, integ = pi_update(cfg.pi, (-e1, -e2, -e3), integ, T)
            else:
                w = (0.0, 0.0, 0.0)
            q = tuple(feedforward_control(params, geom, ahead, w))

        v = [0.0, 0.0, 0.0]
        sat = [0, 0, 0]
        q_real = [0.0, 0.0, 0.0]
        for i in range(3):
            v[i], s = command(valve, P_m[i], q[i])
            sat[i] = int(s)
            q_real[i] = valve.flow(x[4 + i], v[i])
        sat_count += sum(sat)

        eps = [mm.contraction(params, geom, x[0], x[1], i) for i in (1, 2, 3)]
        F = [mm.force(params, x[4 + i], eps[i]) for i in range(3)]
        violation = int(any(not params.P_min_abs <= x[4 + i] <= params.P_max_abs for i in range(3)))
        violation_count += violation

        now_active = (alloc.window.idx_min, alloc.window.idx_max)
        if active is not None and now_active != active:
            switches.append((t, active, now_active))
            log.debug("allocation active muscles %s -> %s at t=%g", active, now_active, t)
        active = now_active

        records.append(
            RunRecord(
                t, *x, tx_m, ty_m, jet.y1[0], jet.y2[0], jet.y3[0], jet.y3[1],
                *q_real, *v, *F, e1, e2, e3, *sat, violation,
            )  # fmt: skip
        )
        x, clamped = integrate(params, geom, x, q_real, dist, T, t, substeps, rhs)
        clamp_count += clamped

    return RunResult(records, summarize(records, mode, sat_count, violation_count, clamp_count, switches), switches)


def _rms(values):
    return math.sqrt(sum(v * v for v in values) / len(values))


def summarize(records, mode, sat_count, violation_count, clamp_count=0, switches=()):
    summary = {
        "mode": mode,
        "samples": len(records),
        "saturation_count": sat_count,
        "violation_count": violation_count,
        "pressure_clamp_count": clamp_count,
        "allocation_switches": len(switches),
    }
    if not records:
        summary.update(
            metrics_defined=False,
            rms_theta_x_deg=float("nan"),
            rms_theta_y_deg=float("nan"),
            rms_true_theta_x_deg=float("nan"),
            rms_true_theta_y_deg=float("nan"),
        )
        return summary
    summary.update(
        metrics_defined=True,
        rms_theta_x_deg=math.degrees(_rms([r.e1 for r in records])),
        rms_theta_y_deg=math.degrees(_rms([r.e2 for r in records])),
        rms_true_theta_x_deg=math.degrees(_rms([r.theta_x - r.ref_theta_x for r in records])),
        rms_true_theta_y_deg=math.degrees(_rms([r.theta_y - r.ref_theta_y for r in records])),
    )
    return summary


# -- output ------------------------------------------------------------------


def write_telemetry(records, fh) -> None:
    fh.write("# units: " + ",".join(RECORD_UNITS) + "\n")
    fh.write(",".join(RECORD_FIELDS) + "\n")
    for r in records:
        fh.write(",".join(repr(v if isinstance(v, int) else float(v)) for v in asdict(r).values()) + "\n")


def format_summary(summary: dict) -> str:
    lines = []
    for key, value in summary.items():
        if isinstance(value, bool):
            value = str(value).lower()
        elif isinstance(value, float):
            value = repr(float(value))
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"
