"""Numerical verification suites run by ``pamflat verify`` and the tests.

Every suite returns a :class:`SuiteResult` holding the worst residual seen
and the tolerance it was judged against.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from . import flatness as fl
from . import muscle as mm
from .allocation import allocate, f3_reference
from .loop import SensorModel, integrate, run_experiment
from .platform import Disturbance
from .reference import sample
from .valve import check_valve, flow, invert_flow

SWEEP_LIMIT_DEG = 15.0
M_CENTER_TOL = 1e-12
ZERO_TOL = 1e-8
INDEX_ROW_RTOL = 1e-6
DET_RTOL = 1e-10
ROUNDTRIP_RTOL = 1e-6
VALVE_TOL = 1e-9
POLYTROPIC_RTOL = 1e-5
RICHARDSON_TARGET = 16.0
RICHARDSON_BAND = 0.2
FD_TIME_STEP = 1e-6  # s


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    worst: float
    tol: float
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        text = f"{verdict} {self.name}: worst={self.worst:.3e} tol={self.tol:.1e} ({self.seconds:.2f}s)"
        return text + (f" {self.detail}" if self.detail else "")


def _timed(fn):
    def wrapper(*args, **kw):
        t0 = time.perf_counter()
        res = fn(*args, **kw)
        return replace(res, seconds=time.perf_counter() - t0)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _normwise(err, ref) -> float:
    """max|err| / max|ref|, robust to zero crossings of the reference."""
    scale = float(np.max(np.abs(ref)))
    return float(np.max(np.abs(err))) / scale if scale > 0 else float(np.max(np.abs(err)))


# -- determinant -------------------------------------------------------------


def m_grid(geom, n: int = 201, limit_deg: float = SWEEP_LIMIT_DEG):
    """(angles_deg, M) with M[i, j] = m(theta_x = a[i], theta_y = a[j])."""
    if n < 2:
        raise ValueError("grid needs at least 2 points per axis")
    a = np.linspace(-limit_deg, limit_deg, n)
    tx, ty = np.meshgrid(np.radians(a), np.radians(a), indexing="ij")
    return a, fl.angular_factor_m(geom, tx, ty)


@_timed
def determinant_sweep(geom, n: int = 201) -> SuiteResult:
    """m > 0 over the +-15 deg box and m(0, 0) = sqrt(3)/2."""
    _, M = m_grid(geom, n)
    center_err = abs(float(fl.angular_factor_m(geom, 0.0, 0.0)) - math.sqrt(3) / 2)
    m_min = float(M.min())
    ok = m_min > 0 and center_err <= M_CENTER_TOL
    return SuiteResult("determinant-sweep", ok, center_err, M_CENTER_TOL, f"min_m={m_min:.6f} grid={n}x{n}")


# -- characteristic-index certificate ---------------------------------------


def in_operating_box(params, geom, theta_x, theta_y) -> bool:
    """Angles within the platform limit and every contraction inside EPS_RANGE."""
    lim = geom.theta_limit
    if abs(theta_x) > lim or abs(theta_y) > lim:
        return False
    lo, hi = mm.EPS_RANGE
    return all(lo <= mm.contraction(params, geom, theta_x, theta_y, i) <= hi for i in (1, 2, 3))


def random_states(params, geom, n, rng, omega_max=1.0):
    """Uniform samples of the operating box (rejection on the contraction range)."""
    lim = geom.theta_limit
    out = np.empty((n, fl.STATE_DIM))
    filled = 0
    while filled < n:
        tx, ty = rng.uniform(-lim, lim, 2)
        if not in_operating_box(params, geom, tx, ty):
            continue
        out[filled, 0:2] = tx, ty
        out[filled, 2:4] = rng.uniform(-omega_max, omega_max, 2)
        out[filled, 4:7] = rng.uniform(params.P_min_abs, params.P_max_abs, 3)
        filled += 1
    return out


@_timed
def lie_certificate(params, geom, n: int = 1000, seed: int = 0) -> SuiteResult:
    """Index pattern (3, 3, 1) by directional FD along each g_j, plus the det identity.

    Below the index every L_{g_j} must vanish (absolute ZERO_TOL); at the index
    the FD row must match the analytic coupling row and be nonzero.
    """
    rng = np.random.default_rng(seed)
    k = geom.R_over_J
    levels = {
        0: (lambda z: z[0], lambda z: fl._drift(params, geom, z)[0], lambda z: fl.second_level(params, geom, z)[0]),
        1: (lambda z: z[1], lambda z: fl._drift(params, geom, z)[1], lambda z: fl.second_level(params, geom, z)[1]),
        2: (lambda z: fl.output_y3(params, geom, z),),
    }
    worst_zero = worst_row = worst_det = 0.0
    for x in random_states(params, geom, n, rng):
        x = x.tolist()
        g = fl.input_fields(params, geom, x)
        cm = fl.coupling_matrix(params, geom, x)
        D = cm.matrix
        for out, hs in levels.items():
            for h in hs[:-1]:
                for j in range(3):
                    worst_zero = max(worst_zero, abs(fl.lie_derivative(h, g[:, j], x)))
            row = np.array([fl.lie_derivative(hs[-1], g[:, j], x) for j in range(3)])
            scale = np.max(np.abs(D[out]))
            if not scale > ZERO_TOL:
                worst_row = math.inf
            worst_row = max(worst_row, float(np.max(np.abs(row - D[out]))) / scale)
        eps = [mm.contraction(params, geom, x[0], x[1], i) for i in (1, 2, 3)]
        H = [mm.force_gain_H(params, e) for e in eps]
        b = [mm.state_coeffs(params, e, 0.0)[1] for e in eps]
        expected = k * k * math.prod(H) * math.prod(b) * cm.m
        worst_det = max(worst_det, abs(float(np.linalg.det(D)) - expected) / abs(expected))
    ok = worst_zero <= ZERO_TOL and worst_row <= INDEX_ROW_RTOL and worst_det <= DET_RTOL
    detail = f"zero={worst_zero:.2e} index_row={worst_row:.2e} det={worst_det:.2e} states={n}"
    return SuiteResult("lie-certificate", ok, worst_det, DET_RTOL, detail)


# -- flat inversion ----------------------------------------------------------


def _clean_config(cfg, duration):
    return replace(
        cfg,
        mode="flatness-only",
        sensors=SensorModel(quantization=0.0, pressure_noise=0.0, period=cfg.sensors.period),
        disturbance=Disturbance(),
        reference=replace(cfg.reference, duration=duration),
    )


@_timed
def flat_roundtrip(cfg, duration: float = 10.0) -> SuiteResult:
    """flat_to_state(output jet of x) == x along a simulated trajectory."""
    params, geom = cfg.muscle, cfg.geometry
    records = run_experiment(_clean_config(cfg, duration)).records
    worst = 0.0
    for r in records:
        x = (r.theta_x, r.theta_y, r.omega_x, r.omega_y, r.P1, r.P2, r.P3)
        xr = fl.flat_to_state(params, geom, fl.output_jet_from_state(params, geom, x)).as_tuple()
        for a, b in zip(xr, x):
            if a != b:
                worst = max(worst, abs(a - b) / abs(b))
    return SuiteResult("flat-roundtrip", worst <= ROUNDTRIP_RTOL, worst, ROUNDTRIP_RTOL, f"samples={len(records)}")


# -- valve -------------------------------------------------------------------


@_timed
def valve_roundtrip(valve, params, n: int = 1000, seed: int = 0) -> SuiteResult:
    """flow(P, invert_flow(P, q)) == q on random reachable points, plus monotonicity."""
    check_valve(valve, params.P_min_abs, params.P_max_abs)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        P = float(rng.uniform(params.P_min_abs, params.P_max_abs))
        q_lo, q_hi = flow(valve, P, valve.v_min), flow(valve, P, valve.v_max)
        q = float(rng.uniform(q_lo, q_hi))
        worst = max(worst, abs(flow(valve, P, invert_flow(valve, P, q)) - q))
    return SuiteResult("valve-roundtrip", worst <= VALVE_TOL, worst, VALVE_TOL, f"points={n} monotone=yes")


# -- integrator --------------------------------------------------------------


def _rest_state(params, geom):
    """Static equilibrium at the level pose with the midpoint F3."""
    jet = fl.FlatJet((0.0,) * 4, (0.0,) * 4, (allocate(params, geom, 0.0, 0.0).F3, 0.0))
    return list(fl.flat_to_state(params, geom, jet).as_tuple())


def _sealed_start(params, geom, omega=(0.5, -0.3)):
    x = _rest_state(params, geom)
    x[2], x[3] = omega
    return x


@_timed
def polytropic_check(params, geom, duration: float = 1.0, dt: float = 1e-3, substeps: int = 10) -> SuiteResult:
    """P V^k stays constant for every sealed muscle (q = 0, no disturbance)."""
    x = _sealed_start(params, geom)

    def invariant(state):
        out = []
        for i in (1, 2, 3):
            eps = mm.contraction(params, geom, state[0], state[1], i)
            out.append(state[3 + i] * mm.volume(params, eps) ** params.k)
        return out

    c0 = invariant(x)
    worst = 0.0
    zero = (0.0, 0.0, 0.0)
    for n in range(int(round(duration / dt))):
        x, _ = integrate(params, geom, x, zero, None, dt, n * dt, substeps)
        worst = max(worst, max(abs(c / c_0 - 1.0) for c, c_0 in zip(invariant(x), c0)))
    return SuiteResult("polytropic", worst <= POLYTROPIC_RTOL, worst, POLYTROPIC_RTOL, f"horizon={duration}s")


@_timed
def richardson_check(params, geom, horizon: float = 0.1, h: float = 1e-4) -> SuiteResult:
    """Global error ratio (x_h - x_h/2) / (x_h/2 - x_h/4) of RK4 should be near 16."""
    x0 = _sealed_start(params, geom)
    q = (2e-4, -1e-4, 5e-5)
    scale = np.array([1.0, 1.0, 1.0, 1.0, params.P0, params.P0, params.P0])

    def run(step):
        n = int(round(horizon / step))
        x, _ = integrate(params, geom, x0, q, None, horizon, 0.0, n)
        return np.array(x) / scale

    a, b, c = run(h), run(h / 2), run(h / 4)
    ratio = float(np.max(np.abs(a - b)) / np.max(np.abs(b - c)))
    dev = abs(ratio / RICHARDSON_TARGET - 1.0)
    return SuiteResult("rk4-richardson", dev <= RICHARDSON_BAND, dev, RICHARDSON_BAND, f"ratio={ratio:.3f}")


# -- finite-difference derivative checks ------------------------------------


def _central(fn, t, h=FD_TIME_STEP):
    return (fn(t + h) - fn(t - h)) / (2 * h)


def derivative_checks(cfg, n: int = 400) -> list:
    """FD-vs-analytic checks of eps_dot, dV/deps, the F3 reference rate, the
    reference derivatives and L_f^3 along an uncontrolled trajectory.
    Returns a list of SuiteResults."""
    params, geom = cfg.muscle, cfg.geometry
    program = cfg.reference
    span = program.duration if program.duration > 0 else 10.0
    prog = replace(program, duration=span)
    ts = np.linspace(2 * FD_TIME_STEP, span - 2 * FD_TIME_STEP, n)
    results = []

    # contraction rate along the reference angle path
    err, ref = [], []
    for t in ts:
        for i in (1, 2, 3):

            def eps_of(tt, i=i):
                jx, jy = sample(prog, tt)
                return mm.contraction(params, geom, jx[0], jy[0], i)

            jx, jy = sample(prog, t)
            an = mm.contraction_rate(params, geom, jx[0], jy[0], jx[1], jy[1], i)
            err.append(_central(eps_of, t) - an)
            ref.append(an)
    w = _normwise(err, ref)
    results.append(SuiteResult("fd-eps-dot", w <= 1e-6, w, 1e-6))

    # volume slope
    eps = np.linspace(*mm.EPS_RANGE, n)
    h = 1e-5
    fd = (mm.volume(params, eps + h) - mm.volume(params, eps - h)) / (2 * h)
    an = mm.dV_deps(params, eps)
    w = _normwise(fd - an, an)
    results.append(SuiteResult("fd-volume-slope", w <= 1e-8, w, 1e-8))

    # F3 reference rate, skipping samples where the active bounds switch
    def active(t):
        jx, jy = sample(prog, t)
        win = allocate(params, geom, jx[0], jy[0]).window
        return win.idx_min, win.idx_max

    def f3_of(t):
        jx, jy = sample(prog, t)
        e = [mm.contraction(params, geom, jx[0], jy[0], i) for i in (1, 2, 3)]
        return f3_reference(params, *e)

    err, ref, skipped = [], [], 0
    for t in ts:
        if active(t - FD_TIME_STEP) != active(t + FD_TIME_STEP):
            skipped += 1
            continue
        jx, jy = sample(prog, t)
        an = allocate(params, geom, jx[0], jy[0], jx[1], jy[1]).F3_rate
        err.append(_central(f3_of, t) - an)
        ref.append(an)
    w = _normwise(err, ref)
    results.append(SuiteResult("fd-f3-rate", w <= 1e-6, w, 1e-6, f"skipped_switches={skipped}"))

    # reference derivatives of orders 1..3
    err, ref = [], []
    for t in ts:
        for axis in (prog.x, prog.y):
            d = axis.derivatives(t)
            for order in (1, 2, 3):
                fd_ = _central(lambda tt, o=order - 1, a=axis: a.derivatives(tt)[o], t)
                err.append(fd_ - d[order])
                ref.append(d[order])
    w = _normwise(err, ref)
    results.append(SuiteResult("fd-reference", w <= 1e-6, w, 1e-6))

    # L_f^3 against the time derivative of L_f^2 along an uncontrolled trajectory
    x = _sealed_start(params, geom)
    dt = 1e-3
    err, ref = [], []
    zero = (0.0, 0.0, 0.0)
    for k in range(200):
        x, _ = integrate(params, geom, x, zero, None, dt, k * dt, 10)
        h_t = 1e-5
        xp, _ = integrate(params, geom, x, zero, None, h_t, 0.0, 1)
        xm, _ = integrate(params, geom, x, zero, None, -h_t, 0.0, 1)
        sp, sm = fl.second_level(params, geom, xp), fl.second_level(params, geom, xm)
        lie = fl.lie_outputs(params, geom, x)
        err.extend([(sp[0] - sm[0]) / (2 * h_t) - lie.lf3_y1, (sp[1] - sm[1]) / (2 * h_t) - lie.lf3_y2])
        ref.extend([lie.lf3_y1, lie.lf3_y2])
    w = _normwise(err, ref)
    results.append(SuiteResult("fd-lie-third", w <= 1e-4, w, 1e-4))
    return results


# -- driver ------------------------------------------------------------------


def run_all(cfg, grid_n: int = 201, seed: int = 0) -> list:
    """Every verification suite on the configuration, in a fixed order."""
    params, geom = cfg.muscle, cfg.geometry
    results = [
        determinant_sweep(geom, grid_n),
        lie_certificate(params, geom, 1000, seed),
        flat_roundtrip(cfg),
        valve_roundtrip(cfg.valve, params, 1000, seed),
        polytropic_check(params, geom),
        richardson_check(params, geom),
    ]
    results.extend(derivative_checks(cfg))
    return results
