import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pamflat import muscle as mm
from pamflat.allocation import allocate, f3_reference, f3_reference_rate, feasible_window
from pamflat.errors import InfeasibleWindowError

# mpmath oracle (50 digits) at eps = (0.08, 0.10, 0.12), default muscle
EPS = (0.08, 0.10, 0.12)
LOWS = (-253.219997222427101923486308445, -242.921612756540003698248836630, -221.724295906556099103991759183)
HIGHS = (1217.66776896503610197764918124, 1141.89157985905062387588276413, 1077.96547205922729940303369126)
MIDPOINT = 428.120588076335600149520966039

angle = st.floats(math.radians(-10), math.radians(10))


def test_bounds_match_oracle(params):
    for e, lo, hi in zip(EPS, LOWS, HIGHS):
        r = mm.force_range(params, e)
        assert r[0] == pytest.approx(lo, rel=1e-12)
        assert r[1] == pytest.approx(hi, rel=1e-12)


def test_window_and_midpoint_match_oracle(params):
    w = feasible_window(params, *EPS)
    assert (w.idx_min, w.idx_max) == (3, 3)
    assert w.f_min == pytest.approx(LOWS[2], rel=1e-12)
    assert w.f_max == pytest.approx(HIGHS[2], rel=1e-12)
    assert f3_reference(params, *EPS) == pytest.approx(MIDPOINT, rel=1e-12)


def test_equal_contractions_give_single_muscle_midpoint(params):
    for e in (0.0, 0.05, 0.15):
        lo, hi = mm.force_range(params, e)
        assert f3_reference(params, e, e, e) == pytest.approx(0.5 * (lo + hi), rel=1e-14)


def test_bounds_monotone_in_contraction(params):
    eps = np.linspace(-0.03, 0.21, 50)
    highs = [mm.force_range(params, e)[1] for e in eps]
    assert np.all(np.diff(highs) < 0)


def test_infeasible_window_reports_bounds(params):
    with pytest.raises(InfeasibleWindowError) as info:
        feasible_window(params, -0.03, 0.35, 0.10)
    err = info.value
    assert err.f_min > err.f_max
    assert (err.idx_min, err.idx_max) == (1, 2)


@given(angle, angle)
def test_midpoint_inside_every_interval(tx, ty):
    from pamflat.config import ExperimentConfig

    cfg = ExperimentConfig()
    eps, _ = mm.contractions(cfg.muscle, cfg.geometry, tx, ty)
    ranges = [mm.force_range(cfg.muscle, e) for e in eps]
    if max(r[0] for r in ranges) > min(r[1] for r in ranges):
        with pytest.raises(InfeasibleWindowError):
            allocate(cfg.muscle, cfg.geometry, tx, ty)
        return
    a = allocate(cfg.muscle, cfg.geometry, tx, ty)
    for lo, hi in ranges:
        assert lo <= a.F3 <= hi
    assert a.window.contains(a.F3)


def test_window_feasible_on_reference_envelope(params, geom):
    # the default program stays within +-5 deg on each axis
    for tx in np.radians(np.linspace(-5, 5, 41)):
        for ty in np.radians(np.linspace(-5, 5, 41)):
            assert allocate(params, geom, tx, ty).window.width > 0


def test_stationary_pose_has_zero_rate(params, geom):
    assert allocate(params, geom, 0.03, -0.05).F3_rate == 0.0
    assert f3_reference_rate(params, geom, 0.1, 0.1, 0.0, 0.0) == 0.0


def test_rate_matches_time_fd(params, geom):
    rng = np.random.default_rng(9)
    h = 1e-6
    for _ in range(200):
        tx, ty = rng.uniform(-0.15, 0.15, 2)
        wx, wy = rng.uniform(-1.0, 1.0, 2)
        a0 = allocate(params, geom, tx, ty, wx, wy)
        ap = allocate(params, geom, tx + h * wx, ty + h * wy)
        am = allocate(params, geom, tx - h * wx, ty - h * wy)
        if (ap.window.idx_min, ap.window.idx_max) != (am.window.idx_min, am.window.idx_max):
            continue  # active bound switches inside the stencil
        fd = (ap.F3 - am.F3) / (2 * h)
        assert a0.F3_rate == pytest.approx(fd, rel=1e-6, abs=1e-6 * max(1.0, abs(a0.F3)))
