import math

import numpy as np
import pytest

from pamflat.errors import HorizonError, ValidationError
from pamflat.reference import (
    AxisSignal,
    Piecewise,
    PolySegment,
    ReferenceProgram,
    Sinusoid,
    assemble_jet,
    default_program,
    reference_point,
    sample,
    septic_segment,
    waypoints_to_piecewise,
)


def _fd(fun, t, h=1e-5):
    return (fun(t + h) - fun(t - h)) / (2 * h)


def test_sinusoid_derivatives_closed_form():
    s = Sinusoid(0.1, 0.5, 0.3)
    w = 2 * math.pi * 0.5
    t = 1.7
    d = s.derivatives(t)
    assert d[0] == pytest.approx(0.1 * math.sin(w * t + 0.3), rel=1e-15)
    assert d[3] == pytest.approx(-0.1 * w**3 * math.cos(w * t + 0.3), rel=1e-14)


def test_sinusoid_derivative_chain_fd():
    s = Sinusoid(0.08, 0.15, math.pi / 3)
    for t in np.linspace(0, 10, 13):
        for n in range(3):
            fd = _fd(lambda u: s.derivatives(u)[n], t)
            assert s.derivatives(t)[n + 1] == pytest.approx(fd, rel=1e-7, abs=1e-9)


def test_septic_endpoints():
    seg = septic_segment(1.0, 3.0, 0.02, -0.05)
    d0, d1 = seg.derivatives(1.0), seg.derivatives(3.0)
    assert d0[0] == pytest.approx(0.02, abs=1e-15)
    assert d1[0] == pytest.approx(-0.05, abs=1e-15)
    np.testing.assert_allclose(d0[1:], 0.0, atol=1e-15)
    np.testing.assert_allclose(d1[1:], 0.0, atol=1e-12)
    # symmetric shape: halfway value at the midpoint
    assert seg.derivatives(2.0)[0] == pytest.approx(-0.015, abs=1e-15)


def test_poly_segment_derivative_chain_fd():
    seg = septic_segment(0.0, 2.0, 0.0, 0.1)
    for t in (0.3, 1.0, 1.6):
        for n in range(3):
            fd = _fd(lambda u: seg.derivatives(u)[n], t)
            assert seg.derivatives(t)[n + 1] == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_waypoints_join_c3():
    pw = waypoints_to_piecewise([(0.0, 0.0), (1.0, 0.05), (2.5, -0.02), (4.0, 0.0)])
    for a, b in zip(pw.segments, pw.segments[1:]):
        np.testing.assert_allclose(a.derivatives(a.t1), b.derivatives(b.t0), atol=1e-12)
    assert pw.derivatives(-1.0) == (0.0, 0.0, 0.0, 0.0)
    assert pw.derivatives(9.0)[0] == pytest.approx(0.0, abs=1e-15)


def test_piecewise_rejects_broken_join():
    a = septic_segment(0.0, 1.0, 0.0, 0.1)
    b = septic_segment(1.0, 2.0, 0.2, 0.0)
    with pytest.raises(ValidationError):
        Piecewise((a, b))
    with pytest.raises(ValidationError):
        Piecewise((a, septic_segment(1.5, 2.0, 0.1, 0.0)))
    with pytest.raises(ValidationError):
        Piecewise((PolySegment(0.0, 1.0, (0.0, 1.0)),))


def test_program_bound_validation(geom):
    too_big = ReferenceProgram(x=AxisSignal((Sinusoid(math.radians(10), 0.1), Sinusoid(math.radians(6), 0.2))))
    with pytest.raises(ValidationError):
        too_big.validate(geom)
    default_program().validate(geom)


def test_horizon():
    prog = default_program(2.0)
    sample(prog, 0.0)
    sample(prog, 2.0)
    with pytest.raises(HorizonError):
        sample(prog, 2.1)
    with pytest.raises(HorizonError):
        sample(prog, -0.1)
    with pytest.raises(ValidationError):
        ReferenceProgram(duration=-1.0)


def test_jet_orders_and_values(params, geom):
    prog = default_program()
    jet = assemble_jet(params, geom, prog, 2.0)
    assert (len(jet.y1), len(jet.y2), len(jet.y3)) == (4, 4, 2)
    jx, jy = sample(prog, 2.0)
    assert jet.y1 == jx and jet.y2 == jy


def test_jet_force_rate_matches_fd(params, geom):
    prog = default_program()
    for t in np.linspace(0.5, 50, 25):
        jet, alloc = reference_point(params, geom, prog, t)
        jp, ap = reference_point(params, geom, prog, t + 1e-5)
        jm, am = reference_point(params, geom, prog, t - 1e-5)
        if (ap.window.idx_min, ap.window.idx_max) != (am.window.idx_min, am.window.idx_max):
            continue
        fd = (jp.y3[0] - jm.y3[0]) / 2e-5
        assert jet.y3[1] == pytest.approx(fd, rel=1e-5, abs=1e-5 * abs(jet.y3[0]))
        assert alloc.F3 == jet.y3[0]
