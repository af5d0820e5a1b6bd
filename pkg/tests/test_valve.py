import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pamflat.errors import ConfigError, UnreachableFlowError, ValidationError
from pamflat.valve import (
    AnalyticValve,
    PolynomialValve,
    check_valve,
    command,
    flow,
    invert_flow,
    load_polynomial_csv,
)

VALVE = AnalyticValve()
pressures = st.floats(1.25e5, 7e5)
voltages = st.floats(0.0, 10.0)


def test_neutral_closes():
    for P in (1.3e5, 4e5, 7.9e5):
        assert flow(VALVE, P, VALVE.v0) == 0.0


def test_no_charging_at_supply():
    assert flow(VALVE, VALVE.P_s, 8.0) == 0.0


def test_hand_value():
    # oracle: mpmath, 1e-3 * 2 * 3.5e5 / 6.987e5
    assert flow(VALVE, 4.5e5, 7.0) == pytest.approx(0.00100186059825390010018605982539, rel=1e-13)


def test_invert_zero_is_neutral():
    assert invert_flow(VALVE, 3e5, 0.0) == VALVE.v0


@given(pressures, voltages)
def test_roundtrip_voltage(P, v):
    assert invert_flow(VALVE, P, flow(VALVE, P, v)) == pytest.approx(v, abs=1e-9)


def test_roundtrip_random_points():
    rng = np.random.default_rng(7)
    worst = 0.0
    for P, v in zip(rng.uniform(1.25e5, 7e5, 1000), rng.uniform(0, 10, 1000)):
        worst = max(worst, abs(invert_flow(VALVE, P, flow(VALVE, P, v)) - v))
    assert worst <= 1e-9


def test_unreachable_flow():
    P = 4e5
    with pytest.raises(UnreachableFlowError) as exc:
        invert_flow(VALVE, P, flow(VALVE, P, 10.0) * 1.01)
    assert exc.value.v_boundary == VALVE.v_max
    with pytest.raises(UnreachableFlowError) as exc:
        invert_flow(VALVE, P, flow(VALVE, P, 0.0) * 1.01)
    assert exc.value.v_boundary == VALVE.v_min


def test_command_saturates_to_boundary():
    P = 4e5
    v, sat = command(VALVE, P, 1.0)
    assert sat and v == VALVE.v_max
    v, sat = command(VALVE, P, 2e-4)
    assert not sat
    assert abs(flow(VALVE, P, v) - 2e-4) <= 1e-9


def test_voltage_range_checked():
    with pytest.raises(ValidationError):
        flow(VALVE, 3e5, 10.5)


def test_continuity_across_neutral():
    P = 3e5
    for dv in (1e-6, 1e-9):
        assert abs(flow(VALVE, P, VALVE.v0 + dv)) < 1e-3 * dv * 1.01
        assert abs(flow(VALVE, P, VALVE.v0 - dv)) < 1e-3 * dv * 1.01


def test_monotonicity_sweep_passes_default():
    check_valve(VALVE, 1.25e5, 7e5)


def _linear_table_valve():
    # q = 1e-4 (v - 5) * (1 - P / 1e6): closed at v0, increasing in v for P < 1e6
    coeffs = ((-5e-4, 5e-10), (1e-4, -1e-10))
    return PolynomialValve(coeffs=coeffs)


def test_polynomial_flow_and_bisection():
    valve = _linear_table_valve()
    P = 4e5
    assert flow(valve, P, 5.0) == pytest.approx(0.0, abs=1e-18)
    assert flow(valve, P, 7.0) == pytest.approx(1e-4 * 2 * 0.6, rel=1e-12)
    for q in (-2e-4, 0.0, 1.3e-4):
        v = invert_flow(valve, P, q)
        assert abs(flow(valve, P, v) - q) <= 1e-9
    with pytest.raises(UnreachableFlowError):
        invert_flow(valve, P, 1.0)
    check_valve(valve, 1.25e5, 7e5)


def test_monotonicity_violation_detected():
    bad = PolynomialValve(coeffs=((0.0, 0.0), (0.0, 0.0), (1e-4, 0.0)), v0=5.0)  # q = 1e-4 v^2: not closed at v0
    with pytest.raises(ValidationError):
        check_valve(bad, 1.25e5, 7e5)
    # closed at v0 but decreasing below it
    dip = PolynomialValve(coeffs=((2.5e-3,), (-1e-3,), (1e-4,)))
    with pytest.raises(ValidationError):
        check_valve(dip, 1.25e5, 7e5)


def test_csv_loader(tmp_path):
    path = tmp_path / "valve.csv"
    path.write_text("# degrees: 1 1\n0,0,-5e-4\n0,1,5e-10\n1,0,1e-4\n1,1,-1e-10\n")
    valve = load_polynomial_csv(path)
    assert valve.coeffs == _linear_table_valve().coeffs

    path.write_text("# degrees: 1 1\n0,0,-5e-4\n1,0,1e-4\n")
    assert load_polynomial_csv(path).coeffs == ((-5e-4, 0.0), (1e-4, 0.0))


@pytest.mark.parametrize(
    "text",
    [
        "0,0,1\n",
        "# degrees: 1 1\n0,0,1\n0,0,2\n",
        "# degrees: 1 1\n2,0,1\n",
        "# degrees: 1 1\n0,0\n",
        "# degrees: 1 1\n0,x,1\n",
        "# degrees: 1\n",
    ],
)
def test_csv_loader_errors(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(ConfigError):
        load_polynomial_csv(path)


def test_valve_validation():
    with pytest.raises(ValidationError):
        AnalyticValve(k_q=0.0)
    with pytest.raises(ValidationError):
        AnalyticValve(v0=11.0)
    with pytest.raises(ValidationError):
        AnalyticValve(P_s=1e5)
    assert math.isfinite(flow(VALVE, 2e5, 3.0))
