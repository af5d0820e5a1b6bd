import math
from pathlib import Path

import pytest

from pamflat.config import ExperimentConfig, load_config, parse_config
from pamflat.errors import ConfigError, ValidationError
from pamflat.valve import PolynomialValve

ROOT = Path(__file__).resolve().parents[1]


def test_empty_text_gives_defaults():
    assert parse_config("") == ExperimentConfig()


def test_shipped_default_ini_matches_dataclasses():
    assert load_config(ROOT / "configs" / "default.ini") == ExperimentConfig()


def test_shipped_examples_validate():
    for path in sorted((ROOT / "configs").glob("*.ini")):
        load_config(path).validate()


def test_degrees_converted():
    cfg = parse_config("[muscle]\ntheta0_deg = 30\n[platform]\nphi_deg = -90, 30, 150\n[sensor]\nquantization_deg = 0.36\n")
    assert cfg.muscle.theta0 == pytest.approx(math.radians(30))
    assert cfg.geometry.phi[1] == pytest.approx(math.radians(30))
    assert cfg.sensors.quantization == pytest.approx(math.radians(0.36))


def test_inline_comments_and_case_sensitive_keys():
    cfg = parse_config("[muscle]\nK = 2.5e7   # stiffness\nD0 = 0.02 ; diameter\n")
    assert cfg.muscle.K == 2.5e7 and cfg.muscle.D0 == 0.02


def test_reference_sinusoids_and_waypoints():
    text = """
[reference]
duration = 8
x_sinusoid_1 = 3, 0.2, 0
x_sinusoid_2 = 1, 0.5, 1.0
y_waypoints = 0:0, 2:4, 6:-2, 8:0
"""
    cfg = parse_config(text)
    assert len(cfg.reference.x.sinusoids) == 2
    assert cfg.reference.x.sinusoids[0].amplitude == pytest.approx(math.radians(3))
    assert cfg.reference.y.piecewise is not None
    assert cfg.reference.y.derivatives(2.0)[0] == pytest.approx(math.radians(4))
    cfg.validate()


def test_disturbance_table():
    cfg = parse_config("[disturbance]\nkind = table\ntable = 0:0:0, 1:0.2:-0.1, 2:0:0\nviscous = 0\n")
    assert cfg.disturbance.table[1] == (1.0, 0.2, -0.1)


@pytest.mark.parametrize(
    "text",
    [
        "[bogus]\nx = 1\n",
        "[muscle]\nl_zero = 0.3\n",
        "[run]\nseed = one\n",
        "[muscle]\nl0 = abc\n",
        "[platform]\nphi_deg = 0, 1\n",
        "[valve]\nkind = magic\n",
        "[valve]\nkind = polynomial-table\n",
        "no section header\n",
        "[reference]\nx_sinusoid_1 = 1, 2\n",
    ],
)
def test_parse_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.ini")


@pytest.mark.parametrize(
    "text",
    [
        "[run]\nmode = bang-bang\n",
        "[run]\nsubsteps = 0\n",
        "[muscle]\ntheta0_deg = 50\n",
        "[reference]\nx_sinusoid_1 = 20, 0.1, 0\n",
    ],
)
def test_validation_errors(text):
    with pytest.raises(ValidationError):
        parse_config(text).validate()


def test_polynomial_table_relative_path(tmp_path):
    (tmp_path / "v.csv").write_text("# degrees: 1 1\n0,0,-5e-4\n0,1,5e-10\n1,0,1e-4\n1,1,-1e-10\n")
    (tmp_path / "c.ini").write_text("[valve]\nkind = polynomial-table\ntable = v.csv\n")
    cfg = load_config(tmp_path / "c.ini")
    assert isinstance(cfg.valve, PolynomialValve)
