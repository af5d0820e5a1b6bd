import csv
import math

import pytest

from pamflat import cli
from pamflat.loop import RECORD_FIELDS


def _ini(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_simulate_writes_outputs(tmp_path, capsys):
    out = tmp_path / "out"
    rc = cli.main(["simulate", "--duration", "0.05", "--out", str(out), "--mode", "flatness-pi,pi-only"])
    assert rc == cli.EXIT_OK
    for mode in ("flatness-pi", "pi-only"):
        rows = list(csv.reader((out / f"telemetry_{mode}.csv").read_text().splitlines()[1:]))
        assert tuple(rows[0]) == RECORD_FIELDS and len(rows) == 51
        summary = dict(line.split("=", 1) for line in (out / f"summary_{mode}.txt").read_text().splitlines())
        assert summary["mode"] == mode and summary["samples"] == "50"
        assert math.isfinite(float(summary["rms_theta_x_deg"]))
    assert "[pi-only]" in capsys.readouterr().out
    assert not [p for p in out.iterdir() if p.name.startswith(".")]


def test_simulate_parallel_matches_serial(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["simulate", "--duration", "0.03", "--mode", "flatness-pi,flatness-only"]
    assert cli.main(args + ["--out", str(a)]) == 0
    assert cli.main(args + ["--out", str(b), "--jobs", "2"]) == 0
    for name in ("telemetry_flatness-pi.csv", "summary_flatness-only.txt"):
        assert (a / name).read_text() == (b / name).read_text()


def test_config_parse_error_exit(tmp_path, capsys):
    rc = cli.main(["simulate", "--config", _ini(tmp_path, "[muscle\nl0=1\n")])
    assert rc == cli.EXIT_CONFIG
    assert "config-parse" in capsys.readouterr().err


def test_validation_exit_and_no_output(tmp_path, capsys):
    out = tmp_path / "out"
    cfg = _ini(tmp_path, f"[muscle]\ntheta0_deg = 50\n[run]\nout = {out}\n")
    assert cli.main(["simulate", "--config", cfg]) == cli.EXIT_VALIDATION
    assert "vanishes" in capsys.readouterr().err
    assert not out.exists()


def test_unknown_mode_is_validation(tmp_path):
    assert cli.main(["simulate", "--mode", "bang-bang", "--out", str(tmp_path)]) == cli.EXIT_VALIDATION


def test_runtime_abort_leaves_no_partial_output(tmp_path, capsys):
    # a huge constant torque drives the platform past the contraction range
    out = tmp_path / "out"
    text = f"[disturbance]\nkind = constant\ngamma_x = 400\ngamma_y = 0\nviscous = 0\n[run]\nout = {out}\n"
    rc = cli.main(["simulate", "--config", _ini(tmp_path, text), "--duration", "1.0", "--mode", "flatness-only,pi-only"])
    assert rc == cli.EXIT_RUNTIME
    assert "runtime-abort" in capsys.readouterr().err
    assert not out.exists()


def test_sweep_minimal_grid(tmp_path, capsys):
    rc = cli.main(["sweep-determinant", "--grid-n", "2", "--out", str(tmp_path)])
    assert rc == cli.EXIT_OK
    rows = list(csv.DictReader((tmp_path / "determinant_sweep.csv").open()))
    assert len(rows) == 4
    assert {float(r["theta_x_deg"]) for r in rows} == {-15.0, 15.0}
    assert all(float(r["m"]) > 0 for r in rows)
    assert "positive=true" in capsys.readouterr().out


def test_sweep_grid_too_small(tmp_path):
    assert cli.main(["sweep-determinant", "--grid-n", "1", "--out", str(tmp_path)]) == cli.EXIT_VALIDATION
    assert not (tmp_path / "determinant_sweep.csv").exists()


def test_atomic_write_replaces(tmp_path):
    p = tmp_path / "sub" / "f.txt"
    cli.atomic_write(p, "one")
    cli.atomic_write(p, "two")
    assert p.read_text() == "two" and len(list(p.parent.iterdir())) == 1


def test_parser_requires_command():
    with pytest.raises(SystemExit):
        cli.main([])
