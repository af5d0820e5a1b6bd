"""Command-line entry point.

    pamflat simulate [--config PATH] [--mode M[,M...]] [--seed N] [--out DIR] [--duration S] [--jobs N]
    pamflat verify [--config PATH] [--grid-n N]
    pamflat sweep-determinant [--config PATH] [--grid-n N] [--out DIR]

Exit codes: 0 success, 1 verification failed, 2 configuration parse error,
3 validation error, 4 runtime abort.
"""

from __future__ import annotations

import argparse
import io
import logging
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import checks
from .config import ExperimentConfig, load_config
from .errors import ConfigError, ModelError, ValidationError
from .loop import MODES, format_summary, run_experiment, write_telemetry

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_VALIDATION = 3
EXIT_RUNTIME = 4

log = logging.getLogger("pamflat")


def atomic_write(path, text: str) -> None:
    """Write to a temporary sibling, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    over = {}
    if getattr(args, "seed", None) is not None:
        over["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        over["out_dir"] = args.out
    if getattr(args, "duration", None) is not None:
        over["reference"] = replace(cfg.reference, duration=args.duration)
    return cfg.with_overrides(**over).validate() if over else cfg.validate()


def _modes(args, cfg) -> list:
    if not args.mode:
        return [cfg.mode]
    modes = [m.strip() for m in args.mode.split(",") if m.strip()]
    bad = [m for m in modes if m not in MODES]
    if bad:
        raise ValidationError(f"unknown mode(s) {bad}; choose from {MODES}")
    return modes


def _run_one(cfg):
    result = run_experiment(cfg)
    buf = io.StringIO()
    write_telemetry(result.records, buf)
    return cfg.mode, buf.getvalue(), format_summary(result.summary)


def cmd_simulate(args) -> int:
    cfg = _load(args)
    runs = [cfg.with_overrides(mode=m) for m in _modes(args, cfg)]
    if args.jobs > 1 and len(runs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            outputs = list(pool.map(_run_one, runs))
    else:
        outputs = [_run_one(c) for c in runs]
    # every run finished; only now touch the output directory
    out = Path(cfg.out_dir)
    for mode, telemetry, summary in outputs:
        atomic_write(out / f"telemetry_{mode}.csv", telemetry)
        atomic_write(out / f"summary_{mode}.txt", summary)
        print(f"[{mode}]")
        print(summary, end="")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _load(args)
    results = checks.run_all(cfg, grid_n=args.grid_n, seed=cfg.seed)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    print(f"verify: {len(results) - len(failed)}/{len(results)} suites passed")
    return EXIT_VERIFY_FAILED if failed else EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args)
    angles, M = checks.m_grid(cfg.geometry, args.grid_n)
    lines = ["theta_x_deg,theta_y_deg,m"]
    for i, ax in enumerate(angles):
        for j, ay in enumerate(angles):
            lines.append(f"{float(ax)!r},{float(ay)!r},{float(M[i, j])!r}")
    path = Path(cfg.out_dir) / "determinant_sweep.csv"
    atomic_write(path, "\n".join(lines) + "\n")
    m_min = float(M.min())
    print(f"grid={args.grid_n}x{args.grid_n} min_m={m_min!r} positive={str(m_min > 0).lower()} file={path}")
    return EXIT_OK if m_min > 0 else EXIT_VERIFY_FAILED


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pamflat", description="Three-muscle platform: flatness control simulator.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="INI configuration file (defaults if omitted)")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")

    p = sub.add_parser("simulate", help="run closed-loop experiments")
    common(p)
    p.add_argument("--mode", help=f"one or more of {', '.join(MODES)}, comma separated")
    p.add_argument("--duration", type=float, help="reference duration in seconds")
    p.add_argument("--jobs", type=int, default=1, help="parallel runs when several modes are given")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the numerical verification suites")
    common(p)
    p.add_argument("--grid-n", type=int, default=201)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep-determinant", help="write m(theta_x, theta_y) over the +-15 deg grid")
    common(p)
    p.add_argument("--grid-n", type=int, default=201)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * args.verbose
    logging.basicConfig(level=max(level, logging.DEBUG), format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "grid_n", 2) < 2:
        print("error [validation]: --grid-n must be >= 2", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error [config-parse]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValidationError as exc:
        print(f"error [validation]: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ModelError, OSError) as exc:
        print(f"error [runtime-abort]: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
