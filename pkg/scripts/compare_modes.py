"""Paired flatness+PI vs PI-only runs on the identical setup.

Prints measured (quantized) and true-state RMS errors and their ratios.
With ``--gamma`` the sinusoidal disturbance amplitude is swept, which shows
how far the measured ratio is held up by the quantization floor.

    python scripts/compare_modes.py --duration 60
    python scripts/compare_modes.py --duration 20 --gamma 0.5 2 5
"""

from __future__ import annotations

import argparse
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from pamflat.config import ExperimentConfig, load_config
from pamflat.loop import run_experiment


def _summary(cfg):
    return run_experiment(cfg).summary


def paired(cfg, jobs=2):
    cfgs = [cfg.with_overrides(mode="flatness-pi"), cfg.with_overrides(mode="pi-only")]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_summary, cfgs))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config")
    ap.add_argument("--duration", type=float, default=60.0)
    ap.add_argument("--gamma", type=float, nargs="*", help="disturbance amplitudes (N m) to sweep")
    args = ap.parse_args(argv)

    base = load_config(args.config) if args.config else ExperimentConfig()
    base = replace(base, reference=replace(base.reference, duration=args.duration)).validate()
    gammas = args.gamma or [base.disturbance.gamma_x]

    print("gamma  meas_flat  meas_pi  ratio_meas  true_flat  true_pi  ratio_true  sat_flat  sat_pi")
    for g in gammas:
        cfg = replace(base, disturbance=replace(base.disturbance, gamma_x=g, gamma_y=g))
        f, p = paired(cfg)
        mf = 0.5 * (f["rms_theta_x_deg"] + f["rms_theta_y_deg"])
        mp = 0.5 * (p["rms_theta_x_deg"] + p["rms_theta_y_deg"])
        tf = 0.5 * (f["rms_true_theta_x_deg"] + f["rms_true_theta_y_deg"])
        tp = 0.5 * (p["rms_true_theta_x_deg"] + p["rms_true_theta_y_deg"])
        print(
            f"{g:5.2f}  {mf:9.4f}  {mp:7.4f}  {mf / mp:10.3f}  {tf:9.4f}  {tp:7.4f}  {tf / tp:10.3f}"
            f"  {f['saturation_count']:8d}  {p['saturation_count']:6d}"
        )


if __name__ == "__main__":
    main()
