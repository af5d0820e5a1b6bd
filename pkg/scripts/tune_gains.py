"""Coordinate-descent tuning of the PI gains for both closed-loop modes.

Both modes get the same budget and objective: the mean measured RMS angle
error (degrees) on a short prefix of the default program, with a large
penalty for saturation, pressure violations or divergence. This mirrors an
empirical bench tuning where only the quantized sensor is visible.

    python scripts/tune_gains.py --duration 10 --sweeps 2
"""

from __future__ import annotations

import argparse
import json
import math
import time
from dataclasses import replace

from pamflat.config import ExperimentConfig
from pamflat.errors import PamError
from pamflat.loop import PiGains, PiOnlyGains, run_experiment
from pamflat.reference import default_program

PENALTY = 10.0
FACTORS = (0.25, 0.5, 2.0, 4.0)


def objective(cfg) -> float:
    try:
        s = run_experiment(cfg).summary
    except PamError:
        return math.inf
    cost = 0.5 * (s["rms_theta_x_deg"] + s["rms_theta_y_deg"])
    if s["saturation_count"] or s["violation_count"]:
        cost += PENALTY
    return cost


def flatness_cfg(base, v):
    kp_a, ki_a, kp_f, ki_f = v
    gains = PiGains((kp_a, kp_a, kp_f), (ki_a, ki_a, ki_f), base.pi.limit)
    return replace(base, mode="flatness-pi", pi=gains)


def pi_only_cfg(base, v):
    kp_a, ki_a, kp_p, ki_p = v
    angle = PiGains((kp_a, kp_a), (ki_a, ki_a), base.pi_only.angle.limit)
    pressure = PiGains((kp_p,) * 3, (ki_p,) * 3, base.pi_only.pressure.limit)
    return replace(base, mode="pi-only", pi_only=PiOnlyGains(angle, pressure))


def descend(make, base, start, sweeps, log):
    best = list(start)
    best_cost = objective(make(base, best))
    log(f"start {best} -> {best_cost:.5f}")
    for sweep in range(sweeps):
        for i in range(len(best)):
            for f in FACTORS:
                trial = list(best)
                trial[i] *= f
                cost = objective(make(base, trial))
                log(f"sweep {sweep} coord {i} x{f}: {cost:.5f}")
                if cost < best_cost:
                    best, best_cost = trial, cost
    return best, best_cost


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--duration", type=float, default=10.0)
    ap.add_argument("--sweeps", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="tuned_gains.json")
    args = ap.parse_args(argv)

    base = ExperimentConfig(reference=default_program(args.duration), seed=args.seed)
    t0 = time.time()

    def log(msg):
        print(f"[{time.time() - t0:7.1f}s] {msg}", flush=True)

    p, d = base.pi, base.pi_only
    results = {}
    for name, make, start in (
        ("flatness-pi", flatness_cfg, (p.kp[0], p.ki[0], p.kp[2], p.ki[2])),
        ("pi-only", pi_only_cfg, (d.angle.kp[0], d.angle.ki[0], d.pressure.kp[0], d.pressure.ki[0])),
    ):
        log(f"tuning {name}")
        best, cost = descend(make, base, start, args.sweeps, log)
        results[name] = {"gains": best, "cost_deg": cost}
        log(f"{name} best {best} cost {cost:.5f}")

    with open(args.out, "w") as fh:
        json.dump(results, fh, indent=2)
    print(json.dumps(results, indent=2))


if __name__ == "__main__":
    main()
