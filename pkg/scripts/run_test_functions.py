#!/usr/bin/env python3
"""Benchmark the optimizers on the six 2-D test functions.

For every function, runs each requested optimizer from the same uniformly
sampled starts and prints a success-rate table (loss below threshold at
any point of the run). A run that diverges to a non-finite loss counts
as a failure instead of aborting the sweep.

Usage:
    python3 scripts/run_test_functions.py
    python3 scripts/run_test_functions.py --optimizers zo-adamu,mezo,zo-adamm
"""

import argparse
import sys

import numpy as np

from zoadamu import AnnealConfig, OptimizerConfig, run, test_function
from zoadamu.errors import NonFiniteLoss

# per-function step-size / schedule calibration (threshold 1e-2, 20k steps)
CALIBRATION = {
    "a":          dict(eta=3e-3, t1=2000, t2=16000),
    "b":          dict(eta=3e-3, t1=2000, t2=16000),
    "c":          dict(eta=3e-3, t1=2000, t2=16000),
    "d":          dict(eta=3e-3, t1=2000, t2=16000),
    "beale":      dict(eta=2e-4, t1=500,  t2=19000),
    "rosenbrock": dict(eta=1e-4, t1=2000, t2=16000),
}
BUDGET = 20_000


def success_rate(kind, name, repeats, base_seed, threshold):
    f = test_function(name)
    low, high = f.search_domain
    hp = CALIBRATION[name]
    cfg = OptimizerConfig(
        eta=hp["eta"],
        anneal=AnnealConfig(t1=hp["t1"], t2=hp["t2"], t3=BUDGET).validate(),
    )
    wins = diverged = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for rep in range(repeats):
            theta0 = np.random.default_rng(base_seed + rep).uniform(low, high, size=f.dim)
            try:
                state = run(kind, f, theta0, cfg, seed=rep, record_trace=False,
                            monitor_loss=True, stop_below=threshold, max_steps=BUDGET)
            except NonFiniteLoss:
                diverged += 1
                continue
            if state.t < BUDGET or f.evaluate(state.theta) < threshold:
                wins += 1
    return wins / repeats, diverged


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--optimizers", default="zo-adamu,mezo",
                        help="comma-separated zeroth-order optimizer kinds")
    parser.add_argument("--repeats", type=int, default=20)
    parser.add_argument("--seed", type=int, default=1000,
                        help="base seed for start-point sampling")
    parser.add_argument("--threshold", type=float, default=1e-2)
    args = parser.parse_args()
    kinds = tuple(k.strip() for k in args.optimizers.split(",") if k.strip())

    for name in CALIBRATION:
        cells = []
        for kind in kinds:
            rate, diverged = success_rate(kind, name, args.repeats,
                                          args.seed, args.threshold)
            cell = f"{kind}={rate:.2f}"
            if diverged:
                cell += f" ({diverged} diverged)"
            cells.append(cell)
        print(f"{name:11s} " + "  ".join(cells), flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
