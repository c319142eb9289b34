#!/usr/bin/env python3
"""Train a linear classifier on loss = 1 - accuracy, which has no gradient.

Optimizes the piecewise-constant training error of sign(x . theta) on a
two-class Gaussian mixture with the zeroth-order optimizer, then reports
held-out accuracy per seed.

Usage:
    python3 scripts/train_nondifferentiable.py
    python3 scripts/train_nondifferentiable.py --dim 16 --steps 8000
"""

import argparse
import sys

import numpy as np

from zoadamu import (
    AnnealConfig,
    OptimizerConfig,
    accuracy_objective,
    gaussian_blobs,
    run,
)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dim", type=int, default=8)
    parser.add_argument("--train-n", type=int, default=256)
    parser.add_argument("--held-n", type=int, default=512)
    parser.add_argument("--separation", type=float, default=4.0)
    parser.add_argument("--steps", type=int, default=5000)
    parser.add_argument("--eta", type=float, default=1e-3)
    parser.add_argument("--eps", type=float, default=0.1)
    parser.add_argument("--seeds", type=int, default=10)
    args = parser.parse_args()

    train = gaussian_blobs(args.train_n, args.dim, args.separation, seed=0)
    held = gaussian_blobs(args.held_n, args.dim, args.separation, seed=1_000_000)
    train_obj = accuracy_objective(train)
    held_obj = accuracy_objective(held)

    t2 = int(0.8 * args.steps)
    anneal = AnnealConfig(t1=args.steps // 10, t2=t2, t3=args.steps).validate()
    cfg = OptimizerConfig(eta=args.eta, eps=args.eps, anneal=anneal)

    finals = []
    for seed in range(args.seeds):
        theta0 = 0.01 * np.random.default_rng(seed).standard_normal(args.dim)
        before = 1.0 - held_obj.evaluate(theta0)
        state = run("zo-adamu", train_obj, theta0, cfg, seed=seed,
                    record_trace=False, max_steps=args.steps)
        after = 1.0 - held_obj.evaluate(state.theta)
        finals.append(after)
        print(f"seed {seed}: held-out accuracy {before:.3f} -> {after:.3f}", flush=True)

    finals = np.array(finals)
    print(f"\nmedian {np.median(finals):.3f}, "
          f">= 90% in {int((finals >= 0.9).sum())}/{args.seeds} seeds")
    return 0


if __name__ == "__main__":
    sys.exit(main())
