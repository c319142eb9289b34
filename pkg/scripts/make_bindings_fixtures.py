#!/usr/bin/env python3
"""Generate golden trajectories for the host-binding test suite.

Runs the optimizers natively on two losses whose float64 evaluation is
reproducible in any IEEE 754 language (only abs, add, subtract and
multiply), then freezes per-step seeds, checksums and hex-encoded
parameters into JSON. The binding tests replay the same runs through
the service boundary and require bit equality.
"""

import json
import os

import numpy as np

from zoadamu import AnnealConfig, Objective, OptimizerConfig, run
from zoadamu.serve import theta_to_hex

OUT_DIR = os.path.join(os.path.dirname(__file__), "..", "frontend", "test", "fixtures")

CONFIG = {"t1": 5, "t2": 40, "t3": 50, "eta": 0.05, "eps": 1e-3, "seed": 9}
STEPS = 40
KINDS = ("mezo", "zo-adamu", "zo-adamm")


def quad1d(t, _=None):
    x = float(t[0])
    return (x - 2.0) * (x - 2.0)


def function_a(t, _=None):
    return abs(float(t[0])) + abs(float(t[1]))


FIXTURES = {
    "quad1d": (Objective(name="quad1d", dim=1, evaluate=quad1d), np.array([0.25])),
    "function_a": (
        Objective(name="function_a", dim=2, evaluate=function_a),
        np.array([1.5, -2.25]),
    ),
}


def main() -> None:
    os.makedirs(OUT_DIR, exist_ok=True)
    anneal = AnnealConfig(
        t1=CONFIG["t1"], t2=CONFIG["t2"], t3=CONFIG["t3"]
    ).validate()
    cfg = OptimizerConfig(eta=CONFIG["eta"], eps=CONFIG["eps"], anneal=anneal)
    for name, (objective, theta0) in FIXTURES.items():
        runs = {}
        for kind in KINDS:
            state = run(kind, objective, theta0.copy(), cfg,
                        seed=CONFIG["seed"], max_steps=STEPS)
            runs[kind] = {
                "steps": [
                    {
                        "step": rec.step,
                        "seed": rec.seed,
                        "loss_plus": rec.loss_plus,
                        "loss_minus": rec.loss_minus,
                        "theta_checksum": rec.theta_checksum,
                        "theta_hex": theta_to_hex(rec.theta),
                    }
                    for rec in state.trace
                ],
                "final_theta_hex": theta_to_hex(state.theta),
            }
        payload = {
            "loss": name,
            "config": CONFIG,
            "theta0_hex": theta_to_hex(theta0),
            "dim": int(theta0.shape[0]),
            "runs": runs,
        }
        path = os.path.join(OUT_DIR, f"{name}.json")
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        print(f"wrote {os.path.relpath(path)}")


if __name__ == "__main__":
    main()
