"""Experiment harness: config files in, trajectory CSVs + metrics JSON out.

Config files are flat ``key = value`` text ('#' starts a comment; lists
are comma-separated). See README for the full key reference.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ConfigError, EmptyGrid, MismatchedObjective
from .objectives import (
    Minibatch,
    Objective,
    TEST_FUNCTIONS,
    accuracy_objective,
    gaussian_blobs,
    load_dataset,
    logistic_loss,
    test_function,
)
from .optimizers import OPTIMIZER_KINDS, OptimizerConfig, run as run_optimizer
from .perturb import state_bytes
from .schedule import AnnealConfig, SchedulePreset

__all__ = ["ExperimentConfig", "parse_config", "load_config", "run", "compare", "grid_search"]

_PRESETS = {p.value: p for p in SchedulePreset}


@dataclass(frozen=True)
class ExperimentConfig:
    objective: str
    optimizers: tuple[str, ...]
    eta: float
    t1: int
    t2: int
    t3: int
    eps: float = 1e-3
    sigma: float = 1e-8
    batch_size: int = 1
    preset: SchedulePreset = SchedulePreset.TEXT_FINAL_PHASE
    phi_alpha: float = 1.0
    phi_beta1: float = 0.1
    phi_beta2: float = 1.5
    steps: Optional[int] = None  # defaults to t3
    seed: int = 0
    repeats: int = 1
    init: Optional[tuple[float, ...]] = None  # fixed start point; else sampled
    init_seed: Optional[int] = None  # defaults to seed
    threshold: float = 1e-2
    monitor_loss: bool = True
    stop_at_threshold: bool = False
    # synthetic dataset knobs (logistic / accuracy objectives)
    dataset_path: Optional[str] = None
    dataset_n: int = 256
    dataset_dim: int = 10
    dataset_separation: float = 4.0
    dataset_seed: int = 0
    # grid-search ranges
    t1_grid: Optional[tuple[int, ...]] = None
    t2_grid: Optional[tuple[int, ...]] = None
    t3_grid: Optional[tuple[int, ...]] = None

    def validate(self) -> None:
        if self.objective not in TEST_FUNCTIONS + ("logistic", "accuracy"):
            raise ConfigError("objective", f"unknown objective {self.objective!r}")
        if not self.optimizers:
            raise ConfigError("optimizers", "at least one optimizer required")
        for kind in self.optimizers:
            if kind not in OPTIMIZER_KINDS:
                raise ConfigError("optimizers", f"unknown optimizer {kind!r}")
        if self.repeats < 1:
            raise ConfigError("repeats", "must be >= 1")
        if self.threshold <= 0:
            raise ConfigError("threshold", "must be positive")
        # surfaces ordering and degenerate-denominator errors before any step runs
        self.anneal_config()
        self.optimizer_config()

    def anneal_config(self) -> AnnealConfig:
        return AnnealConfig(
            t1=self.t1,
            t2=self.t2,
            t3=self.t3,
            phi_alpha=self.phi_alpha,
            phi_beta1=self.phi_beta1,
            phi_beta2=self.phi_beta2,
            preset=self.preset,
        )

    def optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig(
            eta=self.eta,
            eps=self.eps,
            sigma=self.sigma,
            batch_size=self.batch_size,
            anneal=self.anneal_config(),
        )

    def max_steps(self) -> int:
        return self.t3 if self.steps is None else self.steps


_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}

_INT_KEYS = {
    "t1", "t2", "t3", "steps", "seed", "repeats", "init_seed", "batch_size",
    "dataset_n", "dataset_dim", "dataset_seed",
}
_FLOAT_KEYS = {
    "eta", "eps", "sigma", "phi_alpha", "phi_beta1", "phi_beta2", "threshold",
    "dataset_separation",
}
_BOOL_KEYS = {"monitor_loss", "stop_at_threshold"}
_LIST_KEYS = {"optimizers", "init", "t1_grid", "t2_grid", "t3_grid"}
_STR_KEYS = {"objective", "preset", "dataset_path"}
_REQUIRED = ("objective", "optimizers", "eta", "t1", "t2", "t3")


def parse_config(text: str) -> ExperimentConfig:
    raw: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            if key in _INT_KEYS:
                raw[key] = int(value)
            elif key in _FLOAT_KEYS:
                raw[key] = float(value)
            elif key in _BOOL_KEYS:
                raw[key] = _BOOL[value.lower()]
            elif key == "optimizers":
                raw[key] = tuple(v.strip() for v in value.split(",") if v.strip())
            elif key == "init":
                raw[key] = tuple(float(v) for v in value.split(","))
            elif key in ("t1_grid", "t2_grid", "t3_grid"):
                raw[key] = tuple(int(v) for v in value.split(","))
            elif key == "preset":
                raw[key] = _PRESETS[value.strip().lower()]
            elif key in _STR_KEYS:
                raw[key] = value
            else:
                raise ConfigError(key, "unknown config key")
        except (ValueError, KeyError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(key, f"cannot parse value {value!r}") from None
    for key in _REQUIRED:
        if key not in raw:
            raise ConfigError(key, "required key missing")
    cfg = ExperimentConfig(**raw)
    cfg.validate()
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def build_objective(cfg: ExperimentConfig) -> Objective:
    if cfg.objective in TEST_FUNCTIONS:
        return test_function(cfg.objective)
    if cfg.dataset_path:
        dataset = load_dataset(cfg.dataset_path)
    else:
        dataset = gaussian_blobs(
            cfg.dataset_n, cfg.dataset_dim, cfg.dataset_separation, cfg.dataset_seed
        )
    return logistic_loss(dataset) if cfg.objective == "logistic" else accuracy_objective(dataset)


def make_batcher(cfg: ExperimentConfig, objective: Objective, run_seed: int):
    """Seeded without-replacement minibatch sampler (dataset objectives only)."""
    if cfg.objective in TEST_FUNCTIONS:
        return None
    if cfg.dataset_path:
        dataset = load_dataset(cfg.dataset_path)
    else:
        dataset = gaussian_blobs(
            cfg.dataset_n, cfg.dataset_dim, cfg.dataset_separation, cfg.dataset_seed
        )
    x, y = dataset
    n = x.shape[0]
    b = cfg.batch_size
    rng = np.random.default_rng(run_seed + 1)
    order = {"perm": rng.permutation(n)}

    def batcher(t: int) -> Minibatch:
        start = ((t - 1) * b) % max(n - n % b, b)
        if start == 0 and t > 1:
            order["perm"] = rng.permutation(n)
        idx = order["perm"][start : start + b]
        return Minibatch(features=x[idx], labels=y[idx])

    return batcher


def initial_point(cfg: ExperimentConfig, objective: Objective, repeat: int) -> np.ndarray:
    if cfg.init is not None:
        if len(cfg.init) != objective.dim:
            raise ConfigError("init", f"expected {objective.dim} coordinates")
        return np.array(cfg.init, dtype=np.float64)
    base = cfg.seed if cfg.init_seed is None else cfg.init_seed
    rng = np.random.default_rng(base + repeat)
    if objective.search_domain is not None:
        low, high = objective.search_domain
        return rng.uniform(low, high, size=objective.dim)
    return 0.01 * rng.standard_normal(objective.dim)


def _fmt(value) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return repr(float(value))


def _write_trajectory(path, state, dim: int) -> None:
    theta_cols = [f"theta_{i}" for i in range(dim)] if dim <= 4 else []
    with open(path, "w") as fh:
        fh.write(",".join(["step", "loss", "g_scalar", "alpha", "beta1", "beta2"] + theta_cols))
        fh.write("\n")
        for rec in state.trace:
            loss = rec.loss_at_theta if rec.loss_at_theta is not None else rec.loss_plus
            row = [str(rec.step), _fmt(loss), _fmt(rec.g_scalar), _fmt(rec.alpha),
                   _fmt(rec.beta1), _fmt(rec.beta2)]
            if theta_cols:
                row.extend(_fmt(v) for v in rec.theta)
            fh.write(",".join(row))
            fh.write("\n")


def _single_run(cfg: ExperimentConfig, objective, kind: str, repeat: int):
    run_seed = cfg.seed + repeat
    theta0 = initial_point(cfg, objective, repeat)
    batcher = make_batcher(cfg, objective, run_seed)
    state = run_optimizer(
        kind,
        objective,
        theta0,
        cfg.optimizer_config(),
        run_seed,
        batcher=batcher,
        record_trace=True,
        monitor_loss=cfg.monitor_loss,
        stop_below=cfg.threshold if cfg.stop_at_threshold else None,
        max_steps=cfg.max_steps(),
    )
    return state, theta0


def _metrics_for(cfg: ExperimentConfig, states: list) -> dict:
    finals, bests, stt = [], [], []
    for state in states:
        losses = [r.loss_at_theta if r.loss_at_theta is not None else r.loss_plus
                  for r in state.trace]
        finals.append(losses[-1])
        best = min(losses)
        bests.append(best)
        hit = next((r.step for r, l in zip(state.trace, losses) if l < cfg.threshold), -1)
        stt.append(hit)
    successes = sum(1 for b in bests if b < cfg.threshold)
    return {
        "final_loss_median": float(np.median(finals)),
        "best_loss_median": float(np.median(bests)),
        "success_rate": successes / len(states),
        "steps_to_threshold_median": float(np.median([s for s in stt if s >= 0]))
        if successes else -1,
        "per_repeat": [
            {"final_loss": f, "best_loss": b, "steps_to_threshold": s}
            for f, b, s in zip(finals, bests, stt)
        ],
    }


def run(cfg: ExperimentConfig, out_dir, threads: int = 1) -> dict:
    """Execute every (optimizer, repeat) pair; emit one CSV per pair plus
    a metrics JSON. Deterministic given (config, seeds)."""
    cfg.validate()
    os.makedirs(out_dir, exist_ok=True)
    objective = build_objective(cfg)
    jobs = [(kind, rep) for kind in cfg.optimizers for rep in range(cfg.repeats)]

    def execute(job):
        kind, rep = job
        state, _ = _single_run(cfg, objective, kind, rep)
        return job, state

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = dict(pool.map(execute, jobs))
    else:
        results = dict(map(execute, jobs))

    metrics = {"objective": cfg.objective, "threshold": cfg.threshold, "optimizers": {}}
    for kind in cfg.optimizers:
        states = [results[(kind, rep)] for rep in range(cfg.repeats)]
        for rep, state in enumerate(states):
            _write_trajectory(
                os.path.join(out_dir, f"{cfg.objective}_{kind}_r{rep}.csv"),
                state,
                objective.dim,
            )
        entry = _metrics_for(cfg, states)
        entry["state_bytes"] = state_bytes(kind, objective.dim) if kind in (
            "mezo", "zo-adamu", "zo-adamm", "adam", "adamax") else None
        metrics["optimizers"][kind] = entry
    with open(os.path.join(out_dir, "metrics.json"), "w") as fh:
        json.dump(metrics, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return metrics


def compare(configs: list[ExperimentConfig], out_dir, threads: int = 1) -> dict:
    """Side-by-side report for >= 2 optimizers sharing objective and init."""
    kinds: list[str] = []
    for cfg in configs:
        kinds.extend(cfg.optimizers)
    if len(kinds) < 2:
        raise MismatchedObjective("compare needs at least two optimizers")
    first = configs[0]
    for cfg in configs[1:]:
        if cfg.objective != first.objective or cfg.init != first.init or \
                cfg.init_seed != first.init_seed or cfg.seed != first.seed or \
                cfg.repeats != first.repeats:
            raise MismatchedObjective(
                "compare runs must share objective, initial point and repeat seeds"
            )
    os.makedirs(out_dir, exist_ok=True)
    rows = {}
    for cfg in configs:
        metrics = run(cfg, out_dir, threads=threads)
        for kind, entry in metrics["optimizers"].items():
            rows[kind] = {
                "final_loss_median": entry["final_loss_median"],
                "success_rate": entry["success_rate"],
                "steps_to_threshold_median": entry["steps_to_threshold_median"],
            }
    report = {"objective": first.objective, "threshold": first.threshold, "rows": rows}
    with open(os.path.join(out_dir, "compare.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report


def grid_search(cfg: ExperimentConfig, out_dir, threads: int = 1) -> dict:
    """Exhaustive (t1, t2, t3) search by median final loss, fixed repeat seeds.

    Invalid grid points (ordering or degenerate cosine denominator) are
    excluded and listed in the output rather than aborting the search.
    """
    t1s = cfg.t1_grid or (cfg.t1,)
    t2s = cfg.t2_grid or (cfg.t2,)
    t3s = cfg.t3_grid or (cfg.t3,)
    points = [(a, b, c) for a in t1s for b in t2s for c in t3s]
    if not points:
        raise EmptyGrid("grid contains no points")
    os.makedirs(out_dir, exist_ok=True)
    table, skipped = [], []
    best = None
    for t1, t2, t3 in points:
        candidate = replace(cfg, t1=t1, t2=t2, t3=t3, t1_grid=None, t2_grid=None, t3_grid=None)
        try:
            candidate.validate()
        except ConfigError as exc:
            skipped.append({"t1": t1, "t2": t2, "t3": t3, "reason": str(exc)})
            continue
        point_dir = os.path.join(out_dir, f"grid_t1={t1}_t2={t2}_t3={t3}")
        metrics = run(candidate, point_dir, threads=threads)
        medians = [entry["final_loss_median"] for entry in metrics["optimizers"].values()]
        score = float(np.median(medians))
        row = {"t1": t1, "t2": t2, "t3": t3, "final_loss_median": score}
        table.append(row)
        if best is None or score < best["final_loss_median"]:
            best = row
    if best is None:
        raise EmptyGrid("every grid point failed validation")
    result = {"best": best, "table": table, "skipped": skipped}
    with open(os.path.join(out_dir, "grid.json"), "w") as fh:
        json.dump(result, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return result
