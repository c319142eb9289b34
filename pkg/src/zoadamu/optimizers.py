"""Step rules: MeZO, ZO-AdaMU, ZO-AdaMM and first-order Adam/AdaMax.

All zeroth-order steps share the same draw-order convention (two stream
draws per parameter index, ascending) so regenerated perturbations are
bit-identical across the perturb walk and the update loop.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, NonFiniteLoss
from .perturb import mixed_perturbation, state_bytes
from .rng import GaussianStream
from .schedule import AnnealConfig, ScheduleValues, schedule_at

__all__ = [
    "OptimizerConfig",
    "StepRecord",
    "RunState",
    "make_run_state",
    "mezo_step",
    "zo_adamu_step",
    "zo_adamm_step",
    "adam_step",
    "adamax_step",
    "step_fn",
    "run",
    "OPTIMIZER_KINDS",
    "state_bytes",
]

# momentum-free degenerate schedule: the mixed draw collapses to a pure
# standard normal (used by mezo and zo-adamm directions)
_PLAIN = ScheduleValues(alpha=1.0, beta1=1.0, beta2=1.0)

# zo-adamm / first-order moment decay rates (standard Adam-family values)
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999

OPTIMIZER_KINDS = ("mezo", "zo-adamu", "zo-adamm", "adam", "adamax")


@dataclass(frozen=True)
class OptimizerConfig:
    eta: float
    anneal: AnnealConfig
    eps: float = 1e-3
    sigma: float = 1e-8
    batch_size: int = 1
    total_steps: Optional[int] = None  # defaults to anneal.t3

    def __post_init__(self):
        if self.eta <= 0:
            raise ConfigError("eta", "learning rate must be positive")
        if self.eps <= 0:
            raise ConfigError("eps", "perturbation scale must be positive")
        if self.sigma <= 0:
            raise ConfigError("sigma", "must be positive")
        if self.batch_size < 1:
            raise ConfigError("batch_size", "must be >= 1")
        self.anneal.validate()
        if self.total_steps is None:
            object.__setattr__(self, "total_steps", self.anneal.t3)
        elif self.total_steps != self.anneal.t3:
            raise ConfigError("total_steps", "must equal anneal.t3")


@dataclass
class StepRecord:
    step: int
    seed: int
    loss_plus: float
    loss_minus: float
    g_scalar: float
    alpha: float
    beta1: float
    beta2: float
    theta_checksum: int
    loss_at_theta: Optional[float] = None
    theta: Optional[np.ndarray] = None  # snapshot, kept only for small d


@dataclass
class RunState:
    theta: np.ndarray
    m: np.ndarray
    t: int = 0
    v: Optional[np.ndarray] = None  # persistent second moment (zo-adamm, adam)
    u: Optional[np.ndarray] = None  # infinity-norm accumulator (adamax)
    trace: list = field(default_factory=list)
    seed_rng: Optional[np.random.Generator] = None
    stream: Optional[GaussianStream] = None

    def next_seed(self) -> int:
        return int(self.seed_rng.integers(0, 2 ** 63))


def make_run_state(theta0: np.ndarray, kind: str, seed: int) -> RunState:
    if kind not in OPTIMIZER_KINDS:
        raise ConfigError("optimizer", f"unknown kind {kind!r}")
    theta = np.array(theta0, dtype=np.float64)
    d = theta.shape[0]
    state = RunState(
        theta=theta,
        m=np.zeros(d),
        seed_rng=np.random.default_rng(seed),
        stream=GaussianStream(0),
    )
    if kind in ("zo-adamm", "adam"):
        state.v = np.zeros(d)
    if kind == "adamax":
        state.u = np.zeros(d)
    return state


def _checksum(theta: np.ndarray) -> int:
    return int.from_bytes(
        hashlib.blake2b(theta.tobytes(), digest_size=8).digest(), "little"
    )


def _finite(value: float, label: str) -> float:
    if not math.isfinite(value):
        raise NonFiniteLoss(f"{label} forward pass returned {value}")
    return value


def _walk(theta, z, eps, loss, batch):
    """+eps / -2eps / +eps in place; two forward passes; theta restored."""
    theta += eps * z
    lp = _finite(loss.evaluate(theta, batch), "positive")
    theta -= 2.0 * eps * z
    lm = _finite(loss.evaluate(theta, batch), "negative")
    theta += eps * z
    return lp, lm


def _record(state, step, seed, lp, lm, g, sched, record_trace, loss_at_theta=None):
    state.t = step
    if record_trace:
        state.trace.append(
            StepRecord(
                step=step,
                seed=seed,
                loss_plus=lp,
                loss_minus=lm,
                g_scalar=g,
                alpha=sched.alpha,
                beta1=sched.beta1,
                beta2=sched.beta2,
                theta_checksum=_checksum(state.theta),
                loss_at_theta=loss_at_theta,
                theta=state.theta.copy() if state.theta.size <= 4 else None,
            )
        )


def mezo_step(state: RunState, loss, batch, cfg: OptimizerConfig, record_trace=True) -> RunState:
    t = state.t + 1
    seed = state.next_seed()
    state.stream.reseed(seed)
    z, _, _ = mixed_perturbation(state.m, _PLAIN, state.stream)
    lp, lm = _walk(state.theta, z, cfg.eps, loss, batch)
    g = (lp - lm) / (2.0 * cfg.eps)
    state.theta -= cfg.eta * g * z
    _record(state, t, seed, lp, lm, g, _PLAIN, record_trace)
    return state


def zo_adamu_step(state: RunState, loss, batch, cfg: OptimizerConfig, record_trace=True) -> RunState:
    t = state.t + 1
    sched = schedule_at(t, cfg.anneal)
    seed = state.next_seed()
    state.stream.reseed(seed)
    # drawn once; the three walk applications are bit-identical to three
    # perturb calls because each would regenerate this exact vector, and
    # the new momentum m(t) = beta1*zdot + (1-beta1)*zddot is that same
    # mixed vector
    z, zdot, zddot = mixed_perturbation(state.m, sched, state.stream)
    lp, lm = _walk(state.theta, z, cfg.eps, loss, batch)
    g = (lp - lm) / (2.0 * cfg.eps)
    v = sched.beta2 * zdot * zdot + (1.0 - sched.beta2) * zddot * zddot
    state.theta -= cfg.eta * (g / np.sqrt(v + cfg.sigma)) * z
    state.m = z
    _record(state, t, seed, lp, lm, g, sched, record_trace)
    return state


def zo_adamm_step(state: RunState, loss, batch, cfg: OptimizerConfig, record_trace=True) -> RunState:
    t = state.t + 1
    seed = state.next_seed()
    state.stream.reseed(seed)
    z, _, _ = mixed_perturbation(np.zeros_like(state.theta), _PLAIN, state.stream)
    lp, lm = _walk(state.theta, z, cfg.eps, loss, batch)
    g = (lp - lm) / (2.0 * cfg.eps)
    ghat = g * z
    state.m = ADAM_BETA1 * state.m + (1.0 - ADAM_BETA1) * ghat
    state.v = ADAM_BETA2 * state.v + (1.0 - ADAM_BETA2) * ghat * ghat
    mhat = state.m / (1.0 - ADAM_BETA1 ** t)
    vhat = state.v / (1.0 - ADAM_BETA2 ** t)
    state.theta -= cfg.eta * mhat / (np.sqrt(vhat) + cfg.sigma)
    _record(state, t, seed, lp, lm, g, _PLAIN, record_trace)
    return state


def adam_step(state: RunState, loss, batch, cfg: OptimizerConfig, record_trace=True) -> RunState:
    t = state.t + 1
    grad = loss.grad(state.theta, batch)
    state.m = ADAM_BETA1 * state.m + (1.0 - ADAM_BETA1) * grad
    state.v = ADAM_BETA2 * state.v + (1.0 - ADAM_BETA2) * grad * grad
    mhat = state.m / (1.0 - ADAM_BETA1 ** t)
    vhat = state.v / (1.0 - ADAM_BETA2 ** t)
    state.theta -= cfg.eta * mhat / (np.sqrt(vhat) + cfg.sigma)
    loss_now = loss.evaluate(state.theta, batch) if record_trace else 0.0
    _record(state, t, 0, loss_now, loss_now, 0.0, _PLAIN, record_trace, loss_now)
    return state


def adamax_step(state: RunState, loss, batch, cfg: OptimizerConfig, record_trace=True) -> RunState:
    t = state.t + 1
    grad = loss.grad(state.theta, batch)
    state.m = ADAM_BETA1 * state.m + (1.0 - ADAM_BETA1) * grad
    state.u = np.maximum(ADAM_BETA2 * state.u, np.abs(grad))
    state.theta -= (cfg.eta / (1.0 - ADAM_BETA1 ** t)) * state.m / (state.u + cfg.sigma)
    loss_now = loss.evaluate(state.theta, batch) if record_trace else 0.0
    _record(state, t, 0, loss_now, loss_now, 0.0, _PLAIN, record_trace, loss_now)
    return state


_STEPS: dict[str, Callable] = {
    "mezo": mezo_step,
    "zo-adamu": zo_adamu_step,
    "zo-adamm": zo_adamm_step,
    "adam": adam_step,
    "adamax": adamax_step,
}


def step_fn(kind: str) -> Callable:
    try:
        return _STEPS[kind]
    except KeyError:
        raise ConfigError("optimizer", f"unknown kind {kind!r}") from None


def run(
    kind: str,
    objective,
    theta0: np.ndarray,
    cfg: OptimizerConfig,
    seed: int,
    batcher: Optional[Callable[[int], object]] = None,
    record_trace: bool = True,
    monitor_loss: bool = False,
    stop_below: Optional[float] = None,
    max_steps: Optional[int] = None,
) -> RunState:
    """Execute up to cfg.total_steps steps of one optimizer.

    batcher(t) supplies the minibatch for step t (None for batchless
    objectives). With monitor_loss on, the true loss at theta is
    evaluated after each step and stored in the trace; stop_below then
    halts early once that loss drops under the threshold.
    """
    state = make_run_state(theta0, kind, seed)
    fn = step_fn(kind)
    steps = cfg.total_steps if max_steps is None else min(max_steps, cfg.total_steps)
    for t in range(1, steps + 1):
        batch = batcher(t) if batcher is not None else None
        fn(state, objective, batch, cfg, record_trace=record_trace)
        if monitor_loss:
            loss_now = objective.evaluate(state.theta, batch)
            if record_trace and state.trace:
                state.trace[-1].loss_at_theta = loss_now
            if stop_below is not None and loss_now < stop_below:
                break
    return state
