"""Zeroth-order gradient information from paired forward passes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonFiniteLoss
from .perturb import mixed_perturbation
from .rng import GaussianStream
from .schedule import ScheduleValues

__all__ = ["GradEstimate", "spsa_gradient", "projected_gradient"]


@dataclass(frozen=True)
class GradEstimate:
    g_scalar: float  # (l+ - l-) / (2 eps)
    loss_plus: float
    loss_minus: float
    epsilon: float
    seed: int


def _check_finite(value: float, label: str) -> float:
    if not math.isfinite(value):
        raise NonFiniteLoss(f"{label} forward pass returned {value}")
    return value


def spsa_gradient(loss, theta: np.ndarray, batch, eps: float, z: np.ndarray) -> np.ndarray:
    """Two-point estimate ((L(theta+eps z) - L(theta-eps z)) / 2 eps) * z.

    theta is left untouched; both passes use the same minibatch.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if z.shape != theta.shape:
        raise DimensionMismatch(f"direction dim {z.shape} != parameter dim {theta.shape}")
    lp = _check_finite(loss.evaluate(theta + eps * z, batch), "positive")
    lm = _check_finite(loss.evaluate(theta - eps * z, batch), "negative")
    return ((lp - lm) / (2.0 * eps)) * z


def projected_gradient(
    loss,
    theta: np.ndarray,
    m: np.ndarray,
    batch,
    eps: float,
    seed: int,
    sched: ScheduleValues,
    stream: GaussianStream | None = None,
) -> GradEstimate:
    """Scalar directional estimate via the in-place +eps/-2eps/+eps walk.

    The mixed perturbation is drawn once from (seed, 0); adding it with
    coefficients eps, -2 eps, eps is bit-identical to three independent
    perturb calls because each call would regenerate the same vector.
    Exactly two forward passes occur and theta is restored on exit.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if m.shape != theta.shape:
        raise DimensionMismatch(f"momentum dim {m.shape} != parameter dim {theta.shape}")
    if stream is None:
        stream = GaussianStream(seed)
    else:
        stream.reseed(seed)
    z, _, _ = mixed_perturbation(m, sched, stream)

    theta += eps * z
    try:
        lp = _check_finite(loss.evaluate(theta, batch), "positive")
    except Exception:
        theta -= eps * z
        raise
    theta -= 2.0 * eps * z
    try:
        lm = _check_finite(loss.evaluate(theta, batch), "negative")
    finally:
        theta += eps * z
    return GradEstimate(
        g_scalar=(lp - lm) / (2.0 * eps),
        loss_plus=lp,
        loss_minus=lm,
        epsilon=eps,
        seed=seed,
    )
