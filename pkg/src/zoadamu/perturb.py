"""In-place perturbation of the flat parameter vector.

The perturbation applied at a step is never stored: it is regenerated
from the step seed on every call. The draw order is fixed — two
consecutive stream draws per parameter index, ascending index order —
so any two call sites that share (seed, momentum, schedule values)
materialize bit-identical vectors. The +eps / -2eps / +eps walk then
cancels algebraically, restoring the parameters to within a few ulps.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionMismatch
from .rng import GaussianStream
from .schedule import ScheduleValues

__all__ = [
    "mixed_perturbation",
    "perturb",
    "mixed_sample",
    "state_bytes",
    "save_params",
    "load_params",
]

_FLOAT_BYTES = 8


def mixed_perturbation(
    m: np.ndarray, sched: ScheduleValues, stream: GaussianStream
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw the mixed perturbation for all d indices from the stream.

    Returns (z_mixed, zdot, zddot) where per index i
    zdot_i  = sqrt(alpha) * u_{2i}
    zddot_i = m_i + sqrt(1 - alpha) * u_{2i+1}
    z_mixed = beta1 * zdot + (1 - beta1) * zddot
    with u the stream's consecutive standard normals (2 draws per index).
    """
    d = m.shape[0]
    u = stream.draw_block(2 * d)
    zdot = math.sqrt(sched.alpha) * u[0::2]
    zddot = m + math.sqrt(1.0 - sched.alpha) * u[1::2]
    z_mixed = sched.beta1 * zdot + (1.0 - sched.beta1) * zddot
    return z_mixed, zdot, zddot


def perturb(
    theta: np.ndarray,
    m: np.ndarray,
    coef: float,
    seed: int,
    sched: ScheduleValues,
    stream: GaussianStream | None = None,
) -> np.ndarray:
    """theta_i += coef * z_mixed_i, in place, draws regenerated from (seed, 0)."""
    if m.shape != theta.shape:
        raise DimensionMismatch(
            f"momentum dim {m.shape} does not match parameter dim {theta.shape}"
        )
    if stream is None:
        stream = GaussianStream(seed)
    else:
        stream.reseed(seed)
    z_mixed, _, _ = mixed_perturbation(m, sched, stream)
    theta += coef * z_mixed
    return theta


def mixed_sample(
    i: int, m_i: float, sched: ScheduleValues, stream: GaussianStream
) -> tuple[float, float, float]:
    """Single-index mixed draw; the stream must sit at index i's offset (2*i)."""
    u1 = stream.draw()
    u2 = stream.draw()
    zdot = math.sqrt(sched.alpha) * u1
    zddot = m_i + math.sqrt(1.0 - sched.alpha) * u2
    return sched.beta1 * zdot + (1.0 - sched.beta1) * zddot, zdot, zddot


def state_bytes(kind: str, dim: int) -> int:
    """Persistent optimizer state beyond theta, in bytes.

    mezo keeps only the step seed and scalars; zo-adamu persists one
    d-length momentum buffer (its second moment is recomputed from the
    step's own draws); zo-adamm persists two moment buffers; first-order
    adam/adamax persist two moment buffers and materialize a gradient.
    """
    kind = kind.lower()
    if kind == "mezo":
        return 2 * _FLOAT_BYTES  # seed + step counter
    if kind == "zo-adamu":
        return dim * _FLOAT_BYTES
    if kind == "zo-adamm":
        return 2 * dim * _FLOAT_BYTES
    if kind in ("adam", "adamax"):
        return 3 * dim * _FLOAT_BYTES  # two moment buffers + gradient
    raise ValueError(f"unknown optimizer kind {kind!r}")


def save_params(path, theta: np.ndarray) -> None:
    """Flat little-endian float64 file with an 8-byte dimension header."""
    with open(path, "wb") as fh:
        fh.write(np.uint64(theta.shape[0]).tobytes())
        fh.write(np.ascontiguousarray(theta, dtype="<f8").tobytes())


def load_params(path) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    dim = int(np.frombuffer(raw[:8], dtype="<u8")[0])
    theta = np.frombuffer(raw[8:], dtype="<f8").copy()
    if theta.shape[0] != dim:
        raise DimensionMismatch(
            f"header says {dim} parameters, file holds {theta.shape[0]}"
        )
    return theta
