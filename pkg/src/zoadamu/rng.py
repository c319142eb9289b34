"""Deterministic, seekable standard-normal stream.

The k-th variate of a stream is a pure function of (seed, k), so a
perturbation vector can be regenerated from its seed instead of stored.
Each variate consumes exactly one counter position: the uniform at
counter k is pushed through the inverse normal CDF. No rejection
sampling, so the per-parameter draw order is fixed and replayable.

Backed by numpy's Philox counter-based generator. Philox emits 64-bit
words in blocks of 4 per 128-bit counter value, and numpy turns one
word into one double, so seeking to draw k means setting the block
counter to k // 4 and discarding k % 4 draws from the fresh block.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox
from scipy.special import ndtri

__all__ = ["GaussianStream"]

_BLOCK = 4  # doubles produced per Philox counter increment

# smallest uniform we feed to ndtri; Generator.random() yields [0, 1)
# and ndtri(0) would be -inf
_U_FLOOR = 2.0 ** -64


class GaussianStream:
    """Seekable N(0,1) stream keyed by (seed, counter).

    Two streams with the same seed produce bit-identical sequences;
    ``reset(k)`` replays from draw k exactly.
    """

    def __init__(self, seed: int, counter: int = 0):
        if not 0 <= seed < 2 ** 64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        self._seed = int(seed)
        self._counter = 0
        self._bitgen = Philox(key=self._seed)
        self._gen = Generator(self._bitgen)
        if counter:
            self.reset(counter)

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def counter(self) -> int:
        return self._counter

    def _seek(self, counter: int) -> None:
        state = self._bitgen.state
        state["state"]["counter"][:] = 0
        state["state"]["counter"][0] = counter // _BLOCK
        state["state"]["key"][0] = self._seed
        state["state"]["key"][1] = 0
        state["buffer_pos"] = _BLOCK
        state["has_uint32"] = 0
        state["uinteger"] = 0
        self._bitgen.state = state
        skip = counter % _BLOCK
        if skip:
            self._gen.random(skip)
        self._counter = counter

    def reset(self, counter: int = 0) -> "GaussianStream":
        """Position the stream so the next draw is draw number ``counter``."""
        if counter < 0:
            raise ValueError("counter must be non-negative")
        self._seek(counter)
        return self

    def reseed(self, seed: int, counter: int = 0) -> "GaussianStream":
        """Re-key the stream in place (cheap; avoids re-allocating Philox)."""
        if not 0 <= seed < 2 ** 64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        self._seed = int(seed)
        self._seek(counter)
        return self

    def draw_block(self, n: int) -> np.ndarray:
        """Next ``n`` standard-normal variates; advances the counter by n."""
        u = self._gen.random(n)
        self._counter += n
        if u.size:
            np.maximum(u, _U_FLOOR, out=u)
        return ndtri(u)

    def draw(self) -> float:
        """Next standard-normal variate; advances the counter by 1."""
        return float(self.draw_block(1)[0])

    def draw_scaled(self, mu: float, scale: float, n: int) -> np.ndarray:
        """N(mu, scale) draws produced as mu + scale * N(0,1)."""
        return mu + scale * self.draw_block(n)
