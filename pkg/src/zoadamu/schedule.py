"""Simulated-annealing schedule for the uncertainty and smoothing weights.

Each annealed quantity follows a three-phase piecewise curve over the
step budget (T1, T2, T3): a warm-up phase pinned at 1, a cosine
annealing phase, and a fixed final phase. The final-phase constants
differ between the two presets; see ``SchedulePreset``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import ConfigError, DegenerateSchedule

__all__ = [
    "SchedulePreset",
    "AnnealConfig",
    "ScheduleValues",
    "anneal",
    "schedule_at",
]

# defaults for the per-quantity shaping factor
PHI_ALPHA = 1.0
PHI_BETA1 = 0.1
PHI_BETA2 = 1.5


class SchedulePreset(enum.Enum):
    # third phase returns the same 0.9 constant for all three quantities
    EQ7_VERBATIM = "eq7-verbatim"
    # third phase fixes (alpha, beta1, beta2) = (0.5, 0.9, 0.01)
    TEXT_FINAL_PHASE = "text-final-phase"


@dataclass(frozen=True)
class ScheduleValues:
    alpha: float
    beta1: float
    beta2: float


@dataclass(frozen=True)
class AnnealConfig:
    t1: int
    t2: int
    t3: int
    phi_alpha: float = PHI_ALPHA
    phi_beta1: float = PHI_BETA1
    phi_beta2: float = PHI_BETA2
    preset: SchedulePreset = SchedulePreset.TEXT_FINAL_PHASE

    def __post_init__(self):
        if not (1 <= self.t1 < self.t2 < self.t3):
            raise ConfigError("t1", "step budgets must satisfy 1 <= t1 < t2 < t3")
        for name in ("phi_alpha", "phi_beta1", "phi_beta2"):
            if getattr(self, name) <= 0:
                raise ConfigError(name, "phi must be strictly positive")

    def _denominator(self, t: int, phi: float) -> float:
        return self.t3 - t * phi * (self.t3 - self.t2) / (self.t2 - self.t1)

    def validate(self) -> "AnnealConfig":
        """Reject schedules whose cosine denominator crosses zero mid-run.

        The denominator decreases in t (phi > 0, t3 > t2), so its minimum
        over [t1, t2) is at t = t2 - 1. Failing here, before any step
        executes, beats producing NaN mid-run.
        """
        for name in ("phi_alpha", "phi_beta1", "phi_beta2"):
            if self._denominator(self.t2 - 1, getattr(self, name)) <= 0:
                raise DegenerateSchedule(
                    f"cosine denominator non-positive inside [t1, t2) for {name}="
                    f"{getattr(self, name)} (t1={self.t1}, t2={self.t2}, t3={self.t3})"
                )
        return self


def anneal(t: int, phi: float, cfg: AnnealConfig) -> float:
    """Annealed value of one quantity at step t (1-indexed).

    Piecewise: 1 on [1, T1); a clamped cosine on [T1, T2);
    0.9 on [T2, T3) (the preset-independent constant -- per-quantity
    final-phase overrides live in ``schedule_at``).
    """
    if not 1 <= t <= cfg.t3:
        raise ValueError(f"step {t} outside [1, {cfg.t3}]")
    if t < cfg.t1:
        return 1.0
    if t < cfg.t2:
        denom = cfg._denominator(t, phi)
        if denom == 0.0:
            raise DegenerateSchedule(f"cosine denominator is zero at t={t}")
        val = 0.5 + 0.5 * math.cos(math.pi * (cfg.t3 - cfg.t1) / denom)
        return min(1.0, max(0.0, val))
    return 0.9


def schedule_at(t: int, cfg: AnnealConfig) -> ScheduleValues:
    """(alpha, beta1, beta2) at step t."""
    if t >= cfg.t2 and cfg.preset is SchedulePreset.TEXT_FINAL_PHASE:
        return ScheduleValues(alpha=0.5, beta1=0.9, beta2=0.01)
    return ScheduleValues(
        alpha=anneal(t, cfg.phi_alpha, cfg),
        beta1=anneal(t, cfg.phi_beta1, cfg),
        beta2=anneal(t, cfg.phi_beta2, cfg),
    )
