"""Stochastic reward sources.

Every step draws a full reward vector, one entry per arm, i.i.d. over time.
Rewards of different arms in the same step may be correlated depending on
the coupling rule.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .numerics import beta_variate
from .rng import Stream, next_double

COUPLINGS = ("bernoulli_independent", "bernoulli_comonotone", "beta_independent")

BERNOULLI_INDEPENDENT = 0
BERNOULLI_COMONOTONE = 1
BETA_INDEPENDENT = 2


@dataclass(frozen=True)
class RewardModel:
    """Per-arm means plus the rule that couples arms within a step.

    ``precision`` only matters for ``beta_independent``, where arm ``a``
    draws from ``Beta(precision * mu, precision * (1 - mu))``.
    """

    means: tuple[float, ...]
    coupling: str = "bernoulli_independent"
    precision: float = 4.0

    def __post_init__(self):
        means = tuple(float(m) for m in self.means)
        object.__setattr__(self, "means", means)
        if not means:
            raise ValueError("at least one arm mean is required")
        if self.coupling not in COUPLINGS:
            raise ValueError(f"unknown coupling {self.coupling!r}; expected one of {COUPLINGS}")
        for a, m in enumerate(means):
            if not 0.0 <= m <= 1.0:
                raise ValueError(f"mean of arm {a} must lie in [0, 1], got {m}")
        if self.coupling == "beta_independent":
            if not self.precision > 0:
                raise ValueError(f"precision must be positive, got {self.precision}")
            for a, m in enumerate(means):
                if not 0.0 < m < 1.0:
                    raise ValueError(f"beta_independent needs 0 < mean < 1; arm {a} has {m}")

    @property
    def k(self) -> int:
        return len(self.means)

    @property
    def coupling_code(self) -> int:
        return COUPLINGS.index(self.coupling)

    def means_array(self) -> np.ndarray:
        return np.asarray(self.means, dtype=np.float64)

    def to_dict(self) -> dict:
        return {"means": list(self.means), "coupling": self.coupling, "precision": self.precision}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class GapProfile:
    gaps: tuple[float, ...]
    optimal: int
    delta_min: Optional[float]
    multiple_optimal: bool = False

    @property
    def max_gap(self) -> float:
        return max(self.gaps)

    def gaps_array(self) -> np.ndarray:
        return np.asarray(self.gaps, dtype=np.float64)


def gap_profile(model: RewardModel) -> GapProfile:
    """Gaps relative to the lowest-index best arm.

    >>> gap_profile(RewardModel((0.5, 0.5, 0.2))).optimal
    0
    """
    means = model.means
    best = max(means)
    optimal = means.index(best)
    gaps = tuple(best - m for m in means)
    positive = [g for g in gaps if g > 0]
    n_best = sum(1 for m in means if m == best)
    return GapProfile(gaps, optimal, min(positive) if positive else None, n_best > 1)


def instant_regret(profile: GapProfile, arm: int) -> float:
    """Per-step pseudo-regret of pulling ``arm``."""
    if not 0 <= arm < len(profile.gaps):
        raise ValueError(f"arm {arm} out of range [0, {len(profile.gaps)})")
    return profile.gaps[arm]


@njit(cache=True)
def draw_rewards(means, coupling, precision, s, out):
    """Fill ``out`` with one reward vector drawn from stream state ``s``.

    The comonotone coupling shares a single uniform ``u`` across arms and
    pays ``1{u < mu}``; with ``u`` in [0, 1) this hits probability ``mu``
    exactly and keeps arms with larger means rewarded whenever smaller ones are.
    """
    k = means.shape[0]
    if coupling == BERNOULLI_COMONOTONE:
        u = next_double(s)
        for a in range(k):
            out[a] = 1.0 if u < means[a] else 0.0
    elif coupling == BETA_INDEPENDENT:
        for a in range(k):
            out[a] = beta_variate(precision * means[a], precision * (1.0 - means[a]), s)
    else:
        for a in range(k):
            out[a] = 1.0 if next_double(s) < means[a] else 0.0


def sample_rewards(model: RewardModel, rng: Stream) -> np.ndarray:
    out = np.empty(model.k, dtype=np.float64)
    draw_rewards(model.means_array(), model.coupling_code, float(model.precision), rng.state, out)
    if not (np.all(out >= 0.0) and np.all(out <= 1.0)):
        raise AssertionError(f"reward outside [0, 1]: {out}")
    return out


def model_from_dict(data: dict) -> RewardModel:
    return RewardModel(tuple(data["means"]), data.get("coupling", "bernoulli_independent"),
                       float(data.get("precision", 4.0)))


def cumulative_pseudo_regret(profile: GapProfile, arms: Sequence[int]) -> np.ndarray:
    """Running sum of gaps of the selected arms."""
    return np.cumsum(profile.gaps_array()[np.asarray(arms, dtype=np.int64)])
