"""Closed-form regret-bound evaluators.

Phase counts use ``log2``; confidence terms use the natural log. The
Thompson Sampling bounds carry an unspecified constant in their lower-order
(and, for the gap-independent form, leading) terms; it is exposed as
``c_ts`` and the values are only meaningful up to that constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .graph import FeedbackGraph, independence_number, max_gap_weighted_independent_sum


@dataclass(frozen=True)
class BoundInputs:
    T: int
    delta: float
    gaps: tuple[float, ...]
    graph: FeedbackGraph
    c_ts: float = 1.0
    alpha: int = field(init=False)
    W: float = field(init=False)

    def __post_init__(self):
        if self.T < 1:
            raise ValueError(f"T must be positive, got {self.T}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        gaps = tuple(float(g) for g in self.gaps)
        if len(gaps) != self.graph.k:
            raise ValueError(f"{len(gaps)} gaps given for a graph on {self.graph.k} arms")
        if any(g < 0 for g in gaps):
            raise ValueError("gaps must be nonnegative")
        if self.c_ts < 0:
            raise ValueError(f"c_ts must be nonnegative, got {self.c_ts}")
        object.__setattr__(self, "gaps", gaps)
        object.__setattr__(self, "alpha", independence_number(self.graph))
        object.__setattr__(self, "W", max_gap_weighted_independent_sum(self.graph, gaps))

    @property
    def k(self) -> int:
        return self.graph.k

    @property
    def delta_min(self) -> Optional[float]:
        positive = [g for g in self.gaps if g > 0]
        return min(positive) if positive else None

    def at_horizon(self, T: int) -> "BoundInputs":
        """Same instance with a different horizon (``alpha``/``W`` are reused)."""
        clone = object.__new__(BoundInputs)
        for name in ("delta", "gaps", "graph", "c_ts", "alpha", "W"):
            object.__setattr__(clone, name, getattr(self, name))
        if T < 1:
            raise ValueError(f"T must be positive, got {T}")
        object.__setattr__(clone, "T", int(T))
        return clone


def _elimination_style(constant: float, b: BoundInputs) -> float:
    return constant * math.log(2 * b.k * b.T / b.delta) * math.log2(b.T) * b.W + b.T * b.delta + 1.0


def aae_bound(b: BoundInputs) -> float:
    """Regret bound for active-arm elimination over independent sets."""
    return _elimination_style(32.0, b)


def ucbn_bound(b: BoundInputs) -> float:
    """Gap-dependent regret bound for UCB-N."""
    return _elimination_style(8.0, b)


def ucbn_gap_independent_bound(b: BoundInputs) -> float:
    """``2 + 4 sqrt(2 alpha T ln(2 k T^2) log2 T)``."""
    return 2.0 + 4.0 * math.sqrt(2.0 * b.alpha * b.T * math.log(2 * b.k * b.T ** 2) * math.log2(b.T))


def tsn_bound(b: BoundInputs) -> float:
    """Gap-dependent bound for TS-N, up to ``c_ts`` on the residual term."""
    residual = b.c_ts * math.log(b.T) / b.delta_min if b.delta_min is not None else 0.0
    return 64.0 * math.log2(b.k * b.T) * math.log2(b.T) * b.W + residual + 3.0


def tsn_gap_independent_bound(b: BoundInputs) -> float:
    """``c_ts sqrt(alpha T ln T ln(k T))``."""
    return b.c_ts * math.sqrt(b.alpha * b.T * math.log(b.T) * math.log(b.k * b.T))


def saturation_threshold(gap: float, k: int, T: int) -> float:
    """Observations after which a suboptimal arm counts as saturated in the
    Thompson Sampling analysis: ``16 ln(kT) / gap^2``."""
    if not gap > 0:
        raise ValueError(f"gap must be positive, got {gap}")
    return 16.0 * math.log(k * T) / gap ** 2


def aae_saturation_threshold(gap: float, k: int, T: int, delta: float) -> float:
    """Observations after which elimination is guaranteed: ``8 ln(2Tk/delta) / gap^2``."""
    if not gap > 0:
        raise ValueError(f"gap must be positive, got {gap}")
    return 8.0 * math.log(2 * T * k / delta) / gap ** 2


def ucb_saturation_threshold(gap: float, k: int, T: int, delta: float) -> float:
    """Observations after which UCB-N stops pulling the arm: ``2 ln(2kT/delta) / gap^2``."""
    if not gap > 0:
        raise ValueError(f"gap must be positive, got {gap}")
    return 2.0 * math.log(2 * k * T / delta) / gap ** 2


#: Bounds that apply to each policy kind.
POLICY_BOUNDS = {
    "aae_is": {"aae": aae_bound},
    "aae_minobs": {"aae": aae_bound},
    "ucb_n": {"ucbn": ucbn_bound, "ucbn_gap_independent": ucbn_gap_independent_bound},
    "ts_n": {"tsn": tsn_bound, "tsn_gap_independent": tsn_gap_independent_bound},
}


def bound_table(b: BoundInputs, kinds: Sequence[str]) -> dict[str, dict[str, float]]:
    return {kind: {name: fn(b) for name, fn in POLICY_BOUNDS[kind].items()} for kind in kinds}
