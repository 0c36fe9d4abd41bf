"""The layering diagnostic.

Each selection of arm ``a`` is placed in the lowest layer in which ``a`` has
not been observed yet; that layer is then marked as observed for ``a`` and
for every neighbor of ``a``. Two properties follow and are checked here:

1. arms placed (by selection) in the same layer are pairwise non-adjacent;
2. a placement in layer ``l`` happens only after ``l - 1`` prior observations.

The tracker only watches a run, it never feeds back into a policy, so it can
be replayed from the selected-arm sequence after the fact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit

from .graph import FeedbackGraph, max_gap_weighted_independent_sum


@njit(cache=True)
def _place(ptr, idx, arm, observed, lowest):
    """Place one selection of ``arm``; returns its layer (1-based).

    ``observed[a, l]`` marks layer ``l`` as observed for arm ``a`` and
    ``lowest[a]`` caches the smallest unobserved layer. Observed sets only
    grow, so ``lowest`` only moves up and the scan is amortized O(1).
    """
    layer = lowest[arm]
    for j in range(ptr[arm], ptr[arm + 1]):
        b = idx[j]
        observed[b, layer] = True
        if lowest[b] == layer:
            m = layer
            while observed[b, m]:
                m += 1
            lowest[b] = m
    return layer


@njit(cache=True)
def _replay(ptr, idx, arms, observed, lowest, layers):
    for i in range(arms.shape[0]):
        layers[i] = _place(ptr, idx, arms[i], observed, lowest)


@dataclass
class LayeringTracker:
    """Online layer assignment for one run.

    ``capacity`` bounds the number of selections that can be recorded (the
    highest reachable layer is ``capacity``).
    """

    k: int
    capacity: int
    placement_times: list[int] = field(default_factory=list)
    placement_arms: list[int] = field(default_factory=list)
    placement_layers: list[int] = field(default_factory=list)

    def __post_init__(self):
        self._observed = np.zeros((self.k, self.capacity + 2), dtype=np.bool_)
        self._lowest = np.ones(self.k, dtype=np.int64)
        self._ptr: np.ndarray | None = None
        self._idx: np.ndarray | None = None
        #: highest layer each arm has been placed in (0 if never selected)
        self.lam = np.zeros(self.k, dtype=np.int64)

    def _csr(self, g: FeedbackGraph):
        if self._ptr is None:
            if g.k != self.k:
                raise ValueError(f"tracker has {self.k} arms, graph has {g.k}")
            self._ptr, self._idx = g.closed_csr()
        return self._ptr, self._idx

    def record_selection(self, g: FeedbackGraph, arm: int, t: int) -> int:
        """Place one selection at time ``t``; returns its layer."""
        if not 0 <= arm < self.k:
            raise ValueError(f"arm {arm} out of range [0, {self.k})")
        if self.placement_times and t <= self.placement_times[-1]:
            raise ValueError(f"times must increase strictly; got {t} after {self.placement_times[-1]}")
        if len(self.placement_times) >= self.capacity:
            raise ValueError(f"tracker capacity {self.capacity} exhausted")
        ptr, idx = self._csr(g)
        layer = int(_place(ptr, idx, arm, self._observed, self._lowest))
        self.placement_times.append(t)
        self.placement_arms.append(arm)
        self.placement_layers.append(layer)
        self.lam[arm] = max(self.lam[arm], layer)
        return layer

    @classmethod
    def replay(cls, g: FeedbackGraph, arms: Sequence[int]) -> "LayeringTracker":
        """Tracker for a run whose selection at time ``t`` was ``arms[t-1]``."""
        arms = np.asarray(arms, dtype=np.int64)
        tracker = cls(g.k, len(arms))
        ptr, idx = tracker._csr(g)
        layers = np.empty(len(arms), dtype=np.int64)
        _replay(ptr, idx, arms, tracker._observed, tracker._lowest, layers)
        tracker.placement_times = list(range(1, len(arms) + 1))
        tracker.placement_arms = arms.tolist()
        tracker.placement_layers = layers.tolist()
        np.maximum.at(tracker.lam, arms, layers)
        return tracker

    @classmethod
    def from_placements(cls, k: int, placements: Sequence[tuple[int, int, int]]) -> "LayeringTracker":
        """Tracker holding arbitrary ``(t, arm, layer)`` placements, without
        running the placement rule. Meant for exercising the checkers."""
        tracker = cls(k, max(len(placements), 1))
        for t, arm, layer in placements:
            tracker.placement_times.append(int(t))
            tracker.placement_arms.append(int(arm))
            tracker.placement_layers.append(int(layer))
            tracker.lam[arm] = max(tracker.lam[arm], layer)
        return tracker

    def observed_layers(self, arm: int) -> set[int]:
        return set(np.flatnonzero(self._observed[arm]).tolist())

    def occupancy(self) -> dict[int, int]:
        """Number of placements per layer."""
        layers, counts = np.unique(np.asarray(self.placement_layers, dtype=np.int64), return_counts=True)
        return {int(l): int(c) for l, c in zip(layers, counts)}


def verify_layer_independence(tracker: LayeringTracker, g: FeedbackGraph) -> list[tuple[int, int]]:
    """Adjacent arm pairs ``(a, b)``, ``a < b``, placed in a common layer."""
    if not tracker.placement_layers:
        return []
    layers = np.asarray(tracker.placement_layers, dtype=np.int64)
    arms = np.asarray(tracker.placement_arms, dtype=np.int64)
    placed = np.zeros((int(layers.max()) + 1, g.k), dtype=np.int64)
    placed[layers, arms] = 1
    shared = (placed.T @ placed) > 0
    bad = np.argwhere(np.triu(shared & g.adjacency_matrix(), 1))
    return [(int(a), int(b)) for a, b in bad]


def observation_log(g: FeedbackGraph, arms: Sequence[int]) -> np.ndarray:
    """``log[t, a]`` = observations of ``a`` during steps ``1..t`` (row 0 is zeros)."""
    closed = g.adjacency_matrix().astype(np.int64) + np.eye(g.k, dtype=np.int64)
    log = np.zeros((len(arms) + 1, g.k), dtype=np.int64)
    np.cumsum(closed[np.asarray(arms, dtype=np.int64)], axis=0, out=log[1:])
    return log


def verify_placement_counts(tracker: LayeringTracker, obs_log: np.ndarray) -> list[tuple[int, int, int]]:
    """Placements ``(arm, t, layer)`` made with fewer than ``layer - 1``
    observations of ``arm`` strictly before ``t``."""
    if not tracker.placement_layers:
        return []
    times = np.asarray(tracker.placement_times, dtype=np.int64)
    arms = np.asarray(tracker.placement_arms, dtype=np.int64)
    layers = np.asarray(tracker.placement_layers, dtype=np.int64)
    before = obs_log[times - 1, arms]
    bad = np.flatnonzero(before < layers - 1)
    return [(int(arms[i]), int(times[i]), int(layers[i])) for i in bad]


def lemma2_bound(L: float, gaps: Sequence[float], g: FeedbackGraph, T: int) -> float:
    """``4 log2(T) L W + 1`` with ``W`` the best gap-weighted independent sum.

    Regret bound for a run in which every suboptimal arm ``a`` is placed in at
    most ``L / gap(a)**2`` layers.

    >>> from graphbandit.graph import generate
    >>> lemma2_bound(1.0, [0.0, 0.5], generate("empty", 2), 2)
    9.0
    """
    if T < 1:
        raise ValueError(f"T must be positive, got {T}")
    return 4.0 * math.log2(T) * L * max_gap_weighted_independent_sum(g, gaps) + 1.0


def layering_report(tracker: LayeringTracker, g: FeedbackGraph, arms: Sequence[int]) -> dict:
    """JSON-ready summary: per-arm highest layer, occupancy, verdicts."""
    independence = verify_layer_independence(tracker, g)
    counts = verify_placement_counts(tracker, observation_log(g, arms))
    return {
        "lambda": tracker.lam.tolist(),
        "occupancy": {str(l): c for l, c in tracker.occupancy().items()},
        "independence_violations": [list(p) for p in independence],
        "placement_count_violations": [list(v) for v in counts],
        "ok": not independence and not counts,
    }
