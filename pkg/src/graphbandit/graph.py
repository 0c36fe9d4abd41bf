"""Feedback graphs and the independent-set combinatorics used by the
learners and the regret-bound evaluators."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .rng import derive_seed

GENERATOR_KINDS = ("empty", "complete", "star", "cycle", "gnp")

#: Largest arm count accepted by the exact independent-set searches.
EXACT_SEARCH_MAX_K = 30


@dataclass(frozen=True)
class FeedbackGraph:
    """Undirected, irreflexive graph on arms ``0..k-1``.

    Selecting arm ``a`` reveals the rewards of ``a`` and of every arm in
    ``neighbors[a]``. Self-observation is implicit and never stored as an edge.
    """

    k: int
    neighbors: tuple[tuple[int, ...], ...]
    _bits: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"arm count must be positive, got {self.k}")
        if len(self.neighbors) != self.k:
            raise ValueError("neighbors must list one entry per arm")
        bits = []
        for a, nbrs in enumerate(self.neighbors):
            mask = 0
            for b in nbrs:
                if not 0 <= b < self.k:
                    raise ValueError(f"neighbor index {b} of arm {a} out of range [0, {self.k})")
                if b == a:
                    raise ValueError(f"self-loop on arm {a}")
                if a not in self.neighbors[b]:
                    raise ValueError(f"adjacency not symmetric for pair ({a}, {b})")
                mask |= 1 << b
            bits.append(mask)
        object.__setattr__(self, "_bits", tuple(bits))

    def adjacent(self, a: int, b: int) -> bool:
        return bool(self._bits[a] >> b & 1)

    def closed_neighborhood(self, a: int) -> tuple[int, ...]:
        """``{a} ∪ N(a)`` in ascending order."""
        return tuple(sorted((a, *self.neighbors[a])))

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(a, b) for a in range(self.k) for b in self.neighbors[a] if a < b]

    @property
    def neighbor_masks(self) -> tuple[int, ...]:
        """Per-arm neighbor sets as Python-int bitmasks."""
        return self._bits

    def adjacency_matrix(self) -> np.ndarray:
        adj = np.zeros((self.k, self.k), dtype=np.bool_)
        for a, b in self.edges:
            adj[a, b] = adj[b, a] = True
        return adj

    def closed_csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Closed neighborhoods in CSR form: ``idx[ptr[a]:ptr[a+1]]``."""
        ptr = np.zeros(self.k + 1, dtype=np.int64)
        idx: list[int] = []
        for a in range(self.k):
            idx.extend(self.closed_neighborhood(a))
            ptr[a + 1] = len(idx)
        return ptr, np.asarray(idx, dtype=np.int64)

    def is_independent(self, arms: Iterable[int]) -> bool:
        arms = list(arms)
        return not any(self.adjacent(a, b) for i, a in enumerate(arms) for b in arms[i + 1:])

    def to_dict(self) -> dict:
        return {"k": self.k, "edges": [list(e) for e in self.edges]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def build_graph(k: int, edges: Iterable[Sequence[int]]) -> FeedbackGraph:
    """Build a graph from unordered pairs; duplicates collapse.

    >>> build_graph(3, [(0, 1), (1, 2)]).neighbors
    ((1,), (0, 2), (1,))
    """
    if k < 1:
        raise ValueError(f"arm count must be positive, got {k}")
    adj: list[set[int]] = [set() for _ in range(k)]
    for pair in edges:
        a, b = (int(v) for v in pair)
        for v in (a, b):
            if not 0 <= v < k:
                raise ValueError(f"edge ({a}, {b}) has endpoint {v} out of range [0, {k})")
        if a == b:
            raise ValueError(f"self-loop on arm {a} is not allowed")
        adj[a].add(b)
        adj[b].add(a)
    return FeedbackGraph(k, tuple(tuple(sorted(s)) for s in adj))


def graph_from_dict(data: dict) -> FeedbackGraph:
    return build_graph(int(data["k"]), data.get("edges", []))


def _gnp_coin(seed: int, a: int, b: int) -> float:
    return (derive_seed("gnp", seed, a, b) >> 11) / 9007199254740992.0


def generate(kind: str, k: int, p: float = 0.0, seed: int = 0) -> FeedbackGraph:
    """Deterministic graph generator.

    ``star`` puts the center at arm 0. ``gnp`` keeps edge ``{a, b}`` when a
    hash of ``(seed, a, b)`` mapped to [0, 1) falls below ``p``; the coin of
    each pair does not depend on iteration order.
    """
    if kind not in GENERATOR_KINDS:
        raise ValueError(f"unknown graph kind {kind!r}; expected one of {', '.join(GENERATOR_KINDS)}")
    if k < 1:
        raise ValueError(f"arm count must be positive, got {k}")
    if kind == "empty":
        edges = []
    elif kind == "complete":
        edges = [(a, b) for a in range(k) for b in range(a + 1, k)]
    elif kind == "star":
        if k < 2:
            raise ValueError("a star needs at least 2 arms")
        edges = [(0, b) for b in range(1, k)]
    elif kind == "cycle":
        edges = [(a, (a + 1) % k) for a in range(k)] if k >= 3 else [(a, b) for a in range(k) for b in range(a + 1, k)]
    else:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"edge probability must lie in [0, 1], got {p}")
        edges = [(a, b) for a in range(k) for b in range(a + 1, k) if _gnp_coin(seed, a, b) < p]
    return build_graph(k, edges)


def parse_graph_spec(spec: str) -> FeedbackGraph:
    """Parse a generator string such as ``"star:5"`` or ``"gnp:20:0.3:42"``."""
    parts = spec.strip().split(":")
    kind = parts[0]
    arity = (3, 4) if kind == "gnp" else (2,)
    try:
        if len(parts) not in arity:
            raise ValueError
        k = int(parts[1])
        p = float(parts[2]) if kind == "gnp" else 0.0
        seed = int(parts[3]) if len(parts) == 4 else 0
    except ValueError:
        raise ValueError(f"malformed graph spec {spec!r}; expected KIND:K or gnp:K:P[:SEED]") from None
    return generate(kind, k, p, seed)


# ---------------------------------------------------------------- independent sets


def greedy_maximal_independent_set(g: FeedbackGraph, candidates: Iterable[int] | None = None) -> list[int]:
    """Scan candidates in ascending order, keeping each one with no kept neighbor."""
    pool = range(g.k) if candidates is None else sorted(set(candidates))
    chosen: list[int] = []
    blocked = 0
    for a in pool:
        if not 0 <= a < g.k:
            raise ValueError(f"candidate {a} out of range [0, {g.k})")
        if not blocked >> a & 1:
            chosen.append(a)
            blocked |= g.neighbor_masks[a] | (1 << a)
    return chosen


def _bits_of(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def _check_exact_budget(g: FeedbackGraph) -> None:
    if g.k > EXACT_SEARCH_MAX_K:
        raise ValueError(
            f"exact independent-set search is limited to k <= {EXACT_SEARCH_MAX_K} (got k={g.k}); "
            "use greedy_maximal_independent_set for larger graphs"
        )


def _clique_partition_bound(pool: int, nbr: Sequence[int], weights: Sequence[float] | None) -> float:
    # An independent set meets each clique at most once, so summing the best
    # weight (or 1) per clique of any partition bounds what remains.
    total = 0.0
    while pool:
        low = pool & -pool
        v = low.bit_length() - 1
        clique_ok = pool & nbr[v]
        best = 1.0 if weights is None else weights[v]
        pool ^= low
        while clique_ok:
            low = clique_ok & -clique_ok
            u = low.bit_length() - 1
            pool ^= low
            clique_ok &= nbr[u]
            if weights is not None and weights[u] > best:
                best = weights[u]
        total += best
    return total


def maximum_independent_set(g: FeedbackGraph) -> list[int]:
    """Exact maximum independent set by branch and bound.

    Among maximum sets the lexicographically smallest (as a sorted list) is
    returned. The incumbent starts from the ascending greedy set, which is the
    smallest such set of its own size.
    """
    _check_exact_budget(g)
    nbr = g.neighbor_masks
    best = greedy_maximal_independent_set(g)
    best_mask = sum(1 << a for a in best)
    best_size = len(best)

    def search(chosen: int, size: int, pool: int) -> None:
        nonlocal best_mask, best_size
        if not pool:
            if size > best_size:
                best_mask, best_size = chosen, size
            return
        if size + _clique_partition_bound(pool, nbr, None) <= best_size:
            return
        low = pool & -pool
        v = low.bit_length() - 1
        search(chosen | low, size + 1, pool & ~low & ~nbr[v])
        if pool & nbr[v]:
            search(chosen, size, pool & ~low)

    search(0, 0, (1 << g.k) - 1)
    return _bits_of(best_mask)


def independence_number(g: FeedbackGraph) -> int:
    return len(maximum_independent_set(g))


def max_gap_weighted_independent_sum(g: FeedbackGraph, gaps: Sequence[float]) -> float:
    """``max`` over independent sets ``I`` of ``sum(1/gap)`` over arms of ``I``.

    Zero-gap (optimal) arms contribute nothing.
    """
    _check_exact_budget(g)
    if len(gaps) != g.k:
        raise ValueError(f"expected {g.k} gaps, got {len(gaps)}")
    if any(x < 0 for x in gaps):
        raise ValueError("gaps must be nonnegative")
    weights = [1.0 / x if x > 0 else 0.0 for x in gaps]
    nbr = g.neighbor_masks
    # Zero-weight arms never change the optimum.
    pool0 = sum(1 << a for a in range(g.k) if weights[a] > 0)
    best = 0.0

    def search(value: float, pool: int) -> None:
        nonlocal best
        if not pool:
            if value > best:
                best = value
            return
        if value + _clique_partition_bound(pool, nbr, weights) <= best:
            return
        low = pool & -pool
        v = low.bit_length() - 1
        search(value + weights[v], pool & ~low & ~nbr[v])
        if pool & nbr[v]:
            search(value, pool & ~low)

    search(0.0, pool0)
    return best


def greedy_clique_cover_size(g: FeedbackGraph) -> int:
    """Number of cliques in a greedy clique partition.

    Each clique starts at the lowest uncovered arm and absorbs, in ascending
    order, every uncovered arm adjacent to all current members.
    """
    nbr = g.neighbor_masks
    uncovered = (1 << g.k) - 1
    count = 0
    while uncovered:
        low = uncovered & -uncovered
        uncovered ^= low
        common = uncovered & nbr[low.bit_length() - 1]
        while common:
            nxt = common & -common
            uncovered ^= nxt
            common &= nbr[nxt.bit_length() - 1] & ~nxt
        count += 1
    return count
