"""Learners for bandits with graph feedback.

All four policies share one contract::

    arm = policy.select(t, rng)
    policy.update(t, arm, observed, rng)   # observed: {arm: reward} over {arm} ∪ N(arm)

* ``aae_is``     — active-arm elimination, playing a greedy maximal
  independent set of the active arms each round and eliminating at the end
  of the round.
* ``aae_minobs`` — active-arm elimination that always plays the active arm
  observed least often, eliminating after every step.
* ``ucb_n``      — UCB whose statistics include side observations.
* ``ts_n``       — Thompson Sampling with Beta(1, 1) priors, side
  observations and Bernoulli binarization of fractional rewards.

Every argmax/argmin breaks ties toward the lowest arm index. The numeric
work lives in small compiled helpers that the whole-run kernel in
:mod:`graphbandit.simulation` calls too, so both paths make identical
decisions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np
from numba import njit

from .graph import FeedbackGraph
from .numerics import beta_variate
from .rng import Stream, next_double

AAE_IS = 0
AAE_MINOBS = 1
UCB_N = 2
TS_N = 3

KIND_CODES = {"aae_is": AAE_IS, "aae_minobs": AAE_MINOBS, "ucb_n": UCB_N, "ts_n": TS_N}
POLICY_NAMES = ("aae_is", "aae_minobs", "ucb_n", "ucb_n_anytime", "ts_n")


# ------------------------------------------------------------------ compiled helpers


@njit(cache=True)
def log_term(k, horizon, delta):
    """ln(2 k H / delta), the numerator of the squared confidence radius."""
    return math.log(2.0 * k * horizon / delta)


@njit(cache=True)
def radius_from_log(n, lt):
    if n == 0:
        return math.inf
    return math.sqrt(lt / (2.0 * n))


@njit(cache=True)
def eliminate_inplace(active, n, sums, lt):
    """Drop active arms whose upper bound is below the best lower bound.

    Unobserved arms have infinite radius: they are never dropped and their
    lower bound (-inf) never drops anyone. Returns the number removed.
    """
    k = active.shape[0]
    best_lower = -math.inf
    for a in range(k):
        if active[a] and n[a] > 0:
            lower = sums[a] / n[a] - radius_from_log(n[a], lt)
            if lower > best_lower:
                best_lower = lower
    removed = 0
    for a in range(k):
        if active[a] and n[a] > 0:
            if sums[a] / n[a] + radius_from_log(n[a], lt) < best_lower:
                active[a] = False
                removed += 1
    return removed


@njit(cache=True)
def fill_round_queue(ptr, idx, active, queue):
    """Greedy maximal independent set of the active arms, ascending index.

    ``idx[ptr[a]:ptr[a+1]]`` is the closed neighborhood of ``a``. Writes the
    set into ``queue`` and returns its size.
    """
    k = active.shape[0]
    blocked = np.zeros(k, dtype=np.bool_)
    m = 0
    for a in range(k):
        if active[a] and not blocked[a]:
            queue[m] = a
            m += 1
            for j in range(ptr[a], ptr[a + 1]):
                blocked[idx[j]] = True
    return m


@njit(cache=True)
def select_min_observed(n, active):
    best = -1
    for a in range(n.shape[0]):
        if active[a] and (best < 0 or n[a] < n[best]):
            best = a
    return best


@njit(cache=True)
def select_ucb(n, sums, lt):
    best = 0
    best_index = -math.inf
    for a in range(n.shape[0]):
        if n[a] == 0:
            index = math.inf
        else:
            index = sums[a] / n[a] + radius_from_log(n[a], lt)
        if index > best_index:
            best_index = index
            best = a
    return best


@njit(cache=True)
def select_thompson(successes, failures, s):
    best = 0
    best_theta = -1.0
    for a in range(successes.shape[0]):
        theta = beta_variate(successes[a] + 1.0, failures[a] + 1.0, s)
        if theta > best_theta:
            best_theta = theta
            best = a
    return best


@njit(cache=True)
def record_observations(ptr, idx, arm, rewards, n, sums):
    for j in range(ptr[arm], ptr[arm + 1]):
        b = idx[j]
        n[b] += 1
        sums[b] += rewards[b]


@njit(cache=True)
def binarize_observations(ptr, idx, arm, rewards, successes, failures, s):
    # One Bernoulli(r) trial per observed arm, ascending arm order.
    for j in range(ptr[arm], ptr[arm + 1]):
        b = idx[j]
        if next_double(s) < rewards[b]:
            successes[b] += 1
        else:
            failures[b] += 1


# ------------------------------------------------------------------ public helpers


def confidence_radius(n: int, k: int, horizon: int, delta: float) -> float:
    """Half-width ``sqrt(ln(2 k H / delta) / (2 N))``; infinite when ``N == 0``.

    >>> round(confidence_radius(10_000, 2, 10_000, 0.01), 4)
    0.0276
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if horizon < 1:
        raise ValueError(f"horizon must be positive, got {horizon}")
    if n < 0:
        raise ValueError(f"observation count must be nonnegative, got {n}")
    return float(radius_from_log(int(n), log_term(k, horizon, delta)))


@dataclass
class ArmStats:
    """Running per-arm statistics; ``n`` counts observations, not pulls."""

    n: np.ndarray
    reward_sum: np.ndarray
    successes: np.ndarray
    failures: np.ndarray

    @classmethod
    def zeros(cls, k: int) -> "ArmStats":
        return cls(np.zeros(k, dtype=np.int64), np.zeros(k, dtype=np.float64),
                   np.zeros(k, dtype=np.int64), np.zeros(k, dtype=np.int64))

    @property
    def means(self) -> np.ndarray:
        """Empirical means; NaN for unobserved arms."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.n > 0, self.reward_sum / np.maximum(self.n, 1), np.nan)


def eliminate(active: set[int] | frozenset[int], stats: ArmStats, k: int, horizon: int,
              delta: float) -> set[int]:
    """Active set after one elimination pass (pure; ``active`` is not modified)."""
    if not active:
        raise ValueError("active set must be nonempty")
    mask = np.zeros(k, dtype=np.bool_)
    mask[list(active)] = True
    eliminate_inplace(mask, stats.n, stats.reward_sum, log_term(k, horizon, delta))
    return set(np.flatnonzero(mask).tolist())


@dataclass(frozen=True)
class PolicySpec:
    """A named policy with its confidence parameter.

    ``delta=None`` means "use 1/T". ``ucb_n_anytime`` is shorthand for
    ``ucb_n`` with ``anytime=True``.
    """

    name: str
    delta: Optional[float] = None
    anytime: bool = False

    def __post_init__(self):
        if self.name not in POLICY_NAMES:
            raise ValueError(f"unknown policy {self.name!r}; expected one of {POLICY_NAMES}")
        if self.delta is not None and not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.anytime and self.kind == "ts_n":
            raise ValueError("ts_n has no confidence radius, so anytime does not apply")

    @property
    def kind(self) -> str:
        return "ucb_n" if self.name == "ucb_n_anytime" else self.name

    @property
    def is_anytime(self) -> bool:
        return self.anytime or self.name == "ucb_n_anytime"

    @property
    def label(self) -> str:
        label = self.name
        if self.is_anytime and not label.endswith("_anytime"):
            label += "_anytime"
        if self.delta is not None:
            label += f"[delta={self.delta:g}]"
        return label

    def resolved_delta(self, horizon: int) -> float:
        if self.delta is not None:
            return self.delta
        # 1/T, kept strictly inside (0, 1) for the degenerate T = 1.
        return 1.0 / horizon if horizon > 1 else 0.5


# ------------------------------------------------------------------ policy classes


class Policy:
    """Common state and the observation bookkeeping shared by all learners."""

    kind = ""

    def __init__(self, graph: FeedbackGraph, horizon: int, delta: Optional[float] = None,
                 anytime: bool = False):
        if horizon < 1:
            raise ValueError(f"horizon must be positive, got {horizon}")
        self.graph = graph
        self.k = graph.k
        self.horizon = int(horizon)
        if delta is None:
            delta = PolicySpec(self.kind or "ucb_n").resolved_delta(horizon)
        self.delta = float(delta)
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        self.anytime = bool(anytime)
        self.stats = ArmStats.zeros(self.k)
        self._ptr, self._idx = graph.closed_csr()
        self._rewards = np.zeros(self.k, dtype=np.float64)

    def _log_term(self, t: int) -> float:
        return log_term(self.k, t if self.anytime else self.horizon, self.delta)

    def _check_time(self, t: int) -> None:
        if not 1 <= t <= self.horizon:
            raise ValueError(f"time {t} outside [1, {self.horizon}]")

    def _record(self, selected: int, observed: Mapping[int, float]) -> None:
        expected = set(self.graph.closed_neighborhood(selected))
        if set(observed) != expected:
            raise ValueError(f"observed arms {sorted(observed)} do not match the closed "
                             f"neighborhood {sorted(expected)} of arm {selected}")
        for b, r in observed.items():
            if not 0.0 <= r <= 1.0:
                raise ValueError(f"reward {r} of arm {b} outside [0, 1]")
            self._rewards[b] = r
        record_observations(self._ptr, self._idx, selected, self._rewards,
                            self.stats.n, self.stats.reward_sum)

    def select(self, t: int, rng: Stream) -> int:
        raise NotImplementedError

    def update(self, t: int, selected: int, observed: Mapping[int, float], rng: Stream) -> "Policy":
        raise NotImplementedError


class _Elimination(Policy):
    def __init__(self, graph, horizon, delta=None, anytime=False):
        super().__init__(graph, horizon, delta, anytime)
        self.active_mask = np.ones(self.k, dtype=np.bool_)

    @property
    def active(self) -> set[int]:
        return set(np.flatnonzero(self.active_mask).tolist())

    def _eliminate(self, t: int) -> int:
        return int(eliminate_inplace(self.active_mask, self.stats.n, self.stats.reward_sum,
                                     self._log_term(t)))


class AAEIndependentSets(_Elimination):
    """Rounds over greedy maximal independent sets of the active arms."""

    kind = "aae_is"

    def __init__(self, graph, horizon, delta=None, anytime=False):
        super().__init__(graph, horizon, delta, anytime)
        self._queue = np.zeros(self.k, dtype=np.int64)
        self._qpos = 0
        self._qlen = 0
        self.rounds = 0

    @property
    def round_queue(self) -> list[int]:
        """Arms still to be played this round."""
        return self._queue[self._qpos:self._qlen].tolist()

    def select(self, t, rng):
        self._check_time(t)
        if self._qpos == self._qlen:
            self._qlen = int(fill_round_queue(self._ptr, self._idx, self.active_mask, self._queue))
            self._qpos = 0
            self.rounds += 1
        arm = int(self._queue[self._qpos])
        self._qpos += 1
        return arm

    def update(self, t, selected, observed, rng):
        self._record(selected, observed)
        if self._qpos == self._qlen:
            self._eliminate(t)
        return self


class AAEMinObservations(_Elimination):
    """Plays the least-observed active arm; eliminates after every step."""

    kind = "aae_minobs"

    def select(self, t, rng):
        self._check_time(t)
        return int(select_min_observed(self.stats.n, self.active_mask))

    def update(self, t, selected, observed, rng):
        self._record(selected, observed)
        self._eliminate(t)
        return self


class UCBN(Policy):
    kind = "ucb_n"

    def select(self, t, rng):
        self._check_time(t)
        return int(select_ucb(self.stats.n, self.stats.reward_sum, self._log_term(t)))

    def update(self, t, selected, observed, rng):
        self._record(selected, observed)
        return self


class TSN(Policy):
    """Thompson Sampling; ``delta`` and ``anytime`` are accepted but unused."""

    kind = "ts_n"

    def select(self, t, rng):
        self._check_time(t)
        return int(select_thompson(self.stats.successes, self.stats.failures, rng.state))

    def update(self, t, selected, observed, rng):
        self._record(selected, observed)
        binarize_observations(self._ptr, self._idx, selected, self._rewards,
                              self.stats.successes, self.stats.failures, rng.state)
        return self


_CLASSES = {"aae_is": AAEIndependentSets, "aae_minobs": AAEMinObservations, "ucb_n": UCBN, "ts_n": TSN}


def make_policy(spec: PolicySpec | str, graph: FeedbackGraph, horizon: int) -> Policy:
    if isinstance(spec, str):
        spec = PolicySpec(spec)
    cls = _CLASSES[spec.kind]
    return cls(graph, horizon, spec.resolved_delta(horizon), spec.is_anytime)
