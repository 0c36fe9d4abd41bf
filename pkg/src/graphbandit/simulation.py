"""Running one policy against one environment for ``T`` steps.

:func:`simulate` executes a whole run inside a compiled kernel.
:func:`simulate_stepwise` drives the Python policy objects one step at a
time through the public ``select``/``update`` contract. The two use the
same streams in the same order and must agree decision for decision; the
stepwise loop is the reference and the kernel is what the harness uses.

Per step, in order: the policy selects (policy stream), the environment
draws a full reward vector (environment stream), the policy is updated with
the rewards of the selected arm's closed neighborhood (policy stream again
for Thompson Sampling's binarization).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .environment import RewardModel, draw_rewards, gap_profile, sample_rewards
from .graph import FeedbackGraph
from .policies import (
    AAE_IS,
    AAE_MINOBS,
    KIND_CODES,
    TS_N,
    UCB_N,
    PolicySpec,
    binarize_observations,
    eliminate_inplace,
    fill_round_queue,
    log_term,
    make_policy,
    record_observations,
    select_min_observed,
    select_thompson,
    select_ucb,
)
from .rng import Stream, mix64


@dataclass
class RunResult:
    """Everything a single (policy, replication) run produces."""

    arms: np.ndarray          # selected arm at t = 1..T
    earned: np.ndarray        # realized reward of the selected arm
    observations: np.ndarray  # final per-arm observation counts
    active: np.ndarray        # final active mask (all True for non-elimination policies)
    env_digest: int           # hash of every reward vector the environment drew

    def pulls(self, k: int) -> np.ndarray:
        return np.bincount(self.arms, minlength=k)


@njit(cache=True)
def fold_rewards(digest, rewards):
    """Fold the bit patterns of a reward vector into a running digest."""
    bits = rewards.view(np.uint64)
    for a in range(bits.shape[0]):
        digest = mix64(digest, bits[a])
    return digest


@njit(cache=True)
def _run(kind, anytime, horizon, delta, ptr, idx, means, coupling, precision, env_s, pol_s):
    k = means.shape[0]
    arms = np.empty(horizon, dtype=np.int64)
    earned = np.empty(horizon, dtype=np.float64)
    n = np.zeros(k, dtype=np.int64)
    sums = np.zeros(k, dtype=np.float64)
    successes = np.zeros(k, dtype=np.int64)
    failures = np.zeros(k, dtype=np.int64)
    active = np.ones(k, dtype=np.bool_)
    queue = np.zeros(k, dtype=np.int64)
    qpos = 0
    qlen = 0
    rewards = np.zeros(k, dtype=np.float64)
    digest = np.uint64(0)
    fixed_lt = math.log(2.0 * k * horizon / delta)
    for t in range(1, horizon + 1):
        lt = log_term(k, t, delta) if anytime else fixed_lt
        if kind == AAE_IS:
            if qpos == qlen:
                qlen = fill_round_queue(ptr, idx, active, queue)
                qpos = 0
            arm = queue[qpos]
            qpos += 1
        elif kind == AAE_MINOBS:
            arm = select_min_observed(n, active)
        elif kind == UCB_N:
            arm = select_ucb(n, sums, lt)
        else:
            arm = select_thompson(successes, failures, pol_s)

        draw_rewards(means, coupling, precision, env_s, rewards)
        digest = fold_rewards(digest, rewards)

        arms[t - 1] = arm
        earned[t - 1] = rewards[arm]
        record_observations(ptr, idx, arm, rewards, n, sums)
        if kind == TS_N:
            binarize_observations(ptr, idx, arm, rewards, successes, failures, pol_s)
        elif kind == AAE_IS:
            if qpos == qlen:
                eliminate_inplace(active, n, sums, lt)
        elif kind == AAE_MINOBS:
            eliminate_inplace(active, n, sums, lt)
    return arms, earned, n, active, digest


def _check_sizes(graph: FeedbackGraph, model: RewardModel) -> None:
    if graph.k != model.k:
        raise ValueError(f"graph has {graph.k} arms but the model has {model.k} means")


def simulate(spec: PolicySpec | str, graph: FeedbackGraph, model: RewardModel, horizon: int,
             env_rng: Stream, policy_rng: Stream) -> RunResult:
    """Run ``spec`` for ``horizon`` steps in the compiled kernel.

    Both streams are advanced in place.
    """
    if isinstance(spec, str):
        spec = PolicySpec(spec)
    _check_sizes(graph, model)
    if horizon < 1:
        raise ValueError(f"horizon must be positive, got {horizon}")
    ptr, idx = graph.closed_csr()
    arms, earned, n, active, digest = _run(
        KIND_CODES[spec.kind], spec.is_anytime, int(horizon), spec.resolved_delta(horizon),
        ptr, idx, model.means_array(), model.coupling_code, float(model.precision),
        env_rng.state, policy_rng.state)
    return RunResult(arms, earned, n, active, int(digest))


def simulate_stepwise(spec: PolicySpec | str, graph: FeedbackGraph, model: RewardModel,
                      horizon: int, env_rng: Stream, policy_rng: Stream) -> RunResult:
    """Reference loop over the public policy contract (slow, for testing)."""
    _check_sizes(graph, model)
    policy = make_policy(spec, graph, horizon)
    arms = np.empty(horizon, dtype=np.int64)
    earned = np.empty(horizon, dtype=np.float64)
    digest = np.uint64(0)
    for t in range(1, horizon + 1):
        arm = policy.select(t, policy_rng)
        r = sample_rewards(model, env_rng)
        digest = np.uint64(fold_rewards(digest, r))
        arms[t - 1] = arm
        earned[t - 1] = r[arm]
        policy.update(t, arm, {b: float(r[b]) for b in graph.closed_neighborhood(arm)}, policy_rng)
    active = getattr(policy, "active_mask", np.ones(graph.k, dtype=np.bool_))
    return RunResult(arms, earned, policy.stats.n.copy(), active.copy(), int(digest))


def optimal_eliminated(result: RunResult, model: RewardModel) -> bool:
    return not bool(result.active[gap_profile(model).optimal])
