"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``PASS``/``FAIL`` line (with the measured quantity)
before asserting, so the verdicts are visible in ``pytest -v`` output.
"""

import itertools
import math

import numpy as np
import pytest

from graphbandit.bounds import BoundInputs, aae_bound, ucbn_bound
from graphbandit.cli import main
from graphbandit.config import parse_config
from graphbandit.environment import RewardModel, gap_profile, sample_rewards
from graphbandit.graph import build_graph, generate, max_gap_weighted_independent_sum, maximum_independent_set
from graphbandit.harness import run_experiment, summarize
from graphbandit.numerics import beta_binomial_identity_gap
from graphbandit.rng import Stream
from graphbandit.simulation import simulate

ALL_POLICIES = ["aae_is", "aae_minobs", "ucb_n", "ts_n"]

# Ten arms, one optimal. The optimal arm is placed last so the lowest-index
# tie-break never hands it to a policy for free.
TEN_ARMS = [0.7] * 9 + [0.9]
LONG_T = 100_000
REPLICATIONS = 50


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} -- {detail}")
        return ok
    return emit


@pytest.fixture(scope="module")
def ten_arm_runs():
    """UCB-N, AAE-IS and TS-N on the complete and empty graphs, 50 replications each."""
    out = {}
    for graph in ("complete:10", "empty:10"):
        config = parse_config({"graph": graph, "model": {"means": TEN_ARMS}, "policies": ["ucb_n", "aae_is", "ts_n"],
                               "horizon": LONG_T, "replications": REPLICATIONS, "base_seed": 2024})
        out[graph] = (config, {(s.policy, s.t): s.mean for s in summarize(run_experiment(config).records)})
    return out


def test_layering_invariants(report):
    rng = np.random.default_rng(20240601)
    configs, failures, runs = 50, [], 0
    for i in range(configs):
        k = int(rng.integers(2, 21))
        p = float(rng.uniform(0.05, 0.9))
        means = [round(float(m), 3) for m in rng.uniform(0.05, 0.95, size=k)]
        config = parse_config({"graph": f"gnp:{k}:{p}:{i}", "model": {"means": means}, "policies": ALL_POLICIES,
                               "horizon": 10_000, "replications": 3, "base_seed": i, "layering": True})
        for unit in run_experiment(config).units:
            runs += 1
            if unit.layering["independence_violations"] or unit.layering["placement_count_violations"]:
                failures.append((i, unit.policy, unit.replication))
    ok = report(1, "layering invariants", not failures,
                f"{runs} runs over {configs} gnp configs, {len(failures)} with violations")
    assert ok, failures[:5]


def test_beta_binomial_identity(report):
    worst, where = 0.0, None
    for s, f in itertools.product(range(51), repeat=2):
        for i in range(1, 100):
            gap = beta_binomial_identity_gap(s, f, i / 100)
            if gap > worst:
                worst, where = gap, (s, f, i / 100)
    ok = report(2, "beta-binomial identity", worst <= 1e-9, f"max gap {worst:.3e} at (S, F, y) = {where}")
    assert ok


def _dominance(runs, policy, bound_fn):
    worst, final = (math.inf, None), []
    for graph, (config, means) in runs.items():
        spec = next(s for s in config.policy_specs() if s.label == policy)
        inputs = BoundInputs(config.horizon, spec.resolved_delta(config.horizon),
                             gap_profile(config.reward_model()).gaps, config.feedback_graph())
        for t in config.checkpoint_times():
            mean = means[(policy, t)]
            bound = bound_fn(inputs.at_horizon(t))
            if mean > bound:
                return False, f"{graph} t={t}: mean {mean:.2f} > bound {bound:.2f}"
            ratio = bound / mean if mean > 0 else math.inf
            worst = min(worst, (ratio, f"{graph} t={t}"))
            if t == config.horizon:
                final.append(f"{graph} {ratio:.0f}x")
    # at t=1 the phase count log2(1) is 0, so the bound is just T*delta + 1
    return True, (f"all checkpoints on both graphs; tightest bound/mean {worst[0]:.1f} at {worst[1]}; "
                  f"at T: {', '.join(final)}")


def test_ucbn_bound_dominance(report, ten_arm_runs):
    ok, detail = _dominance(ten_arm_runs, "ucb_n", ucbn_bound)
    assert report(3, "UCB-N below its gap-dependent bound", ok, detail)


def test_aae_bound_dominance(report, ten_arm_runs):
    ok, detail = _dominance(ten_arm_runs, "aae_is", aae_bound)
    assert report(4, "AAE-IS below its gap-dependent bound", ok, detail)


def test_graph_feedback_benefit(report, ten_arm_runs):
    # Pilot (base_seed 2024, 50 replications): UCB-N ratio 0.0071, TS-N ratio 0.064.
    ratios = {}
    for policy in ("ucb_n", "ts_n"):
        complete = ten_arm_runs["complete:10"][1][(policy, LONG_T)]
        empty = ten_arm_runs["empty:10"][1][(policy, LONG_T)]
        ratios[policy] = complete / empty
    ok = all(r <= 0.3 for r in ratios.values())
    assert report(5, "complete graph vs empty graph", ok,
                  ", ".join(f"{p} ratio {r:.4f}" for p, r in ratios.items()) + " (threshold 0.3)")


def test_star_graph_linear_scaling(report):
    sizes = [5, 10, 20]
    finals = {"ucb_n": [], "ts_n": []}
    for k in sizes:
        # arm 0 is the center; every spoke has gap 0.2 except the last, which is optimal
        config = parse_config({"graph": f"star:{k}", "model": {"means": [0.7] * (k - 1) + [0.9]},
                               "policies": ["ucb_n", "ts_n"], "horizon": LONG_T, "replications": 20,
                               "base_seed": 7})
        for s in summarize(run_experiment(config).records):
            if s.t == LONG_T:
                finals[s.policy].append(s.mean)
    spokes = np.array([k - 2 for k in sizes], dtype=float)
    r2 = {}
    for policy, ys in finals.items():
        ys = np.asarray(ys)
        slope, intercept = np.polyfit(spokes, ys, 1)
        residual = ys - (slope * spokes + intercept)
        r2[policy] = 1.0 - residual @ residual / ((ys - ys.mean()) @ (ys - ys.mean()))
    ok = all(v >= 0.9 and finals[p][0] < finals[p][1] < finals[p][2] for p, v in r2.items())
    detail = "; ".join(f"{p} regrets {[round(y, 1) for y in finals[p]]} R^2 {r2[p]:.4f}" for p in finals)
    assert report(6, "star graph regret linear in suboptimal spokes", ok, detail)


def classic_ucb(rewards, horizon, delta):
    """Textbook UCB over a precomputed reward table: every unpulled arm first
    (lowest index), then the largest mean-plus-radius, ties to the lowest arm."""
    k = rewards.shape[1]
    counts = [0] * k
    sums = [0.0] * k
    log_term = math.log(2 * k * horizon / delta)
    choices = []
    for t in range(horizon):
        best, best_val = 0, -math.inf
        for a in range(k):
            val = math.inf if counts[a] == 0 else sums[a] / counts[a] + math.sqrt(log_term / (2 * counts[a]))
            if val > best_val:
                best, best_val = a, val
        counts[best] += 1
        sums[best] += rewards[t, best]
        choices.append(best)
    return choices


def test_trace_equivalence(report):
    horizon, seeds = 10_000, range(10)
    model = RewardModel((0.45, 0.5, 0.62, 0.3, 0.6, 0.58, 0.2, 0.61, 0.55, 0.4))
    graph = generate("empty", model.k)
    mismatches = []
    for seed in seeds:
        env = Stream(seed)
        rewards = np.array([sample_rewards(model, env) for _ in range(horizon)])
        ours = simulate("ucb_n", graph, model, horizon, Stream(seed), Stream(seed + 1000)).arms.tolist()
        ref = classic_ucb(rewards, horizon, 1.0 / horizon)
        if ours != ref:
            mismatches.append((seed, next(t for t, (a, b) in enumerate(zip(ours, ref)) if a != b)))
    ok = report(7, "UCB-N on the empty graph equals classic UCB", not mismatches,
                f"{len(seeds)} seeds x {horizon} steps, {len(mismatches)} seeds diverged {mismatches}")
    assert ok


def test_aae_safety(report):
    means = [0.46, 0.48, 0.5, 0.44, 0.42]
    config = parse_config({"graph": "gnp:5:0.4:3", "model": {"means": means},
                           "policies": [{"name": "aae_is", "delta": 0.05}, {"name": "aae_minobs", "delta": 0.05}],
                           "horizon": 20_000, "replications": 200, "base_seed": 99})
    result = run_experiment(config)
    rates = {}
    for spec in config.policy_specs():
        units = [u for u in result.units if u.policy == spec.label]
        rates[spec.label] = sum(u.optimal_eliminated for u in units) / len(units)
    ok = all(r <= 0.10 for r in rates.values())
    assert report(8, "AAE keeps the optimal arm", ok,
                  ", ".join(f"{p} eliminated it in {r:.1%} of 200 runs" for p, r in rates.items()))


def _subset_oracle(k, edges, gaps):
    nbr = [0] * k
    for a, b in edges:
        nbr[a] |= 1 << b
        nbr[b] |= 1 << a
    best_size, best_weight = 0, 0.0
    for mask in range(1 << k):
        members = [a for a in range(k) if mask >> a & 1]
        if any(nbr[a] & mask for a in members):
            continue
        best_size = max(best_size, len(members))
        best_weight = max(best_weight, math.fsum(1.0 / gaps[a] for a in members if gaps[a] > 0))
    return best_size, best_weight


def test_combinatorics_against_enumeration(report):
    rng = np.random.default_rng(77)
    failures = []
    for i in range(100):
        k = int(rng.integers(1, 13))
        p = float(rng.uniform(0, 1))
        edges = [(a, b) for a, b in itertools.combinations(range(k), 2) if rng.uniform() < p]
        gaps = [0.0 if rng.uniform() < 0.2 else float(rng.uniform(0.01, 1)) for _ in range(k)]
        g = build_graph(k, edges)
        size, weight = _subset_oracle(k, edges, gaps)
        mis = maximum_independent_set(g)
        independent = all(b not in g.neighbors[a] for a, b in itertools.combinations(mis, 2))
        w = max_gap_weighted_independent_sum(g, gaps)
        if len(mis) != size or not independent or not math.isclose(w, weight, rel_tol=1e-12, abs_tol=1e-12):
            failures.append(i)
    ok = report(9, "exact solvers vs 2^k enumeration", not failures, f"100 graphs, {len(failures)} disagreements")
    assert ok, failures


def test_determinism(report, tmp_path):
    cfg = tmp_path / "canonical.json"
    cfg.write_text(
        '{"graph": "gnp:12:0.3:5", "model": {"means": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.85, 0.35, 0.25, 0.9],'
        ' "coupling": "beta_independent"}, "policies": ["aae_is", "aae_minobs", "ucb_n", "ucb_n_anytime", "ts_n"],'
        ' "horizon": 5000, "replications": 4, "base_seed": 31337, "layering": true}')
    runs = {"a": ["--jobs", "1"], "b": ["--jobs", "1"], "c": ["--jobs", "8"]}
    for name, extra in runs.items():
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / name), *extra]) == 0
    differing = [f"{run}/{f}" for run in ("b", "c")
                 for f in ("regret.csv", "pulls.csv", "summary.csv", "layering.json", "manifest.json")
                 if (tmp_path / run / f).read_bytes() != (tmp_path / "a" / f).read_bytes()]
    ok = report(10, "byte-identical outputs", not differing,
                "two sequential runs and --jobs 8 vs --jobs 1: " + (", ".join(differing) or "all files identical"))
    assert ok
