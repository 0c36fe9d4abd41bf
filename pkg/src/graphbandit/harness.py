"""Seeded experiment runner and output writers.

A work unit is one (policy, replication) pair. Its environment stream is
seeded from ``(base_seed, "env", replication)`` only, so every policy sees
the same reward vectors in a given replication; its policy stream is seeded
from ``(base_seed, "policy", label, replication)``. Units are independent,
and results are merged in a fixed order (config policy order, replication,
time), so the output does not depend on how many processes ran them.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .config import ExperimentConfig, parse_config
from .environment import gap_profile
from .layering import LayeringTracker, layering_report
from .rng import Stream
from .simulation import simulate


@dataclass(frozen=True)
class RunRecord:
    policy: str
    replication: int
    t: int
    cum_pseudo_regret: float
    cum_reward: float


@dataclass
class UnitResult:
    policy: str
    replication: int
    records: list[RunRecord]
    pulls: list[int]
    env_digest: int
    optimal_eliminated: bool
    layering: Optional[dict] = None


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    units: list[UnitResult]

    @property
    def records(self) -> list[RunRecord]:
        return [r for u in self.units for r in u.records]


@dataclass(frozen=True)
class SummaryRow:
    policy: str
    t: int
    replications: int
    mean: float
    std: float
    min: float
    max: float


def run_unit(config: ExperimentConfig, policy_index: int, replication: int) -> UnitResult:
    spec = config.policy_specs()[policy_index]
    graph = config.feedback_graph()
    model = config.reward_model()
    profile = gap_profile(model)
    env_rng = Stream.derived(config.base_seed, "env", replication)
    policy_rng = Stream.derived(config.base_seed, "policy", spec.label, replication)
    run = simulate(spec, graph, model, config.horizon, env_rng, policy_rng)

    regret = np.cumsum(profile.gaps_array()[run.arms])
    reward = np.cumsum(run.earned)
    records = [RunRecord(spec.label, replication, t, float(regret[t - 1]), float(reward[t - 1]))
               for t in config.checkpoint_times()]
    report = None
    if config.layering:
        report = layering_report(LayeringTracker.replay(graph, run.arms), graph, run.arms)
    return UnitResult(spec.label, replication, records, run.pulls(graph.k).tolist(),
                      run.env_digest, not bool(run.active[profile.optimal]), report)


def _run_unit_job(args: tuple[dict, int, int]) -> UnitResult:
    data, policy_index, replication = args
    return run_unit(parse_config(data), policy_index, replication)


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    """Run every (policy, replication) unit; ``jobs > 1`` uses worker processes."""
    units = [(p, r) for p in range(len(config.policies)) for r in range(config.replications)]
    if jobs <= 1 or len(units) == 1:
        results = [run_unit(config, p, r) for p, r in units]
    else:
        data = config.model_dump(mode="json")
        with ProcessPoolExecutor(max_workers=min(jobs, len(units))) as pool:
            results = list(pool.map(_run_unit_job, [(data, p, r) for p, r in units]))
    order = {label: i for i, label in enumerate(s.label for s in config.policy_specs())}
    results.sort(key=lambda u: (order[u.policy], u.replication))
    _check_shared_environment(results)
    return ExperimentResult(config, results)


def _check_shared_environment(units: Sequence[UnitResult]) -> None:
    digests: dict[int, int] = {}
    for u in units:
        if digests.setdefault(u.replication, u.env_digest) != u.env_digest:
            raise RuntimeError(f"replication {u.replication}: policy {u.policy} saw a different reward stream")


def summarize(records: Iterable[RunRecord]) -> list[SummaryRow]:
    """Per (policy, checkpoint) statistics of cumulative pseudo-regret across
    replications. ``std`` is the sample standard deviation (0 for one run)."""
    groups: dict[tuple[str, int], list[float]] = {}
    for r in records:
        groups.setdefault((r.policy, r.t), []).append(r.cum_pseudo_regret)
    rows = []
    for (policy, t), values in groups.items():
        v = np.asarray(values)
        std = float(v.std(ddof=1)) if len(v) > 1 else 0.0
        rows.append(SummaryRow(policy, t, len(v), float(v.mean()), std, float(v.min()), float(v.max())))
    return rows


# ------------------------------------------------------------------ writers


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[object]]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_outputs(result: ExperimentResult, out_dir: str | Path) -> list[Path]:
    """Write ``regret.csv``, ``pulls.csv``, ``summary.csv``, ``manifest.json``
    and, when layering is on, ``layering.json``. Returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = result.config
    written = []

    path = out / "regret.csv"
    _write_csv(path, ["policy", "replication", "t", "cum_pseudo_regret", "cum_reward"],
               ([r.policy, r.replication, r.t, _fmt(r.cum_pseudo_regret), _fmt(r.cum_reward)]
                for r in result.records))
    written.append(path)

    path = out / "pulls.csv"
    _write_csv(path, ["policy", "replication", "arm", "count"],
               ([u.policy, u.replication, a, c] for u in result.units for a, c in enumerate(u.pulls)))
    written.append(path)

    path = out / "summary.csv"
    _write_csv(path, ["policy", "t", "replications", "mean", "std", "min", "max"],
               ([s.policy, s.t, s.replications, _fmt(s.mean), _fmt(s.std), _fmt(s.min), _fmt(s.max)]
                for s in summarize(result.records)))
    written.append(path)

    profile = gap_profile(config.reward_model())
    manifest = {
        "k": len(profile.gaps),
        "optimal_arm": profile.optimal,
        "gaps": list(profile.gaps),
        "delta_min": profile.delta_min,
        "multiple_optimal": profile.multiple_optimal,
        "horizon": config.horizon,
        "replications": config.replications,
        "checkpoints": config.checkpoint_times(),
        "policies": [s.label for s in config.policy_specs()],
        "env_digests": {str(u.replication): f"{u.env_digest:016x}" for u in result.units},
        "optimal_eliminated": {label: sum(u.optimal_eliminated for u in result.units if u.policy == label)
                               for label in (s.label for s in config.policy_specs())
                               if label.startswith("aae")},
        "config": config.model_dump(mode="json"),
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    written.append(path)

    if config.layering:
        runs = [{"policy": u.policy, "replication": u.replication, **u.layering} for u in result.units]
        path = out / "layering.json"
        path.write_text(json.dumps({"runs": runs, "all_ok": all(r["ok"] for r in runs)}, sort_keys=True) + "\n")
        written.append(path)
    return written


def resolve_jobs(requested: Optional[int]) -> int:
    """``--jobs`` if given, else ``GRAPHBANDIT_JOBS``, else 1."""
    if requested is not None:
        value = requested
    else:
        raw = os.environ.get("GRAPHBANDIT_JOBS", "1")
        try:
            value = int(raw)
        except ValueError:
            raise ValueError(f"GRAPHBANDIT_JOBS must be an integer, got {raw!r}") from None
    if value < 1:
        raise ValueError(f"job count must be at least 1, got {value}")
    return value
