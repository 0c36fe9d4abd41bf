import csv
import json

import pytest

from graphbandit.config import parse_config
from graphbandit.environment import gap_profile
from graphbandit.harness import RunRecord, resolve_jobs, run_experiment, run_unit, summarize, write_outputs
from graphbandit.rng import Stream
from graphbandit.simulation import simulate_stepwise


def config(**overrides):
    data = {"graph": "gnp:6:0.4:7", "model": {"means": [0.3, 0.5, 0.9, 0.4, 0.7, 0.6]},
            "policies": ["aae_is", "aae_minobs", "ucb_n", "ts_n"], "horizon": 500, "replications": 3,
            "base_seed": 123}
    data.update(overrides)
    return parse_config(data)


def rec(value, t=1, policy="p", replication=0):
    return RunRecord(policy, replication, t, value, 0.0)


def read(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestSummarize:
    def test_single_replication(self):
        (row,) = summarize([rec(7.5)])
        assert (row.mean, row.std, row.min, row.max, row.replications) == (7.5, 0.0, 7.5, 7.5, 1)

    def test_mean_of_two(self):
        (row,) = summarize([rec(10.0), rec(20.0, replication=1)])
        assert row.mean == 15.0
        assert row.std == pytest.approx(50 ** 0.5)
        assert (row.min, row.max) == (10.0, 20.0)

    def test_all_zero(self):
        (row,) = summarize([rec(0.0, replication=r) for r in range(4)])
        assert (row.mean, row.std, row.min, row.max) == (0.0, 0.0, 0.0, 0.0)

    def test_groups_by_policy_and_time(self):
        rows = summarize([rec(1.0, t=1), rec(3.0, t=2), rec(5.0, t=1, policy="q")])
        assert {(r.policy, r.t): r.mean for r in rows} == {("p", 1): 1.0, ("p", 2): 3.0, ("q", 1): 5.0}


class TestRunExperiment:
    def test_single_arm_zero_regret(self):
        c = parse_config({"graph": "empty:1", "model": {"means": [0.6]},
                          "policies": ["aae_is", "aae_minobs", "ucb_n", "ts_n"], "horizon": 100})
        records = run_experiment(c).records
        assert records and all(r.cum_pseudo_regret == 0.0 for r in records)

    def test_records_ordered_and_monotone(self):
        c = config()
        result = run_experiment(c)
        labels = [s.label for s in c.policy_specs()]
        keys = [(labels.index(r.policy), r.replication, r.t) for r in result.records]
        assert keys == sorted(keys)
        max_gap = gap_profile(c.reward_model()).max_gap
        for u in result.units:
            values = [r.cum_pseudo_regret for r in u.records]
            assert values == sorted(values)
            assert all(r.cum_pseudo_regret <= r.t * max_gap + 1e-9 for r in u.records)
            assert sum(u.pulls) == c.horizon

    def test_environment_shared_across_policies(self):
        result = run_experiment(config())
        for rep in range(3):
            assert len({u.env_digest for u in result.units if u.replication == rep}) == 1
        assert len({u.env_digest for u in result.units}) == 3

    def test_regret_matches_independent_recomputation(self):
        c = config(replications=2)
        model, graph = c.reward_model(), c.feedback_graph()
        gaps = [max(model.means) - m for m in model.means]
        for p, spec in enumerate(c.policy_specs()):
            for rep in range(2):
                run = simulate_stepwise(spec, graph, model, c.horizon, Stream.derived(123, "env", rep),
                                        Stream.derived(123, "policy", spec.label, rep))
                total, expected = 0.0, {}
                for t, arm in enumerate(run.arms, 1):
                    total += gaps[int(arm)]
                    expected[t] = total
                unit = run_unit(c, p, rep)
                for r in unit.records:
                    assert r.cum_pseudo_regret == pytest.approx(expected[r.t], abs=1e-9)

    def test_jobs_do_not_change_results(self):
        c = config()
        a, b = run_experiment(c, jobs=1), run_experiment(c, jobs=3)
        assert a.records == b.records
        assert [u.pulls for u in a.units] == [u.pulls for u in b.units]

    def test_base_seed_changes_results(self):
        a = run_experiment(config()).records
        b = run_experiment(config(base_seed=124)).records
        assert a != b


class TestOutputs:
    def test_files_and_headers(self, tmp_path):
        c = config(layering=True)
        paths = write_outputs(run_experiment(c), tmp_path)
        assert sorted(p.name for p in paths) == ["layering.json", "manifest.json", "pulls.csv",
                                                 "regret.csv", "summary.csv"]
        assert (tmp_path / "regret.csv").read_text().splitlines()[0] == \
            "policy,replication,t,cum_pseudo_regret,cum_reward"
        assert (tmp_path / "pulls.csv").read_text().splitlines()[0] == "policy,replication,arm,count"
        regret = read(tmp_path / "regret.csv")
        assert len(regret) == 4 * 3 * len(c.checkpoint_times())
        pulls = read(tmp_path / "pulls.csv")
        assert len(pulls) == 4 * 3 * 6
        summary = read(tmp_path / "summary.csv")
        assert len(summary) == 4 * len(c.checkpoint_times())
        layering = json.loads((tmp_path / "layering.json").read_text())
        assert layering["all_ok"] and len(layering["runs"]) == 12
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["optimal_arm"] == 2 and not manifest["multiple_optimal"]
        assert set(manifest["optimal_eliminated"]) == {"aae_is", "aae_minobs"}

    def test_no_layering_file_when_disabled(self, tmp_path):
        paths = write_outputs(run_experiment(config(replications=1)), tmp_path)
        assert "layering.json" not in [p.name for p in paths]

    def test_byte_identical_reruns(self, tmp_path):
        c = config()
        write_outputs(run_experiment(c), tmp_path / "a")
        write_outputs(run_experiment(c, jobs=2), tmp_path / "b")
        for name in ("regret.csv", "pulls.csv", "summary.csv", "manifest.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_floats_roundtrip(self, tmp_path):
        result = run_experiment(config(replications=1))
        write_outputs(result, tmp_path)
        written = [float(r["cum_pseudo_regret"]) for r in read(tmp_path / "regret.csv")]
        assert written == [r.cum_pseudo_regret for r in result.records]


class TestResolveJobs:
    def test_explicit_wins(self, monkeypatch):
        monkeypatch.setenv("GRAPHBANDIT_JOBS", "4")
        assert resolve_jobs(2) == 2

    def test_environment_fallback(self, monkeypatch):
        monkeypatch.setenv("GRAPHBANDIT_JOBS", "4")
        assert resolve_jobs(None) == 4

    def test_default(self, monkeypatch):
        monkeypatch.delenv("GRAPHBANDIT_JOBS", raising=False)
        assert resolve_jobs(None) == 1

    @pytest.mark.parametrize("raw", ["zero", "0", "-2"])
    def test_invalid(self, monkeypatch, raw):
        monkeypatch.setenv("GRAPHBANDIT_JOBS", raw)
        with pytest.raises(ValueError):
            resolve_jobs(None)
