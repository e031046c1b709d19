import json
from pathlib import Path

import numpy as np
import pytest

from sartre.cli import main as cli_main
from sartre.errors import ConfigError
from sartre.graph import read_dag, read_order
from sartre.runner import (
    ExperimentConfig,
    generate_files,
    load_results,
    run_experiment,
    run_trial,
    sweep_lambda,
)
from sartre.synthgen import read_dataset


def _config(**overrides):
    base = dict(
        graph="er", d=5, n=200, trials=2, seed=11, avg_edges=5,
        ordering="ground-truth",
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestConfig:
    def test_er_requires_avg_edges(self):
        with pytest.raises(ConfigError, match="avg_edges"):
            ExperimentConfig(graph="er", d=5, n=100, trials=1, seed=0)

    def test_sf_requires_m(self):
        with pytest.raises(ConfigError, match="requires m"):
            ExperimentConfig(graph="sf", d=5, n=100, trials=1, seed=0)

    def test_high_dimensional_forbids_score_ordering(self):
        with pytest.raises(ConfigError, match="ground-truth"):
            _config(d=64, avg_edges=64, ordering="score")
        # with ground truth order it is accepted
        _config(d=64, avg_edges=64, ordering="ground-truth")

    def test_file_mode_requires_path(self):
        with pytest.raises(ConfigError, match="order_file"):
            _config(ordering="file")

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(ConfigError, match="unknown config keys: bogus"):
            ExperimentConfig.from_dict({"graph": "er", "d": 3, "n": 50,
                                        "trials": 1, "seed": 0, "avg_edges": 2,
                                        "bogus": True})

    def test_round_trips_through_dict(self):
        cfg = _config()
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


class TestGenerate:
    def test_files_load_back(self, tmp_path):
        cfg = _config(d=6, avg_edges=6, n=50)
        generate_files(cfg, tmp_path)
        data = read_dataset(tmp_path / "dataset.csv")
        truth = read_dag(tmp_path / "truth.dag")
        order = read_order(tmp_path / "truth.order")
        assert data.n == 50 and data.d == 6
        assert truth.num_vars == 6
        assert order.consistent_with(truth)

    def test_byte_identical_regeneration(self, tmp_path):
        cfg = _config()
        generate_files(cfg, tmp_path / "a")
        generate_files(cfg, tmp_path / "b")
        for name in ("dataset.csv", "truth.dag", "truth.order"):
            assert (tmp_path / "a" / name).read_bytes() == (
                tmp_path / "b" / name
            ).read_bytes()

    def test_single_variable(self, tmp_path):
        cfg = ExperimentConfig(graph="er", d=1, n=10, trials=1, seed=0,
                               avg_edges=0, ordering="ground-truth")
        generate_files(cfg, tmp_path)
        assert (tmp_path / "dataset.csv").read_text().splitlines()[0] == "x1"
        assert len((tmp_path / "dataset.csv").read_text().splitlines()) == 11
        assert read_dag(tmp_path / "truth.dag").edges == frozenset()


class TestRun:
    def test_trivial_single_variable(self, tmp_path):
        cfg = ExperimentConfig(graph="er", d=1, n=20, trials=1, seed=0,
                               avg_edges=0, ordering="ground-truth")
        summary = run_experiment(cfg, tmp_path)
        assert summary["aggregate"]["shd"]["mean"] == 0.0
        assert summary["aggregate"]["sid"]["mean"] == 0.0

    def test_huge_lambda_gives_empty_graphs(self, tmp_path):
        cfg = _config(lam=1e9, trials=2)
        summary = run_experiment(cfg, tmp_path)
        assert summary["aggregate"]["recall"]["mean"] == 0.0
        for t in range(2):
            est = read_dag(tmp_path / f"trial_{t:03d}_est.dag")
            truth = read_dag(tmp_path / f"trial_{t:03d}_truth.dag")
            assert est.edges == frozenset()
            row = [
                json.loads(line)
                for line in (tmp_path / "trials.jsonl").read_text().splitlines()
            ][t]
            assert row["metrics"]["shd"] == len(truth.edges)

    def test_deterministic_across_invocations_and_workers(self, tmp_path):
        cfg = _config(trials=4)
        run_experiment(cfg, tmp_path / "w1", workers=1)
        run_experiment(cfg, tmp_path / "w4", workers=4)
        run_experiment(cfg, tmp_path / "again", workers=1)
        names = ["results.json", "trials.jsonl"] + [
            f"trial_{t:03d}_{kind}.dag" for t in range(4) for kind in ("truth", "est")
        ]
        for name in names:
            ref = (tmp_path / "w1" / name).read_bytes()
            assert (tmp_path / "w4" / name).read_bytes() == ref, name
            assert (tmp_path / "again" / name).read_bytes() == ref, name

    def test_load_results_validates_aggregate(self, tmp_path):
        cfg = _config()
        run_experiment(cfg, tmp_path)
        loaded = load_results(tmp_path)
        assert loaded["num_failures"] == 0
        assert len(loaded["trials"]) == cfg.trials

    def test_timings_are_separate_and_consistent(self, tmp_path):
        cfg = _config(trials=1)
        run_experiment(cfg, tmp_path)
        timings = json.loads((tmp_path / "timings.json").read_text())
        row = timings["per_trial"][0]
        assert row["order_seconds"] >= 0
        assert row["prune_seconds"] >= 0
        assert row["order_seconds"] + row["prune_seconds"] <= row["total_seconds"] + 1e-6
        assert "seconds" not in (tmp_path / "results.json").read_text()

    def test_score_ordering_mode_runs(self):
        cfg = _config(d=3, avg_edges=2, n=150, trials=1, ordering="score")
        result = run_trial(cfg, 0)
        assert result.ordering_info["mode"] == "score"
        assert sorted(result.order.perm) == [1, 2, 3]

    def test_order_file_mode(self, tmp_path):
        order_path = tmp_path / "fixed.order"
        order_path.write_text("5,4,3,2,1\n")
        cfg = _config(ordering="file", order_file=str(order_path), trials=1)
        result = run_trial(cfg, 0)
        assert result.order.perm == (5, 4, 3, 2, 1)

    def test_failed_trials_recorded_and_skipped(self, tmp_path, monkeypatch):
        import sartre.runner as runner_mod
        from sartre.errors import NumericalError

        real = runner_mod.run_trial

        def flaky(config, trial):
            if trial == 1:
                raise NumericalError("synthetic failure for test")
            return real(config, trial)

        monkeypatch.setattr(runner_mod, "run_trial", flaky)
        summary = runner_mod.run_experiment(_config(trials=3), tmp_path)
        assert summary["num_failures"] == 1
        assert summary["failures"][0]["trial"] == 1
        rows = (tmp_path / "trials.jsonl").read_text().splitlines()
        assert len(rows) == 2  # failed trial excluded from rows and aggregates


class TestSweep:
    def test_paired_datasets_and_monotone_extremes(self, tmp_path):
        cfg = _config(trials=3, n=300)
        rows = sweep_lambda(cfg, [0.1, 10.0], tmp_path)
        by_trial = {}
        for r in rows:
            by_trial.setdefault(r["trial"], set()).add(r["dataset_hash"])
        assert all(len(hashes) == 1 for hashes in by_trial.values())
        edges = {
            (r["lambda"], r["trial"]): r["value"]
            for r in rows
            if r["metric"] == "num_edges_est"
        }
        hits = sum(edges[(10.0, t)] <= edges[(0.1, t)] for t in range(3))
        assert hits == 3

    def test_csv_outputs(self, tmp_path):
        cfg = _config(trials=1)
        sweep_lambda(cfg, [0.1, 0.2], tmp_path)
        lines = (tmp_path / "sweep.csv").read_text().splitlines()
        assert lines[0] == "lambda,trial,dataset_hash,metric,value"
        summary = (tmp_path / "sweep_summary.csv").read_text().splitlines()
        assert summary[0] == "metric,lambda,mean,std"
        assert len(summary) == 1 + 6 * 2  # six metrics x two lambdas

    def test_empty_lambda_list_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            sweep_lambda(_config(), [], tmp_path)


class TestCli:
    def test_gen_order_prune_eval_pipeline(self, tmp_path, capsys):
        gen_dir = tmp_path / "g"
        assert cli_main([
            "gen", "--graph", "er", "--d", "4", "--avg-edges", "4", "--n", "150",
            "--trials", "1", "--seed", "5", "--out", str(gen_dir),
        ]) == 0
        assert cli_main([
            "order", "--data", str(gen_dir / "dataset.csv"),
            "--out", str(tmp_path / "est.order"),
        ]) == 0
        assert cli_main([
            "prune", "--data", str(gen_dir / "dataset.csv"),
            "--order", str(gen_dir / "truth.order"),
            "--out", str(tmp_path / "est.dag"),
            "--model-dump", str(tmp_path / "model.json"),
        ]) == 0
        capsys.readouterr()  # drop accumulated output of prior commands
        assert cli_main([
            "eval", "--truth", str(gen_dir / "truth.dag"),
            "--est", str(tmp_path / "est.dag"),
        ]) == 0
        metrics = json.loads(capsys.readouterr().out)
        assert "shd" in metrics and "conventions" in metrics
        assert json.loads((tmp_path / "model.json").read_text())["num_vars"] == 4

    def test_eval_identical_files(self, tmp_path, capsys):
        gen_dir = tmp_path / "g"
        cli_main(["gen", "--graph", "er", "--d", "3", "--avg-edges", "2",
                  "--n", "50", "--trials", "1", "--seed", "1", "--out", str(gen_dir)])
        capsys.readouterr()
        assert cli_main(["eval", "--truth", str(gen_dir / "truth.dag"),
                         "--est", str(gen_dir / "truth.dag")]) == 0
        metrics = json.loads(capsys.readouterr().out)
        assert (metrics["shd"], metrics["sid"], metrics["f1"]) == (0, 0, 1.0)

    def test_malformed_dag_exit_code_and_diagnostic(self, tmp_path, capsys):
        bad = tmp_path / "bad.dag"
        bad.write_text("d=2\n1,2\n2;1\n")
        rc = cli_main(["eval", "--truth", str(bad), "--est", str(bad)])
        assert rc == 3
        assert ":3:" in capsys.readouterr().err

    def test_config_error_exit_code(self, tmp_path, capsys):
        rc = cli_main(["run", "--graph", "er", "--d", "3", "--n", "50",
                       "--trials", "1", "--seed", "0",
                       "--out", str(tmp_path)])
        assert rc == 2
        assert "avg_edges" in capsys.readouterr().err

    def test_ingest_bootstrap(self, tmp_path, capsys):
        raw = tmp_path / "raw.csv"
        raw.write_text("u,v\n1,2\n3,4\n5,6\n")
        assert cli_main(["ingest", "--input", str(raw), "--out",
                         str(tmp_path / "c.csv"), "--bootstrap", "7",
                         "--seed", "2"]) == 0
        data = read_dataset(tmp_path / "c.csv")
        assert data.n == 7
        rows = {tuple(r) for r in data.values}
        assert rows <= {(1.0, 2.0), (3.0, 4.0), (5.0, 6.0)}

    def test_run_with_config_file_and_override(self, tmp_path, capsys):
        cfgf = tmp_path / "cfg.json"
        cfgf.write_text(json.dumps({
            "graph": "er", "d": 3, "avg_edges": 2, "n": 80, "trials": 1,
            "seed": 1, "ordering": "ground-truth", "lam": 0.1,
        }))
        assert cli_main(["run", "--config", str(cfgf), "--trials", "2",
                         "--out", str(tmp_path / "r")]) == 0
        summary = json.loads((tmp_path / "r" / "results.json").read_text())
        assert summary["config"]["trials"] == 2  # flag overrides file
