"""Experiment orchestration: seeded trials, persistence, aggregation.

A trial is a pure function of (config, trial index): the master seed is
mixed with the index through the published derivation rule, so results
files are reproducible byte-for-byte from their embedded config echo, and
worker counts cannot change any numbers. Wall-clock measurements are the
one non-deterministic output and live in a separate timings file.
"""

from __future__ import annotations

import dataclasses
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .embed import TreeConfig
from .errors import ConfigError, SartreError
from .graph import (
    Dag,
    GraphMetrics,
    TopologicalOrder,
    evaluate,
    gen_erdos_renyi,
    gen_scale_free,
    read_order,
    write_dag,
    write_order,
)
from .ordering import SteinConfig, estimate_order
from .prune import SartreConfig, sartre_prune
from .synthgen import Dataset, make_mixed_spec, sample_anm, write_dataset
from .util import canonical_json, canonical_json_line, derive_seed, sha256_bytes

_GRAPH_FAMILIES = ("er", "sf")
_ORDERING_MODES = ("score", "ground-truth", "file")
_HIGH_DIM_THRESHOLD = 64
_METRIC_FIELDS = ("shd", "sid", "precision", "recall", "f1")


@dataclass(frozen=True)
class ExperimentConfig:
    graph: str
    d: int
    n: int
    trials: int
    seed: int
    avg_edges: int | None = None
    m: int | None = None
    ordering: str = "score"
    order_file: str | None = None
    p_linear: float = 0.0
    lam: float = 0.1
    num_trees: int = 5
    max_leaves: int = 8
    min_samples_leaf: int = 2
    solver_tol: float = 1e-6
    solver_max_iter: int = 10000
    loss_scale: str = "mean"
    stein_ridge: float = 1e-3
    stein_bandwidth: str | float = "median"
    stein_max_rows: int = 3000

    def __post_init__(self):
        if self.graph not in _GRAPH_FAMILIES:
            raise ConfigError(f"graph must be one of {_GRAPH_FAMILIES}")
        if self.graph == "er" and self.avg_edges is None:
            raise ConfigError("graph 'er' requires avg_edges")
        if self.graph == "sf" and self.m is None:
            raise ConfigError("graph 'sf' requires m")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.ordering not in _ORDERING_MODES:
            raise ConfigError(f"ordering must be one of {_ORDERING_MODES}")
        if self.ordering == "file" and not self.order_file:
            raise ConfigError("ordering 'file' requires order_file")
        if self.d >= _HIGH_DIM_THRESHOLD and self.ordering == "score":
            raise ConfigError(
                f"d >= {_HIGH_DIM_THRESHOLD} requires ordering 'ground-truth' "
                "or 'file' (score ordering does not scale there)"
            )
        if not 0.0 <= self.p_linear <= 1.0:
            raise ConfigError("p_linear must be in [0, 1]")

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        allowed = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(obj) - allowed)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        return asdict(self)

    def sartre_config(self, seed: int) -> SartreConfig:
        return SartreConfig(
            lam=self.lam,
            tree=TreeConfig(
                num_trees=self.num_trees,
                max_leaves=self.max_leaves,
                min_samples_leaf=self.min_samples_leaf,
            ),
            solver_tol=self.solver_tol,
            solver_max_iter=self.solver_max_iter,
            loss_scale=self.loss_scale,
            seed=seed,
        )

    def stein_config(self) -> SteinConfig:
        return SteinConfig(
            bandwidth=self.stein_bandwidth,
            ridge=self.stein_ridge,
            max_rows=self.stein_max_rows,
        )


@dataclass(frozen=True)
class TrialResult:
    trial: int
    seed: int
    metrics: GraphMetrics
    order_seconds: float
    prune_seconds: float
    total_seconds: float
    ordering_info: dict
    truth: Dag
    est: Dag
    order: TopologicalOrder


def _generate_truth(config: ExperimentConfig, seed: int) -> Dag:
    if config.graph == "er":
        return gen_erdos_renyi(config.d, config.avg_edges, seed)
    return gen_scale_free(config.d, config.m, seed)


def generate_trial_data(
    config: ExperimentConfig, trial: int
) -> tuple[int, Dag, Dataset]:
    """Truth DAG and dataset for one trial; shared by run and sweep so
    lambda sweeps see identical per-trial datasets."""
    trial_seed = derive_seed(config.seed, trial)
    truth = _generate_truth(config, derive_seed(trial_seed, 1))
    spec = make_mixed_spec(truth, config.p_linear, seed=derive_seed(trial_seed, 2))
    return trial_seed, truth, sample_anm(spec, config.n)


def run_trial(config: ExperimentConfig, trial: int) -> TrialResult:
    t_start = time.perf_counter()
    trial_seed, truth, data = generate_trial_data(config, trial)

    t0 = time.perf_counter()
    info: dict = {"mode": config.ordering}
    if config.ordering == "score":
        order, score_info = estimate_order(
            data, config.stein_config(), return_info=True
        )
        info.update(score_info)
    elif config.ordering == "ground-truth":
        order = truth.topological_order()
    else:
        order = read_order(config.order_file)
    order_seconds = time.perf_counter() - t0

    t1 = time.perf_counter()
    est = sartre_prune(data, order, config.sartre_config(derive_seed(trial_seed, 3)))
    prune_seconds = time.perf_counter() - t1

    return TrialResult(
        trial=trial,
        seed=trial_seed,
        metrics=evaluate(truth, est),
        order_seconds=order_seconds,
        prune_seconds=prune_seconds,
        total_seconds=time.perf_counter() - t_start,
        ordering_info=info,
        truth=truth,
        est=est,
        order=order,
    )


def _trial_star(args) -> TrialResult:
    return run_trial(*args)


def _run_all_trials(
    config: ExperimentConfig, workers: int
) -> tuple[list[TrialResult], list[dict]]:
    results: list[TrialResult] = []
    failures: list[dict] = []
    if workers <= 1:
        outcomes = []
        for t in range(config.trials):
            try:
                outcomes.append(run_trial(config, t))
            except SartreError as exc:
                outcomes.append({"trial": t, "error": str(exc)})
    else:
        jobs = [(config, t) for t in range(config.trials)]
        outcomes = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_trial_star, job) for job in jobs]
            for t, fut in enumerate(futures):
                try:
                    outcomes.append(fut.result())
                except SartreError as exc:
                    outcomes.append({"trial": t, "error": str(exc)})
    for item in outcomes:
        if isinstance(item, dict):
            failures.append(item)
        else:
            results.append(item)
    results.sort(key=lambda r: r.trial)
    return results, failures


def _aggregate(results: list[TrialResult]) -> dict:
    agg = {}
    for name in _METRIC_FIELDS:
        vals = np.array([getattr(r.metrics, name) for r in results], dtype=float)
        agg[name] = {
            "mean": float(vals.mean()) if vals.size else None,
            "std": float(vals.std()) if vals.size else None,
        }
    return agg


def _trial_row(r: TrialResult) -> dict:
    return {
        "trial": r.trial,
        "seed": r.seed,
        "metrics": r.metrics.to_dict(),
        "ordering_info": r.ordering_info,
    }


def run_experiment(
    config: ExperimentConfig, out_dir: str | Path, workers: int = 1
) -> dict:
    """Run all trials, write results, return the summary object.

    Files written: results.json (config echo + aggregate; deterministic),
    trials.jsonl (one row per trial; deterministic), timings.json
    (wall-clock; inherently non-deterministic), and per-trial DAG files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results, failures = _run_all_trials(config, workers)

    summary = {
        "config": config.to_dict(),
        "aggregate": _aggregate(results),
        "num_trials": config.trials,
        "num_failures": len(failures),
        "failures": failures,
    }
    (out / "results.json").write_text(canonical_json(summary) + "\n")
    with open(out / "trials.jsonl", "w") as fh:
        for r in results:
            fh.write(canonical_json_line(_trial_row(r)) + "\n")
    timings = {
        "per_trial": [
            {
                "trial": r.trial,
                "order_seconds": r.order_seconds,
                "prune_seconds": r.prune_seconds,
                "total_seconds": r.total_seconds,
            }
            for r in results
        ]
    }
    (out / "timings.json").write_text(canonical_json(timings) + "\n")
    for r in results:
        write_dag(r.truth, out / f"trial_{r.trial:03d}_truth.dag")
        write_dag(r.est, out / f"trial_{r.trial:03d}_est.dag")
        write_order(r.order, out / f"trial_{r.trial:03d}.order")
    return summary


def load_results(out_dir: str | Path) -> dict:
    """Load results.json + trials.jsonl and verify the aggregate matches a
    recomputation from the per-trial rows."""
    out = Path(out_dir)
    summary = json.loads((out / "results.json").read_text())
    rows = [
        json.loads(line)
        for line in (out / "trials.jsonl").read_text().splitlines()
        if line.strip()
    ]
    for name in _METRIC_FIELDS:
        vals = np.array([row["metrics"][name] for row in rows], dtype=float)
        stored = summary["aggregate"][name]
        if vals.size == 0:
            continue
        if not np.isclose(stored["mean"], vals.mean(), atol=1e-12):
            raise SartreError(f"aggregate mean for {name} does not match trials")
        if not np.isclose(stored["std"], vals.std(), atol=1e-12):
            raise SartreError(f"aggregate std for {name} does not match trials")
    summary["trials"] = rows
    return summary


# -- lambda sweep ---------------------------------------------------------------


def _dataset_hash(data: Dataset) -> str:
    buf = io.StringIO()
    buf.write(",".join(f"x{i}" for i in range(1, data.d + 1)))
    for row in data.values:
        buf.write("\n" + ",".join(repr(float(v)) for v in row))
    return sha256_bytes(buf.getvalue().encode())


def _sweep_trial(args) -> list[dict]:
    config, lambdas, trial = args
    trial_seed, truth, data = generate_trial_data(config, trial)
    if config.ordering == "score":
        order = estimate_order(data, config.stein_config())
    elif config.ordering == "ground-truth":
        order = truth.topological_order()
    else:
        order = read_order(config.order_file)
    dhash = _dataset_hash(data)
    rows = []
    for lam in lambdas:
        cfg = config.sartre_config(derive_seed(trial_seed, 3))
        cfg = dataclasses.replace(cfg, lam=float(lam))
        est = sartre_prune(data, order, cfg)
        metrics = evaluate(truth, est)
        for name in (*_METRIC_FIELDS, "num_edges_est"):
            rows.append(
                {
                    "lambda": float(lam),
                    "trial": trial,
                    "dataset_hash": dhash,
                    "metric": name,
                    "value": float(getattr(metrics, name)),
                }
            )
    return rows


def sweep_lambda(
    config: ExperimentConfig,
    lambdas: list[float],
    out_dir: str | Path,
    workers: int = 1,
) -> list[dict]:
    """Rerun the pruning step over a lambda grid with shared per-trial
    datasets and orders; emits long-format and aggregated tidy CSVs."""
    if not lambdas:
        raise ConfigError("lambda list must be non-empty")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(config, list(lambdas), t) for t in range(config.trials)]
    if workers <= 1:
        per_trial = [_sweep_trial(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_trial = list(pool.map(_sweep_trial, jobs))
    rows = [row for chunk in per_trial for row in chunk]

    with open(out / "sweep.csv", "w") as fh:
        fh.write("lambda,trial,dataset_hash,metric,value\n")
        for row in rows:
            fh.write(
                f"{row['lambda']!r},{row['trial']},{row['dataset_hash']},"
                f"{row['metric']},{row['value']!r}\n"
            )
    with open(out / "sweep_summary.csv", "w") as fh:
        fh.write("metric,lambda,mean,std\n")
        for name in (*_METRIC_FIELDS, "num_edges_est"):
            for lam in lambdas:
                vals = np.array(
                    [
                        r["value"]
                        for r in rows
                        if r["metric"] == name and r["lambda"] == float(lam)
                    ]
                )
                fh.write(f"{name},{lam!r},{vals.mean()!r},{vals.std()!r}\n")
    (out / "sweep_config.json").write_text(
        canonical_json({"config": config.to_dict(), "lambdas": list(lambdas)}) + "\n"
    )
    return rows


# -- one-shot generation ---------------------------------------------------------


def generate_files(config: ExperimentConfig, out_dir: str | Path) -> dict:
    """Materialize trial 0's dataset, truth DAG, and truth order as files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _, truth, data = generate_trial_data(config, 0)
    write_dataset(data, out / "dataset.csv")
    write_dag(truth, out / "truth.dag")
    write_order(truth.topological_order(), out / "truth.order")
    return {
        "dataset": str(out / "dataset.csv"),
        "truth_dag": str(out / "truth.dag"),
        "truth_order": str(out / "truth.order"),
    }
