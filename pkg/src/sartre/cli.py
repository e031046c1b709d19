"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 data/file error,
4 numerical failure. The default output directory honors SARTRE_OUT_DIR.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .embed import TreeConfig
from .errors import ConfigError, DataFormatError, DimensionMismatch, NumericalError
from .graph import evaluate, read_dag, read_order, write_dag, write_order
from .ordering import SteinConfig, estimate_order
from .prune import SartreConfig, fit_sartre, save_model
from .runner import (
    ExperimentConfig,
    generate_files,
    run_experiment,
    sweep_lambda,
)
from .synthgen import ingest_csv, read_dataset, write_dataset
from .util import canonical_json


def _default_out() -> str:
    return os.environ.get("SARTRE_OUT_DIR", "results")


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file (flags override its keys)")
    p.add_argument("--graph", choices=("er", "sf"))
    p.add_argument("--d", type=int)
    p.add_argument("--avg-edges", type=int, dest="avg_edges")
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--ordering", choices=("score", "ground-truth", "file"))
    p.add_argument("--order-file", dest="order_file")
    p.add_argument("--p-linear", type=float, dest="p_linear")
    p.add_argument("--lambda", type=float, dest="lam")
    p.add_argument("--num-trees", type=int, dest="num_trees")
    p.add_argument("--max-leaves", type=int, dest="max_leaves")
    p.add_argument("--min-samples-leaf", type=int, dest="min_samples_leaf")
    p.add_argument("--loss-scale", choices=("mean", "sum"), dest="loss_scale")


_EXPERIMENT_KEYS = (
    "graph", "d", "avg_edges", "m", "n", "trials", "seed", "ordering",
    "order_file", "p_linear", "lam", "num_trees", "max_leaves",
    "min_samples_leaf", "loss_scale",
)


def _experiment_config(args) -> ExperimentConfig:
    merged: dict = {}
    if args.config:
        path = Path(args.config)
        try:
            merged.update(json.loads(path.read_text()))
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    for key in _EXPERIMENT_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return ExperimentConfig.from_dict(merged)


def _cmd_gen(args) -> int:
    config = _experiment_config(args)
    paths = generate_files(config, args.out)
    print(canonical_json(paths))
    return 0


def _cmd_order(args) -> int:
    data = read_dataset(args.data)
    bandwidth: str | float = args.bandwidth
    if bandwidth != "median":
        try:
            bandwidth = float(bandwidth)
        except ValueError as exc:
            raise ConfigError(
                f"--bandwidth must be 'median' or a number, got {bandwidth!r}"
            ) from exc
    cfg = SteinConfig(bandwidth=bandwidth, ridge=args.ridge, max_rows=args.max_rows)
    order, info = estimate_order(data, cfg, return_info=True)
    write_order(order, args.out)
    print(canonical_json({"order_file": args.out, **info}))
    return 0


def _cmd_prune(args) -> int:
    data = read_dataset(args.data)
    order = read_order(args.order)
    cfg = SartreConfig(
        lam=args.lam,
        tree=TreeConfig(
            num_trees=args.num_trees,
            max_leaves=args.max_leaves,
            min_samples_leaf=args.min_samples_leaf,
        ),
        solver_tol=args.tol,
        solver_max_iter=args.max_iter,
        loss_scale=args.loss_scale,
        seed=args.seed,
    )
    model = fit_sartre(data, order, cfg)
    write_dag(model.dag, args.out)
    if args.model_dump:
        save_model(model, args.model_dump)
    print(canonical_json({"est_dag": args.out, "num_edges": len(model.dag.edges)}))
    return 0


def _cmd_run(args) -> int:
    config = _experiment_config(args)
    summary = run_experiment(config, args.out, workers=args.workers)
    print(canonical_json(summary["aggregate"]))
    return 0


def _cmd_sweep(args) -> int:
    config = _experiment_config(args)
    try:
        lambdas = [float(tok) for tok in args.lambdas.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --lambdas list: {args.lambdas!r}") from exc
    sweep_lambda(config, lambdas, args.out, workers=args.workers)
    print(canonical_json({"out_dir": args.out, "lambdas": lambdas}))
    return 0


def _cmd_eval(args) -> int:
    truth = read_dag(args.truth)
    est = read_dag(args.est)
    print(canonical_json(evaluate(truth, est).to_dict()))
    return 0


def _cmd_ingest(args) -> int:
    data = ingest_csv(args.input, bootstrap=args.bootstrap, seed=args.seed)
    write_dataset(data, args.out)
    print(canonical_json({"out": args.out, "n": data.n, "d": data.d}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sartre",
        description="Order-based causal structure learning with group lasso pruning",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic dataset + ground truth")
    _add_experiment_flags(p)
    p.add_argument("--out", default=_default_out())
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("order", help="estimate a topological order from a CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--bandwidth", default="median")
    p.add_argument("--ridge", type=float, default=1e-3)
    p.add_argument("--max-rows", type=int, default=3000, dest="max_rows")
    p.set_defaults(func=_cmd_order)

    p = sub.add_parser("prune", help="prune the full order-DAG on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--order", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lambda", type=float, default=0.1, dest="lam")
    p.add_argument("--num-trees", type=int, default=5, dest="num_trees")
    p.add_argument("--max-leaves", type=int, default=8, dest="max_leaves")
    p.add_argument("--min-samples-leaf", type=int, default=2, dest="min_samples_leaf")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=10000, dest="max_iter")
    p.add_argument("--loss-scale", choices=("mean", "sum"), default="mean", dest="loss_scale")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model-dump", dest="model_dump")
    p.set_defaults(func=_cmd_prune)

    p = sub.add_parser("run", help="full seeded experiment with metrics")
    _add_experiment_flags(p)
    p.add_argument("--out", default=_default_out())
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep-lambda", help="rerun pruning over a lambda grid")
    _add_experiment_flags(p)
    p.add_argument("--lambdas", default="0.1,0.15,0.2,0.25,0.3")
    p.add_argument("--out", default=_default_out())
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("eval", help="metrics between a truth and estimate DAG file")
    p.add_argument("--truth", required=True)
    p.add_argument("--est", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("ingest", help="load an external numeric CSV (optionally bootstrap)")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--bootstrap", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_ingest)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DataFormatError, DimensionMismatch) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
