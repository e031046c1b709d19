"""Edge pruning via sparse additive regression on tree embeddings.

Given data and a topological order, fit one randomized tree ensemble per
variable, regress each variable on the concatenated embeddings of its
candidate parents with a group lasso (one group per parent), and delete
every edge whose coefficient group is exactly zero. The result is always a
sub-DAG of the fully connected DAG induced by the order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .embed import (
    Interval,
    IntervalSet,
    TreeConfig,
    embed_column,
    fit_randomized_trees,
    interval_set_from_dict,
    interval_set_to_dict,
)
from .errors import DimensionMismatch
from .graph import Dag, TopologicalOrder, full_dag_from_order
from .grouplasso import GroupedCoefficients, GroupedDesign, SolveReport, solve_group_lasso
from .synthgen import Dataset
from .util import derive_seed


@dataclass(frozen=True)
class SartreConfig:
    """Defaults follow the regime that works across the benchmark suite:
    lam=0.1 against the mean-scaled loss, 5 trees of up to 8 leaves."""

    lam: float = 0.1
    tree: TreeConfig = TreeConfig()
    solver_tol: float = 1e-6
    solver_max_iter: int = 10000
    loss_scale: str = "mean"
    seed: int = 0

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")


@dataclass(frozen=True)
class PiecewiseConstant:
    """Right-continuous step function: value levels[k] on
    (boundaries[k], boundaries[k+1]], with separate tail levels below the
    first and above the last boundary."""

    boundaries: tuple[float, ...]
    levels: tuple[float, ...]
    left_tail: float
    right_tail: float

    def __post_init__(self):
        b = self.boundaries
        if any(b[k] >= b[k + 1] for k in range(len(b) - 1)):
            raise ValueError("boundaries must be strictly increasing")
        if len(self.levels) != max(len(b) - 1, 0):
            raise ValueError("need one level per bounded piece")

    def __call__(self, x) -> np.ndarray | float:
        xs = np.asarray(x, dtype=np.float64)
        bounds = np.asarray(self.boundaries)
        table = np.array([self.left_tail, *self.levels, self.right_tail])
        idx = np.searchsorted(bounds, xs, side="left")
        out = table[idx]
        return float(out) if np.isscalar(x) else out


def flatten_shape(
    intervals: tuple[Interval, ...] | list[Interval], coeffs: np.ndarray
) -> PiecewiseConstant:
    """Rewrite sum_k coeffs[k] * 1{x in intervals[k]} over the sorted union
    of finite boundaries; evaluation agrees with the indicator sum at every
    real (coefficients are added in input order, so floats match exactly)."""
    coeffs = np.asarray(coeffs, dtype=np.float64).ravel()
    if len(intervals) != coeffs.size:
        raise DimensionMismatch(
            f"{len(intervals)} intervals vs {coeffs.size} coefficients"
        )
    finite = sorted(
        {b for iv in intervals for b in (iv.lo, iv.hi) if math.isfinite(b)}
    )

    def indicator_sum(x: float) -> float:
        total = 0.0
        for iv, beta in zip(intervals, coeffs):
            if iv.contains(x):
                total += float(beta)
        return total

    if not finite:
        level = indicator_sum(0.0)  # intervals are all (-inf, inf]
        return PiecewiseConstant((), (), level, level)
    # witness values: right endpoint of each bounded piece, and points
    # beyond the first/last boundary for the tails
    levels = tuple(indicator_sum(finite[k + 1]) for k in range(len(finite) - 1))
    left = indicator_sum(finite[0])
    right = indicator_sum(float(np.nextafter(finite[-1], math.inf)))
    return PiecewiseConstant(tuple(finite), levels, left, right)


@dataclass(frozen=True)
class SartreModel:
    """Everything the pruning pass produced for one dataset and order."""

    config: SartreConfig
    order: TopologicalOrder
    interval_sets: dict[int, IntervalSet]
    coefficients: dict[int, GroupedCoefficients]
    reports: dict[int, SolveReport]
    dag: Dag

    def shape_functions(self, target: int) -> dict[int, PiecewiseConstant]:
        """Flattened per-parent shape functions of one target; pruned
        parents export the identically-zero function."""
        coeffs = self.coefficients[target]
        out = {}
        for g, parent in enumerate(coeffs.labels):
            ivs = self.interval_sets[parent].intervals
            out[parent] = flatten_shape(ivs, coeffs.group_coefs(g))
        return out

    def predict(self, target: int, data: Dataset) -> np.ndarray:
        """Additive-model prediction for one target on new data."""
        coeffs = self.coefficients[target]
        blocks = [
            embed_column(data.column(parent), self.interval_sets[parent])
            for parent in coeffs.labels
        ]
        return np.hstack(blocks) @ coeffs.beta + coeffs.intercept


def fit_interval_sets(data: Dataset, cfg: SartreConfig) -> dict[int, IntervalSet]:
    """One ensemble per variable; per-variable seeds derived from cfg.seed."""
    out = {}
    for v in range(1, data.d + 1):
        tree_cfg = replace(cfg.tree, seed=derive_seed(cfg.seed, v))
        out[v] = fit_randomized_trees(data.column(v), tree_cfg, var=v)
    return out


def fit_sartre(data: Dataset, order: TopologicalOrder, cfg: SartreConfig = SartreConfig()) -> SartreModel:
    """Fit embeddings once, then one group lasso per target; an edge
    survives iff its parent's coefficient group is nonzero."""
    if data.d != order.num_vars:
        raise DimensionMismatch(
            f"data has d={data.d} but order has d={order.num_vars}"
        )
    if data.n < 2:
        raise ValueError(f"need n >= 2, got {data.n}")
    rsets = fit_interval_sets(data, cfg)
    embeddings = {v: embed_column(data.column(v), rsets[v]) for v in rsets}
    edges = set(full_dag_from_order(order).edges)
    coefficients: dict[int, GroupedCoefficients] = {}
    reports: dict[int, SolveReport] = {}
    for pos, target in enumerate(order.perm):
        candidates = sorted(order.perm[:pos])
        if not candidates:
            continue
        design = GroupedDesign.from_blocks(
            [(parent, embeddings[parent]) for parent in candidates]
        )
        coeffs, report = solve_group_lasso(
            design,
            data.column(target),
            lam=cfg.lam,
            tol=cfg.solver_tol,
            max_iter=cfg.solver_max_iter,
            loss_scale=cfg.loss_scale,
        )
        coefficients[target] = coeffs
        reports[target] = report
        for g, parent in enumerate(coeffs.labels):
            if not coeffs.group_support(g):
                edges.discard((parent, target))
    dag = Dag(data.d, edges)
    return SartreModel(cfg, order, rsets, coefficients, reports, dag)


def sartre_prune(
    data: Dataset, order: TopologicalOrder, cfg: SartreConfig = SartreConfig()
) -> Dag:
    """The pruned DAG only (see fit_sartre for the full model)."""
    return fit_sartre(data, order, cfg).dag


def shape_function_export(model: SartreModel, target: int) -> dict[int, PiecewiseConstant]:
    """Flattened per-parent shape functions for one fitted target."""
    return model.shape_functions(target)


# -- model dump ----------------------------------------------------------------


def save_model(model: SartreModel, path: str | Path) -> None:
    payload = {
        "config": {
            "lam": model.config.lam,
            "num_trees": model.config.tree.num_trees,
            "max_leaves": model.config.tree.max_leaves,
            "min_samples_leaf": model.config.tree.min_samples_leaf,
            "solver_tol": model.config.solver_tol,
            "solver_max_iter": model.config.solver_max_iter,
            "loss_scale": model.config.loss_scale,
            "seed": model.config.seed,
        },
        "order": list(model.order.perm),
        "interval_sets": [
            interval_set_to_dict(model.interval_sets[v])
            for v in sorted(model.interval_sets)
        ],
        "targets": {
            str(t): {
                "labels": list(c.labels),
                "groups": [list(g) for g in c.groups],
                "beta": [float(b) for b in c.beta],
                "intercept": c.intercept,
            }
            for t, c in sorted(model.coefficients.items())
        },
        "edges": sorted(list(e) for e in model.dag.edges),
        "num_vars": model.dag.num_vars,
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_model(path: str | Path) -> SartreModel:
    payload = json.loads(Path(path).read_text())
    cfgd = payload["config"]
    cfg = SartreConfig(
        lam=cfgd["lam"],
        tree=TreeConfig(
            num_trees=cfgd["num_trees"],
            max_leaves=cfgd["max_leaves"],
            min_samples_leaf=cfgd["min_samples_leaf"],
        ),
        solver_tol=cfgd["solver_tol"],
        solver_max_iter=cfgd["solver_max_iter"],
        loss_scale=cfgd["loss_scale"],
        seed=cfgd["seed"],
    )
    rsets = {}
    for obj in payload["interval_sets"]:
        rset = interval_set_from_dict(obj)
        rsets[rset.var] = rset
    coefficients = {}
    for t, obj in payload["targets"].items():
        coefficients[int(t)] = GroupedCoefficients(
            beta=np.asarray(obj["beta"], dtype=np.float64),
            groups=tuple((int(s), int(l)) for s, l in obj["groups"]),
            labels=tuple(int(v) for v in obj["labels"]),
            intercept=float(obj["intercept"]),
        )
    dag = Dag(payload["num_vars"], [tuple(e) for e in payload["edges"]])
    return SartreModel(
        config=cfg,
        order=TopologicalOrder(tuple(payload["order"])),
        interval_sets=rsets,
        coefficients=coefficients,
        reports={},
        dag=dag,
    )
