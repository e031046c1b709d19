"""Completely randomized single-variable tree ensembles and the binary
interval embedding they induce.

Each tree partitions the real line into half-open intervals (lo, hi]; a
value embeds as the indicator vector of its leaf within each tree, so the
embedding of any real has exactly num_trees ones.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch
from .synthgen import Dataset
from .util import derive_seed

_MAX_SPLIT_DRAWS = 9  # first draw + up to 8 redraws


@dataclass(frozen=True)
class Interval:
    """Half-open interval (lo, hi]; lo=-inf / hi=+inf for the outer leaves."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got ({self.lo}, {self.hi})")

    def contains(self, x: float) -> bool:
        return self.lo < x <= self.hi


@dataclass(frozen=True)
class TreeConfig:
    num_trees: int = 5
    max_leaves: int = 8
    min_samples_leaf: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.num_trees < 1 or self.max_leaves < 1 or self.min_samples_leaf < 1:
            raise ValueError("tree config fields must be positive")


@dataclass(frozen=True)
class IntervalSet:
    """All intervals extracted from one variable's tree ensemble, grouped by
    source tree; within a tree the intervals partition (-inf, +inf]."""

    var: int
    tree_splits: tuple[tuple[float, ...], ...]
    config: TreeConfig

    def __post_init__(self):
        for splits in self.tree_splits:
            if any(splits[k] >= splits[k + 1] for k in range(len(splits) - 1)):
                raise ValueError("split points must be strictly increasing")

    @property
    def tree_sizes(self) -> tuple[int, ...]:
        return tuple(len(s) + 1 for s in self.tree_splits)

    @property
    def total(self) -> int:
        """l_j, the embedding dimension."""
        return sum(self.tree_sizes)

    @property
    def intervals(self) -> tuple[Interval, ...]:
        out = []
        for splits in self.tree_splits:
            bounds = (-math.inf, *splits, math.inf)
            out.extend(Interval(bounds[k], bounds[k + 1]) for k in range(len(bounds) - 1))
        return tuple(out)


def _grow_tree(sorted_vals: np.ndarray, cfg: TreeConfig, rng: np.random.Generator):
    """Grow one tree; returns the ordered interior split points.

    Leaves are [start, stop, dead] ranges into the sorted sample array, kept
    in left-to-right order. The leaf with the most samples is split first
    (leftmost on ties); a split point is drawn uniformly over the leaf's
    value range and must leave min_samples_leaf samples on each side, with
    up to 8 redraws before the leaf is marked dead.
    """
    msl = cfg.min_samples_leaf
    leaves: list[list] = [[0, len(sorted_vals), False]]
    splits: list[float] = []
    while len(leaves) < cfg.max_leaves:
        best, best_count = -1, -1
        for idx, (a, b, dead) in enumerate(leaves):
            if dead or b - a < 2 * msl or not sorted_vals[a] < sorted_vals[b - 1]:
                continue
            if b - a > best_count:
                best, best_count = idx, b - a
        if best < 0:
            break
        a, b, _ = leaves[best]
        lo_val, hi_val = sorted_vals[a], sorted_vals[b - 1]
        for _ in range(_MAX_SPLIT_DRAWS):
            c = float(rng.uniform(lo_val, hi_val))
            pos = a + int(np.searchsorted(sorted_vals[a:b], c, side="right"))
            if pos - a >= msl and b - pos >= msl and c not in splits:
                leaves[best : best + 1] = [[a, pos, False], [pos, b, False]]
                splits.append(c)
                break
        else:
            leaves[best][2] = True
    return sorted(splits)


def fit_randomized_trees(
    column: np.ndarray, cfg: TreeConfig, var: int = 0
) -> IntervalSet:
    """Fit num_trees completely randomized trees on one column and extract
    their leaf intervals (outermost bounds extended to +/- infinity)."""
    vals = np.asarray(column, dtype=np.float64).ravel()
    if vals.size == 0:
        raise ValueError("cannot fit trees on an empty column")
    if not np.isfinite(vals).all():
        raise ValueError("column contains non-finite values")
    sorted_vals = np.sort(vals)
    all_splits = []
    for t in range(cfg.num_trees):
        rng = np.random.default_rng(derive_seed(cfg.seed, t))
        all_splits.append(tuple(_grow_tree(sorted_vals, cfg, rng)))
    return IntervalSet(var=var, tree_splits=tuple(all_splits), config=cfg)


def embed_column(values: np.ndarray, rset: IntervalSet) -> np.ndarray:
    """Binary embedding of a whole column: shape (n, l_j), one 1 per tree."""
    vals = np.asarray(values, dtype=np.float64).ravel()
    out = np.zeros((vals.size, rset.total), dtype=np.float64)
    offset = 0
    rows = np.arange(vals.size)
    for splits, size in zip(rset.tree_splits, rset.tree_sizes):
        idx = np.searchsorted(np.asarray(splits), vals, side="left")
        out[rows, offset + idx] = 1.0
        offset += size
    return out


def embed(x: float, rset: IntervalSet) -> np.ndarray:
    """Embedding vector of a single value."""
    return embed_column(np.array([x]), rset)[0]


def embed_dataset(data: Dataset, rsets: dict[int, IntervalSet]) -> dict[int, np.ndarray]:
    """Embed every variable: var -> (n, l_var) binary matrix."""
    missing = [v for v in range(1, data.d + 1) if v not in rsets]
    if missing:
        raise DimensionMismatch(f"no interval set for variables {missing}")
    return {v: embed_column(data.column(v), rsets[v]) for v in range(1, data.d + 1)}


# -- JSON persistence ----------------------------------------------------------


def _interval_to_json(iv: Interval) -> dict:
    return {
        "lo": None if math.isinf(iv.lo) else iv.lo,
        "hi": None if math.isinf(iv.hi) else iv.hi,
    }


def interval_set_to_dict(rset: IntervalSet) -> dict:
    ivs = rset.intervals
    trees = []
    offset = 0
    for size in rset.tree_sizes:
        trees.append([_interval_to_json(iv) for iv in ivs[offset : offset + size]])
        offset += size
    return {
        "var": rset.var,
        "num_trees": rset.config.num_trees,
        "max_leaves": rset.config.max_leaves,
        "min_samples_leaf": rset.config.min_samples_leaf,
        "seed": rset.config.seed,
        "trees": trees,
    }


def interval_set_from_dict(obj: dict) -> IntervalSet:
    cfg = TreeConfig(
        num_trees=obj["num_trees"],
        max_leaves=obj["max_leaves"],
        min_samples_leaf=obj["min_samples_leaf"],
        seed=obj["seed"],
    )
    tree_splits = []
    for tree in obj["trees"]:
        if tree[0]["lo"] is not None or tree[-1]["hi"] is not None:
            raise ValueError("outer interval bounds must be null (infinite)")
        splits = [iv["hi"] for iv in tree[:-1]]
        inner_los = [iv["lo"] for iv in tree[1:]]
        if splits != inner_los:
            raise ValueError("tree intervals do not partition the line")
        tree_splits.append(tuple(float(s) for s in splits))
    return IntervalSet(var=obj["var"], tree_splits=tuple(tree_splits), config=cfg)


def save_interval_sets(rsets: dict[int, IntervalSet], path: str | Path) -> None:
    payload = [interval_set_to_dict(rsets[v]) for v in sorted(rsets)]
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_interval_sets(path: str | Path) -> dict[int, IntervalSet]:
    payload = json.loads(Path(path).read_text())
    out = {}
    for obj in payload:
        rset = interval_set_from_dict(obj)
        out[rset.var] = rset
    return out
