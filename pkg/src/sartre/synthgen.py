"""Sampling observational data from additive noise models over a DAG.

Each variable is its parents' link function plus independent Gaussian noise.
Nonlinear links are joint draws from a zero-mean Gaussian process with an
RBF kernel evaluated at the realized parent rows; linear links use random
weights bounded away from zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import cholesky
from scipy.spatial.distance import cdist

from .errors import DataFormatError, DimensionMismatch, NumericalError
from .graph import Dag
from .util import derive_seed

GP_LINK = "gp"
LINEAR_LINK = "linear"

# escalation schedule for the kernel-diagonal jitter
_JITTERS = (1e-8, 1e-6, 1e-4)

# default range for per-node noise standard deviations
_NOISE_RANGE = (0.4, 0.8)

# linear link weights are drawn from +/- this magnitude range
_WEIGHT_RANGE = (0.5, 2.0)


@dataclass(frozen=True)
class Dataset:
    """n x d observation matrix; column i holds samples of variable i."""

    values: np.ndarray

    def __init__(self, values):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"values must be 2-D, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("dataset contains non-finite entries")
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def column(self, var: int) -> np.ndarray:
        if not (1 <= var <= self.d):
            raise ValueError(f"variable {var} outside [1,{self.d}]")
        return self.values[:, var - 1]


@dataclass(frozen=True)
class AnmSpec:
    """Everything needed to sample one additive noise model."""

    dag: Dag
    link_kinds: tuple[str, ...]
    noise_std: tuple[float, ...]
    gp_bandwidth: float
    seed: int

    def __post_init__(self):
        d = self.dag.num_vars
        if len(self.link_kinds) != d or len(self.noise_std) != d:
            raise ValueError("per-node fields must have length d")
        for k in self.link_kinds:
            if k not in (GP_LINK, LINEAR_LINK):
                raise ValueError(f"unknown link kind {k!r}")
        if any(s <= 0 for s in self.noise_std):
            raise ValueError("noise_std entries must be positive")
        if self.gp_bandwidth <= 0:
            raise ValueError("gp_bandwidth must be positive")


def make_anm_spec(
    dag: Dag,
    seed: int,
    p_linear: float = 0.0,
    gp_bandwidth: float = 1.0,
    noise_range: tuple[float, float] = _NOISE_RANGE,
) -> AnmSpec:
    """Draw per-node noise scales and link kinds; roots keep the GP tag but
    never use it."""
    if not (0.0 <= p_linear <= 1.0):
        raise ValueError(f"p_linear must be in [0,1], got {p_linear}")
    rng = np.random.default_rng(derive_seed(seed, 0))
    d = dag.num_vars
    noise = tuple(float(s) for s in rng.uniform(*noise_range, size=d))
    kinds = []
    for i in range(1, d + 1):
        if dag.parents(i):
            kinds.append(LINEAR_LINK if rng.random() < p_linear else GP_LINK)
        else:
            kinds.append(GP_LINK)
    return AnmSpec(dag, tuple(kinds), noise, gp_bandwidth, seed)


def make_mixed_spec(dag: Dag, p_linear: float, seed: int) -> AnmSpec:
    """Mixed linear/nonlinear model: each non-root is linear with probability
    p_linear, else a GP draw."""
    return make_anm_spec(dag, seed, p_linear=p_linear)


def draw_gp_values(
    points: np.ndarray, bandwidth: float, rng: np.random.Generator
) -> np.ndarray:
    """One joint draw of zero-mean GP function values at the given rows,
    kernel exp(-||p - p'||^2 / (2 bandwidth^2)), via jittered Cholesky."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    k = np.exp(-cdist(pts, pts, "sqeuclidean") / (2.0 * bandwidth**2))
    z = rng.standard_normal(pts.shape[0])
    for jitter in _JITTERS:
        try:
            lower = cholesky(k + jitter * np.eye(pts.shape[0]), lower=True)
        except np.linalg.LinAlgError:
            continue
        return lower @ z
    raise NumericalError(
        f"kernel factorization failed at every jitter in {_JITTERS}"
    )


def sample_anm(spec: AnmSpec, n: int) -> Dataset:
    """Sample n rows, generating variables in topological order.

    Per-node randomness comes from independent derived streams, so editing
    one node's mechanism never perturbs variables that are not downstream
    of it.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    d = spec.dag.num_vars
    values = np.empty((n, d), dtype=np.float64)
    for i in spec.dag.topological_order().perm:
        rng = np.random.default_rng(derive_seed(spec.seed, i))
        parents = sorted(spec.dag.parents(i))
        sigma = spec.noise_std[i - 1]
        if not parents:
            values[:, i - 1] = sigma * rng.standard_normal(n)
            continue
        pmat = values[:, [p - 1 for p in parents]]
        if spec.link_kinds[i - 1] == LINEAR_LINK:
            mags = rng.uniform(*_WEIGHT_RANGE, size=len(parents))
            signs = rng.integers(0, 2, size=len(parents)) * 2 - 1
            f = pmat @ (signs * mags)
        else:
            f = draw_gp_values(pmat, spec.gp_bandwidth, rng)
        values[:, i - 1] = f + sigma * rng.standard_normal(n)
    return Dataset(values)


# -- CSV persistence ----------------------------------------------------------


def write_dataset(ds: Dataset, path: str | Path) -> None:
    """Header `x1,...,xd`, then one row per observation. Floats are written
    with shortest round-trip repr, so reading back is bit-exact."""
    header = ",".join(f"x{i}" for i in range(1, ds.d + 1))
    lines = [header]
    for row in ds.values:
        lines.append(",".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_numeric_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    try:
        raw = path.read_text()
    except OSError as exc:
        raise DataFormatError(f"{path}: cannot read: {exc}") from exc
    lines = [ln for ln in raw.splitlines()]
    if not lines or not lines[0].strip():
        raise DataFormatError(f"{path}: empty file")
    header = [h.strip() for h in lines[0].split(",")]
    width = len(header)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != width:
            raise DataFormatError(
                f"{path}:{lineno}: expected {width} columns, got {len(cells)}"
            )
        row = []
        for col, cell in enumerate(cells, start=1):
            try:
                row.append(float(cell))
            except ValueError as exc:
                raise DataFormatError(
                    f"{path}:{lineno}: column {col}: non-numeric cell {cell.strip()!r}"
                ) from exc
        rows.append(row)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return header, np.asarray(rows, dtype=np.float64)


def read_dataset(path: str | Path) -> Dataset:
    """Read a CSV written by `write_dataset` (canonical x1..xd header)."""
    header, values = _parse_numeric_csv(path)
    expected = [f"x{i}" for i in range(1, len(header) + 1)]
    if header != expected:
        raise DataFormatError(
            f"{path}: expected header {','.join(expected)}, got {','.join(header)}"
        )
    return Dataset(values)


def ingest_csv(
    path: str | Path, bootstrap: int | None = None, seed: int = 0
) -> Dataset:
    """Load any numeric CSV with a header row; optionally resample rows with
    replacement to `bootstrap` rows."""
    _, values = _parse_numeric_csv(path)
    if bootstrap is not None:
        if bootstrap < 1:
            raise ValueError(f"bootstrap size must be >= 1, got {bootstrap}")
        rng = np.random.default_rng(seed)
        idx = rng.integers(0, values.shape[0], size=bootstrap)
        values = values[idx]
    return Dataset(values)
