"""Topological order estimation from data via score matching.

A leaf variable minimizes the variance of the diagonal of the score
Jacobian, estimated with Stein identities under a Gaussian kernel; removing
the detected leaf and repeating yields a full order, roots first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.spatial.distance import pdist, squareform

from .errors import NumericalError
from .graph import TopologicalOrder
from .synthgen import Dataset

# rows used for the seeded subsample when n exceeds SteinConfig.max_rows
_SUBSAMPLE_SEED = 0x5AB5


@dataclass(frozen=True)
class SteinConfig:
    """Kernel and regularization knobs for the Stein estimators.

    bandwidth is either the string "median" (median heuristic over pairwise
    distances of the current submatrix) or a fixed positive float. Rows are
    subsampled to max_rows before any kernel computation to bound the cubic
    solve cost.
    """

    bandwidth: str | float = "median"
    ridge: float = 1e-3
    recompute_each_round: bool = True
    max_rows: int = 3000

    def __post_init__(self):
        if isinstance(self.bandwidth, str):
            if self.bandwidth != "median":
                raise ValueError(f"unknown bandwidth rule {self.bandwidth!r}")
        elif self.bandwidth <= 0:
            raise ValueError("fixed bandwidth must be positive")
        if self.ridge <= 0:
            raise ValueError("ridge must be positive")
        if self.max_rows < 2:
            raise ValueError("max_rows must be >= 2")


def _bandwidth(x: np.ndarray, cfg: SteinConfig) -> float:
    if isinstance(cfg.bandwidth, (int, float)):
        return float(cfg.bandwidth)
    dists = pdist(x)
    med = float(np.median(dists)) if dists.size else 0.0
    return med if med > 0 else 1.0


def _validate(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected n x d matrix, got shape {x.shape}")
    n, d = x.shape
    if n < 2:
        raise ValueError(f"need at least 2 rows, got {n}")
    if n < d + 1:
        raise ValueError(f"need n >= d + 1, got n={n}, d={d}")
    if not np.isfinite(x).all():
        raise ValueError("data contains non-finite entries")
    return x


def _kernel_pieces(x: np.ndarray, cfg: SteinConfig):
    """Gaussian kernel matrix and the factorization of (K + ridge I)."""
    h = _bandwidth(x, cfg)
    sq = squareform(pdist(x, "sqeuclidean")) if x.shape[0] > 1 else np.zeros((1, 1))
    k = np.exp(-sq / (2.0 * h * h))
    try:
        factor = cho_factor(k + cfg.ridge * np.eye(x.shape[0]))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"regularized kernel not factorizable: {exc}") from exc
    return k, factor, h


def _score_and_diag(x: np.ndarray, cfg: SteinConfig):
    """First-order score estimate G and diagonal Jacobian estimate H.

    With K the Gaussian kernel over rows, the Stein identity
    E[s(x) k(x, x') + grad_x k(x, x')] = 0 solved in ridge-regularized form
    gives
        G = -(K + ridge I)^-1 @ dK,
        dK[m, i] = sum_m' dk(x_m', x_m)/dx_m'i = (x_mi K1_m - (KX)_mi) / h^2
    (derivative taken in the summed argument). The diagonal Jacobian is the
    second-order analogue:
        H[:, i] = -G[:, i]^2 + (K + ridge I)^-1 @ d2K[:, i].
    """
    k, factor, h = _kernel_pieces(x, cfg)
    ksum = k.sum(axis=1)
    kx = k @ x
    dk = (x * ksum[:, None] - kx) / (h * h)
    g = -cho_solve(factor, dk)
    # sum_m' k * ((x_mi - x_m'i)^2 / h^4 - 1 / h^2), vectorized per column
    x2 = x * x
    quad = x2 * ksum[:, None] - 2.0 * x * kx + k @ x2
    d2k = quad / h**4 - ksum[:, None] / (h * h)
    hdiag = -g * g + cho_solve(factor, d2k)
    return g, hdiag


def _subsample_rows(x: np.ndarray, cfg: SteinConfig) -> tuple[np.ndarray, bool]:
    n = x.shape[0]
    if n <= cfg.max_rows:
        return x, False
    rng = np.random.default_rng(_SUBSAMPLE_SEED)
    rows = np.sort(rng.choice(n, size=cfg.max_rows, replace=False))
    return x[rows], True


def stein_score(data: Dataset, cfg: SteinConfig = SteinConfig()) -> np.ndarray:
    """n x d estimate of the score function at every sample row."""
    x = _validate(data.values)
    g, _ = _score_and_diag(x, cfg)
    return g


def score_jacobian_diag(data: Dataset, cfg: SteinConfig = SteinConfig()) -> np.ndarray:
    """n x d second-order estimate of d s_i(x) / d x_i at every sample."""
    x = _validate(data.values)
    _, hdiag = _score_and_diag(x, cfg)
    return hdiag


def leaf_statistics(data: Dataset, cfg: SteinConfig = SteinConfig()) -> np.ndarray:
    """Per-variable variance of the diagonal score-Jacobian estimate; the
    argmin marks a leaf."""
    x = _validate(data.values)
    x, _ = _subsample_rows(x, cfg)
    _, hdiag = _score_and_diag(x, cfg)
    return hdiag.var(axis=0)


def estimate_order(
    data: Dataset, cfg: SteinConfig = SteinConfig(), return_info: bool = False
):
    """Iterative leaf removal: compute leaf statistics on the remaining
    columns, peel off the argmin (smallest index on ties), repeat. Returns
    the order roots-first; with return_info=True also a small metadata dict.
    """
    x = _validate(data.values)
    x, subsampled = _subsample_rows(x, cfg)
    d = x.shape[1]
    if not cfg.recompute_each_round:
        # one statistics pass; peel by ascending statistic, smallest index
        # breaking ties, leaves removed first
        stats = leaf_statistics(Dataset(x), cfg) if d > 1 else np.zeros(1)
        removal = sorted(range(1, d + 1), key=lambda v: (stats[v - 1], v))
        order = TopologicalOrder(tuple(reversed(removal)))
        if return_info:
            return order, {"subsampled": subsampled, "rows_used": x.shape[0]}
        return order
    remaining = list(range(1, d + 1))
    leaves_last: list[int] = []
    while len(remaining) > 1:
        cols = [v - 1 for v in remaining]
        stats = leaf_statistics(Dataset(x[:, cols]), cfg)
        pick = remaining[int(np.argmin(stats))]
        leaves_last.append(pick)
        remaining.remove(pick)
    leaves_last.append(remaining[0])
    order = TopologicalOrder(tuple(reversed(leaves_last)))
    if return_info:
        return order, {"subsampled": subsampled, "rows_used": x.shape[0]}
    return order
