"""Group lasso regression over grouped designs.

Objective (loss_scale="mean", the default):

    (1/(2n)) * ||y_c - X b||^2 + lam * sum_g ||b_g||_2

where y_c is the mean-centered target; the mean is returned as the
intercept. loss_scale="sum" swaps the smooth part for the plain
||y_c - X b||^2, in which case an equivalent lam must be scaled by 2n.
Design columns are never centered or rescaled, preserving indicator
semantics of binary designs.

Zero groups come out of the solver as exact zeros (block soft-threshold),
and every solve carries a KKT certificate:

    zero group:   ||grad_g||               <= lam + tol
    active group: ||grad_g + lam b_g/||b_g|| || <= tol

Two interchangeable kernels exist: a compiled one (`sartre._bcd_cy`, built
from Cython) and a numpy fallback (`sartre._bcd_py`). Selection happens at
import; set SARTRE_BACKEND=python to force the fallback.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from . import _bcd_py

try:
    from . import _bcd_cy
except ImportError:  # extension not built; numpy fallback only
    _bcd_cy = None

_LOSS_SCALES = ("mean", "sum")
_INNER_MAX = 2000


def available_backends() -> tuple[str, ...]:
    return ("cython", "python") if _bcd_cy is not None else ("python",)


def default_backend() -> str:
    forced = os.environ.get("SARTRE_BACKEND")
    if forced:
        if forced not in available_backends():
            raise ValueError(
                f"SARTRE_BACKEND={forced!r} unavailable; "
                f"choices: {available_backends()}"
            )
        return forced
    return available_backends()[0]


def _kernel(backend: str | None):
    name = backend or default_backend()
    if name == "cython":
        if _bcd_cy is None:
            raise ValueError("compiled kernel not built; use backend='python'")
        return name, _bcd_cy
    if name == "python":
        return name, _bcd_py
    raise ValueError(f"unknown backend {name!r}")


def _loss_factor(loss_scale: str, n: int) -> float:
    """c such that the smooth part is (c/2)||y_c - X b||^2."""
    if loss_scale not in _LOSS_SCALES:
        raise ValueError(f"loss_scale must be one of {_LOSS_SCALES}")
    return 1.0 / n if loss_scale == "mean" else 2.0


@dataclass(frozen=True)
class GroupedDesign:
    """n x p design whose columns split into contiguous labeled groups."""

    matrix: np.ndarray
    groups: tuple[tuple[int, int], ...]  # (start, length) per group
    labels: tuple[int, ...]

    def __init__(self, matrix, groups, labels):
        mat = np.asarray(matrix, dtype=np.float64)
        if mat.ndim != 2:
            raise ValueError(f"design must be 2-D, got shape {mat.shape}")
        groups = tuple((int(s), int(l)) for s, l in groups)
        labels = tuple(int(v) for v in labels)
        if len(groups) != len(labels):
            raise ValueError("one label per group required")
        cursor = 0
        for s, l in groups:
            if s != cursor or l < 1:
                raise ValueError("groups must be contiguous, disjoint, nonempty")
            cursor += l
        if cursor != mat.shape[1]:
            raise ValueError(
                f"groups cover {cursor} columns but design has {mat.shape[1]}"
            )
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_blocks(cls, blocks: list[tuple[int, np.ndarray]]) -> "GroupedDesign":
        """Concatenate (label, matrix) blocks column-wise."""
        groups = []
        cursor = 0
        for _, mat in blocks:
            groups.append((cursor, mat.shape[1]))
            cursor += mat.shape[1]
        matrix = np.hstack([mat for _, mat in blocks])
        return cls(matrix, groups, [label for label, _ in blocks])

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def p(self) -> int:
        return self.matrix.shape[1]

    def block(self, g: int) -> np.ndarray:
        s, l = self.groups[g]
        return self.matrix[:, s : s + l]


@dataclass(frozen=True)
class GroupedCoefficients:
    beta: np.ndarray
    groups: tuple[tuple[int, int], ...]
    labels: tuple[int, ...]
    intercept: float

    def group_coefs(self, g: int) -> np.ndarray:
        s, l = self.groups[g]
        return self.beta[s : s + l]

    def group_support(self, g: int) -> bool:
        """True iff some coefficient in group g is nonzero (exact test)."""
        return bool(self.group_coefs(g).any())

    def active_labels(self) -> tuple[int, ...]:
        return tuple(
            lab for g, lab in enumerate(self.labels) if self.group_support(g)
        )

    def predict(self, matrix: np.ndarray) -> np.ndarray:
        return matrix @ self.beta + self.intercept


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    objective: float
    max_kkt_violation: float
    converged: bool
    backend: str


def _check_target(design: GroupedDesign, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != design.n:
        raise DimensionMismatch(
            f"design has {design.n} rows but target has {y.shape[0]}"
        )
    return y


def objective_value(
    design: GroupedDesign,
    y: np.ndarray,
    coeffs: GroupedCoefficients,
    lam: float,
    loss_scale: str = "mean",
) -> float:
    y = _check_target(design, y)
    c = _loss_factor(loss_scale, design.n)
    r = (y - y.mean()) - design.matrix @ coeffs.beta
    pen = sum(
        float(np.linalg.norm(coeffs.group_coefs(g)))
        for g in range(len(design.groups))
    )
    return 0.5 * c * float(r @ r) + lam * pen


def kkt_violation(
    design: GroupedDesign,
    y: np.ndarray,
    coeffs: GroupedCoefficients,
    lam: float,
    loss_scale: str = "mean",
) -> float:
    """Max group-wise violation of the stationarity conditions, computed
    from scratch (independent of any solver internals)."""
    y = _check_target(design, y)
    c = _loss_factor(loss_scale, design.n)
    resid = (y - y.mean()) - design.matrix @ coeffs.beta
    worst = 0.0
    for g in range(len(design.groups)):
        grad = -c * (design.block(g).T @ resid)
        bg = coeffs.group_coefs(g)
        nb = float(np.linalg.norm(bg))
        if nb > 0.0:
            viol = float(np.linalg.norm(grad + (lam / nb) * bg))
        else:
            viol = max(0.0, float(np.linalg.norm(grad)) - lam)
        worst = max(worst, viol)
    return worst


def lambda_max(design: GroupedDesign, y: np.ndarray, loss_scale: str = "mean") -> float:
    """Smallest lam for which the all-zero solution is optimal."""
    y = _check_target(design, y)
    c = _loss_factor(loss_scale, design.n)
    yc = y - y.mean()
    return max(
        c * float(np.linalg.norm(design.block(g).T @ yc))
        for g in range(len(design.groups))
    )


def solve_group_lasso(
    design: GroupedDesign,
    y: np.ndarray,
    lam: float,
    tol: float = 1e-6,
    max_iter: int = 10000,
    loss_scale: str = "mean",
    backend: str | None = None,
    check_descent: bool = False,
) -> tuple[GroupedCoefficients, SolveReport]:
    """Block-coordinate descent with per-group soft-thresholding.

    The intercept is the target mean (the design is left untouched). Returns
    the coefficients and a report whose KKT violation is recomputed from
    scratch, so `converged` can be trusted independently of the kernel.
    """
    y = _check_target(design, y)
    if lam < 0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    c = _loss_factor(loss_scale, design.n)

    intercept = float(y.mean())
    yc = y - intercept
    xf = np.asfortranarray(design.matrix)
    starts = np.array([s for s, _ in design.groups], dtype=np.intp)
    lens = np.array([l for _, l in design.groups], dtype=np.intp)
    grams = [design.block(g).T @ design.block(g) for g in range(len(design.groups))]
    gram_flat = np.concatenate([gm.ravel() for gm in grams])
    sizes = [gm.size for gm in grams]
    gram_off = np.cumsum([0, *sizes[:-1]], dtype=np.intp)
    lips = np.array(
        [max(float(np.linalg.eigvalsh(gm)[-1]), 0.0) for gm in grams]
    )
    inner_tol = 0.1 * tol

    name, kernel = _kernel(backend)
    trace: list[float] | None = None
    if check_descent:
        name, kernel = "python", _bcd_py
        trace = []
        beta, sweeps, ok = kernel.bcd_solve(
            xf, yc, starts, lens, gram_flat, gram_off, lips,
            float(lam), c, float(tol), int(max_iter), _INNER_MAX, inner_tol,
            objective_trace=trace,
        )
        for prev, cur in zip(trace, trace[1:]):
            if cur > prev + 1e-9 * (1.0 + abs(prev)):
                raise AssertionError(
                    f"objective increased across sweeps: {prev} -> {cur}"
                )
    else:
        beta, sweeps, ok = kernel.bcd_solve(
            xf, yc, starts, lens, gram_flat, gram_off, lips,
            float(lam), c, float(tol), int(max_iter), _INNER_MAX, inner_tol,
        )

    coeffs = GroupedCoefficients(
        beta=beta, groups=design.groups, labels=design.labels, intercept=intercept
    )
    max_kkt = kkt_violation(design, y, coeffs, lam, loss_scale)
    report = SolveReport(
        iterations=int(sweeps),
        objective=objective_value(design, y, coeffs, lam, loss_scale),
        max_kkt_violation=max_kkt,
        converged=bool(ok) and max_kkt <= tol,
        backend=name,
    )
    return coeffs, report
