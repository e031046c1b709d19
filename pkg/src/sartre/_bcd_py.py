"""Pure numpy block-coordinate-descent kernel for the group lasso.

This is the fallback for the compiled kernel in `_bcd_cy`; both implement
the same algorithm and contract. The smooth loss is (c/2)||y - X b||^2, so
c = 1/n gives the mean-scaled objective and c = 2 the plain sum of squares.

Each block visit first applies the subgradient zero-test (producing exact
zeros), then minimizes the block subproblem by iterative shrinkage with a
spectral step bound (FISTA momentum plus a monotone safeguard).
"""

from __future__ import annotations

import math

import numpy as np


def _block_objective(gb: np.ndarray, b: np.ndarray, rho: np.ndarray,
                     lam: float, c: float) -> float:
    return 0.5 * c * float(b @ gb) - c * float(rho @ b) + lam * float(np.linalg.norm(b))


def _shrink(u: np.ndarray, amount: float) -> np.ndarray:
    nu = float(np.linalg.norm(u))
    if nu <= amount:
        return np.zeros_like(u)
    return (1.0 - amount / nu) * u


def _block_min(
    gram: np.ndarray,
    rho: np.ndarray,
    b0: np.ndarray,
    lam: float,
    c: float,
    step: float,
    inner_max: int,
    inner_tol: float,
) -> np.ndarray:
    """Minimize (c/2) b'Gb - c rho'b + lam ||b|| from warm start b0."""
    b = b0.copy()
    gb = gram @ b
    q_b = _block_objective(gb, b, rho, lam, c)
    v = b.copy()
    t = 1.0
    for _ in range(inner_max):
        gv = gram @ v
        bn = _shrink(v - step * c * (gv - rho), step * lam)
        gbn = gram @ bn
        q_n = _block_objective(gbn, bn, rho, lam, c)
        if q_n > q_b:
            # momentum overshot: fall back to a plain shrinkage step, which
            # can never increase the block objective
            bn = _shrink(b - step * c * (gb - rho), step * lam)
            gbn = gram @ bn
            q_n = _block_objective(gbn, bn, rho, lam, c)
            t = 1.0
        nbn = float(np.linalg.norm(bn))
        if nbn > 0.0:
            viol = float(np.linalg.norm(c * (gbn - rho) + (lam / nbn) * bn))
        else:
            viol = max(0.0, c * float(np.linalg.norm(rho)) - lam)
        if viol <= inner_tol:
            return bn
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        v = bn + ((t - 1.0) / t_next) * (bn - b)
        b, gb, q_b, t = bn, gbn, q_n, t_next
    return b


def _max_kkt(x, resid, beta, starts, lens, lam, c) -> float:
    worst = 0.0
    for g in range(len(starts)):
        s, l = starts[g], lens[g]
        grad = -c * (x[:, s : s + l].T @ resid)
        bg = beta[s : s + l]
        nb = float(np.linalg.norm(bg))
        if nb > 0.0:
            viol = float(np.linalg.norm(grad + (lam / nb) * bg))
        else:
            viol = max(0.0, float(np.linalg.norm(grad)) - lam)
        worst = max(worst, viol)
    return worst


def bcd_solve(
    x: np.ndarray,
    y: np.ndarray,
    starts: np.ndarray,
    lens: np.ndarray,
    gram_flat: np.ndarray,
    gram_off: np.ndarray,
    lips: np.ndarray,
    lam: float,
    c: float,
    tol: float,
    max_iter: int,
    inner_max: int,
    inner_tol: float,
    objective_trace: list | None = None,
) -> tuple[np.ndarray, int, bool]:
    """Cyclic BCD over groups; returns (beta, sweeps, converged)."""
    p = x.shape[1]
    ngroups = len(starts)
    grams = [
        gram_flat[gram_off[g] : gram_off[g] + lens[g] * lens[g]].reshape(
            lens[g], lens[g]
        )
        for g in range(ngroups)
    ]
    steps = [1.0 / (c * lips[g]) if lips[g] > 0.0 else 0.0 for g in range(ngroups)]
    beta = np.zeros(p)
    resid = y.copy()
    converged = False
    sweeps = 0
    for sweep in range(1, max_iter + 1):
        sweeps = sweep
        max_delta = 0.0
        for g in range(ngroups):
            s, l = starts[g], lens[g]
            xg = x[:, s : s + l]
            bg = beta[s : s + l]
            rho = xg.T @ resid
            if bg.any():
                rho = rho + grams[g] @ bg
            if c * float(np.linalg.norm(rho)) <= lam:
                bn = np.zeros(l)
            else:
                bn = _block_min(
                    grams[g], rho, bg, lam, c, steps[g], inner_max, inner_tol
                )
            delta = bn - bg
            dn = float(np.linalg.norm(delta))
            if dn > 0.0:
                resid -= xg @ delta
                beta[s : s + l] = bn
            if dn > max_delta:
                max_delta = dn
        if objective_trace is not None:
            pen = sum(
                float(np.linalg.norm(beta[starts[g] : starts[g] + lens[g]]))
                for g in range(ngroups)
            )
            objective_trace.append(0.5 * c * float(resid @ resid) + lam * pen)
        if max_delta <= tol * (1.0 + float(np.linalg.norm(beta))):
            if _max_kkt(x, resid, beta, starts, lens, lam, c) <= tol:
                converged = True
                break
    return beta, sweeps, converged
