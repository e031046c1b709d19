# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled block-coordinate-descent kernel for the group lasso.

Same algorithm and contract as the numpy fallback in `_bcd_py`: cyclic BCD,
subgradient zero-test per block, then iterative shrinkage with a spectral
step bound (FISTA momentum with a monotone safeguard).
"""

from libc.math cimport sqrt

from scipy.linalg.cython_blas cimport dgemv

import numpy as np

cdef char TRANS_T = b'T'
cdef char TRANS_N = b'N'


cdef double _norm(double[::1] v, Py_ssize_t l) noexcept nogil:
    cdef double s = 0.0
    cdef Py_ssize_t k
    for k in range(l):
        s += v[k] * v[k]
    return sqrt(s)


cdef void _xt_vec(double[::1, :] x, Py_ssize_t s, Py_ssize_t n, Py_ssize_t l,
                  double[::1] vec, double[::1] out) noexcept nogil:
    """out[:l] = X[:, s:s+l]' vec via BLAS on the Fortran-ordered design."""
    cdef int mm = <int> n, nn = <int> l, lda = <int> n, inc = 1
    cdef double one = 1.0, zero = 0.0
    dgemv(&TRANS_T, &mm, &nn, &one, &x[0, s], &lda, &vec[0], &inc,
          &zero, &out[0], &inc)


cdef void _resid_update(double[::1, :] x, Py_ssize_t s, Py_ssize_t n,
                        Py_ssize_t l, double[::1] delta,
                        double[::1] resid) noexcept nogil:
    """resid -= X[:, s:s+l] @ delta[:l] via BLAS."""
    cdef int mm = <int> n, nn = <int> l, lda = <int> n, inc = 1
    cdef double minus = -1.0, one = 1.0
    dgemv(&TRANS_N, &mm, &nn, &minus, &x[0, s], &lda, &delta[0], &inc,
          &one, &resid[0], &inc)


cdef void _gram_matvec(double[::1] gram, Py_ssize_t off, double[::1] b,
                       double[::1] out, Py_ssize_t l) noexcept nogil:
    cdef Py_ssize_t i, k
    cdef double acc
    for i in range(l):
        acc = 0.0
        for k in range(l):
            acc += gram[off + i * l + k] * b[k]
        out[i] = acc


cdef double _block_objective(double[::1] gb, double[::1] b, double[::1] rho,
                             double lam, double c, Py_ssize_t l) noexcept nogil:
    cdef double quad = 0.0, lin = 0.0
    cdef Py_ssize_t k
    for k in range(l):
        quad += b[k] * gb[k]
        lin += rho[k] * b[k]
    return 0.5 * c * quad - c * lin + lam * _norm(b, l)


cdef void _shrink(double[::1] u, double amount, double[::1] out,
                  Py_ssize_t l) noexcept nogil:
    cdef double nu = _norm(u, l)
    cdef double scale
    cdef Py_ssize_t k
    if nu <= amount:
        for k in range(l):
            out[k] = 0.0
    else:
        scale = 1.0 - amount / nu
        for k in range(l):
            out[k] = scale * u[k]


cdef void _block_min(double[::1] gram, Py_ssize_t off, double[::1] rho,
                     double[::1] b, double lam, double c, double step,
                     Py_ssize_t inner_max, double inner_tol, Py_ssize_t l,
                     double[::1] gb, double[::1] v, double[::1] u,
                     double[::1] bn, double[::1] gbn) noexcept nogil:
    """Minimize the block subproblem in place (result left in b)."""
    cdef double t = 1.0, t_next, q_b, q_n, nbn, viol, acc
    cdef Py_ssize_t k, it
    _gram_matvec(gram, off, b, gb, l)
    q_b = _block_objective(gb, b, rho, lam, c, l)
    for k in range(l):
        v[k] = b[k]
    for it in range(inner_max):
        _gram_matvec(gram, off, v, gbn, l)  # gbn doubles as scratch for G v
        for k in range(l):
            u[k] = v[k] - step * c * (gbn[k] - rho[k])
        _shrink(u, step * lam, bn, l)
        _gram_matvec(gram, off, bn, gbn, l)
        q_n = _block_objective(gbn, bn, rho, lam, c, l)
        if q_n > q_b:
            # momentum overshot: plain shrinkage step from b never increases
            for k in range(l):
                u[k] = b[k] - step * c * (gb[k] - rho[k])
            _shrink(u, step * lam, bn, l)
            _gram_matvec(gram, off, bn, gbn, l)
            q_n = _block_objective(gbn, bn, rho, lam, c, l)
            t = 1.0
        nbn = _norm(bn, l)
        if nbn > 0.0:
            acc = 0.0
            for k in range(l):
                viol = c * (gbn[k] - rho[k]) + (lam / nbn) * bn[k]
                acc += viol * viol
            viol = sqrt(acc)
        else:
            viol = c * _norm(rho, l) - lam
            if viol < 0.0:
                viol = 0.0
        if viol <= inner_tol:
            for k in range(l):
                b[k] = bn[k]
            return
        t_next = 0.5 * (1.0 + sqrt(1.0 + 4.0 * t * t))
        for k in range(l):
            v[k] = bn[k] + ((t - 1.0) / t_next) * (bn[k] - b[k])
            b[k] = bn[k]
            gb[k] = gbn[k]
        q_b = q_n
        t = t_next


cdef double _max_kkt(double[::1, :] x, double[::1] resid, double[::1] beta,
                     Py_ssize_t[::1] starts, Py_ssize_t[::1] lens,
                     double lam, double c, Py_ssize_t n,
                     double[::1] grad) noexcept nogil:
    cdef double worst = 0.0, nb, acc, term
    cdef Py_ssize_t g, s, l, k, m
    for g in range(starts.shape[0]):
        s = starts[g]
        l = lens[g]
        _xt_vec(x, s, n, l, resid, grad)
        for k in range(l):
            grad[k] = -c * grad[k]
        nb = 0.0
        for k in range(l):
            nb += beta[s + k] * beta[s + k]
        nb = sqrt(nb)
        acc = 0.0
        if nb > 0.0:
            for k in range(l):
                term = grad[k] + (lam / nb) * beta[s + k]
                acc += term * term
            acc = sqrt(acc)
        else:
            for k in range(l):
                acc += grad[k] * grad[k]
            acc = sqrt(acc) - lam
            if acc < 0.0:
                acc = 0.0
        if acc > worst:
            worst = acc
    return worst


def bcd_solve(double[::1, :] x, double[::1] y,
              starts_arr, lens_arr, double[::1] gram_flat, gram_off_arr,
              double[::1] lips, double lam, double c, double tol,
              long max_iter, long inner_max, double inner_tol):
    """Cyclic BCD over groups; returns (beta, sweeps, converged)."""
    starts_np = np.ascontiguousarray(starts_arr, dtype=np.intp)
    lens_np = np.ascontiguousarray(lens_arr, dtype=np.intp)
    gram_off_np = np.ascontiguousarray(gram_off_arr, dtype=np.intp)
    cdef Py_ssize_t[::1] starts = starts_np
    cdef Py_ssize_t[::1] lens = lens_np
    cdef Py_ssize_t[::1] gram_off = gram_off_np
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t p = x.shape[1]
    cdef Py_ssize_t ngroups = starts.shape[0]
    cdef Py_ssize_t lmax = 1, g
    for g in range(ngroups):
        if lens[g] > lmax:
            lmax = lens[g]

    beta_np = np.zeros(p)
    cdef double[::1] beta = beta_np
    cdef double[::1] resid = np.empty(n)
    cdef double[::1] rho = np.empty(lmax)
    cdef double[::1] bg = np.empty(lmax)
    cdef double[::1] bnew = np.empty(lmax)
    cdef double[::1] scr_gb = np.empty(lmax)
    cdef double[::1] scr_v = np.empty(lmax)
    cdef double[::1] scr_u = np.empty(lmax)
    cdef double[::1] scr_bn = np.empty(lmax)
    cdef double[::1] scr_gbn = np.empty(lmax)
    cdef double[::1] steps = np.empty(ngroups)

    cdef Py_ssize_t sweep, s, l, k, m, off
    cdef double max_delta, dn, acc, bnorm
    cdef bint warm, converged = False
    cdef Py_ssize_t sweeps = 0

    for g in range(ngroups):
        steps[g] = 1.0 / (c * lips[g]) if lips[g] > 0.0 else 0.0

    with nogil:
        for m in range(n):
            resid[m] = y[m]
        for sweep in range(1, max_iter + 1):
            sweeps = sweep
            max_delta = 0.0
            for g in range(ngroups):
                s = starts[g]
                l = lens[g]
                off = gram_off[g]
                warm = False
                for k in range(l):
                    bg[k] = beta[s + k]
                    if bg[k] != 0.0:
                        warm = True
                # rho = Xg' resid (+ G bg when warm)
                _xt_vec(x, s, n, l, resid, rho)
                if warm:
                    for k in range(l):
                        acc = 0.0
                        for m in range(l):
                            acc += gram_flat[off + k * l + m] * bg[m]
                        rho[k] += acc
                if c * _norm(rho, l) <= lam:
                    for k in range(l):
                        bnew[k] = 0.0
                else:
                    for k in range(l):
                        bnew[k] = bg[k]
                    _block_min(gram_flat, off, rho, bnew, lam, c, steps[g],
                               inner_max, inner_tol, l, scr_gb, scr_v,
                               scr_u, scr_bn, scr_gbn)
                dn = 0.0
                for k in range(l):
                    acc = bnew[k] - bg[k]
                    dn += acc * acc
                dn = sqrt(dn)
                if dn > 0.0:
                    for k in range(l):
                        scr_u[k] = bnew[k] - bg[k]
                    _resid_update(x, s, n, l, scr_u, resid)
                    for k in range(l):
                        beta[s + k] = bnew[k]
                if dn > max_delta:
                    max_delta = dn
            bnorm = _norm(beta, p)
            if max_delta <= tol * (1.0 + bnorm):
                if _max_kkt(x, resid, beta, starts, lens, lam, c, n,
                            scr_gb) <= tol:
                    converged = True
                    break
    return beta_np, int(sweeps), bool(converged)
