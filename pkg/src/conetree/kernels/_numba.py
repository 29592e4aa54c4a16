"""Numba-compiled kernels; one independent work item per batch row."""
import numpy as np
from numba import njit, prange

from ._common import DENOM_FLOOR, EPS_SCALE, NEWTON_STEP_RTOL, ST_DEGENERATE, ST_MAXITER, ST_OK

name = "numba"


@njit(cache=True)
def _apply_phi(zeta_row, M, g, out):
    n = g.size
    for j in range(n):
        s = zeta_row[j]
        for k in range(n):
            s += M[j, k] * g[k]
        if abs(s) < DENOM_FLOOR:
            return False
        out[j] = -1.0 / s
        if out[j].imag <= 0.0:
            return False
    return True


@njit(cache=True)
def _settled(new, old, tol):
    for j in range(new.size):
        d = new[j] - old[j]
        num = d.real * d.real + d.imag * d.imag
        den = new[j].imag * old[j].imag
        scale = EPS_SCALE * max(abs(new[j]), abs(old[j]))
        if num > max(tol * den, scale * scale):
            return False
    return True


@njit(cache=True, parallel=True)
def picard(zeta, M, g0, tol, max_iter):
    n_batch, n = g0.shape
    g_out = g0.copy()
    iters = np.full(n_batch, max_iter, dtype=np.int64)
    status = np.full(n_batch, ST_MAXITER, dtype=np.int64)
    for b in prange(n_batch):
        g = g0[b].copy()
        new = np.empty(n, dtype=np.complex128)
        for it in range(max_iter):
            if not _apply_phi(zeta[b], M, g, new):
                status[b] = ST_DEGENERATE
                iters[b] = it + 1
                break
            done = _settled(new, g, tol)
            g[:] = new
            if done:
                status[b] = ST_OK
                iters[b] = it + 1
                break
        g_out[b] = g
    return g_out, iters, status


@njit(cache=True)
def _solve_small(a, rhs):
    """Gaussian elimination with partial pivoting; returns False if singular."""
    n = rhs.size
    for col in range(n):
        piv = col
        best = abs(a[col, col])
        for r in range(col + 1, n):
            if abs(a[r, col]) > best:
                best = abs(a[r, col])
                piv = r
        if best == 0.0:
            return False
        if piv != col:
            for c in range(n):
                tmp = a[col, c]
                a[col, c] = a[piv, c]
                a[piv, c] = tmp
            tmp = rhs[col]
            rhs[col] = rhs[piv]
            rhs[piv] = tmp
        for r in range(col + 1, n):
            f = a[r, col] / a[col, col]
            for c in range(col, n):
                a[r, c] -= f * a[col, c]
            rhs[r] -= f * rhs[col]
    for r in range(n - 1, -1, -1):
        acc = rhs[r]
        for c in range(r + 1, n):
            acc -= a[r, c] * rhs[c]
        rhs[r] = acc / a[r, r]
    return True


@njit(cache=True, parallel=True)
def newton(zeta, M, g0, max_iter):
    n_batch, n = g0.shape
    xi = g0.copy()
    status = np.full(n_batch, ST_MAXITER, dtype=np.int64)
    for b in prange(n_batch):
        x = xi[b].copy()
        s = np.empty(n, dtype=np.complex128)
        jac = np.empty((n, n), dtype=np.complex128)
        rhs = np.empty(n, dtype=np.complex128)
        for _ in range(max_iter):
            for j in range(n):
                acc = zeta[b, j]
                for k in range(n):
                    acc += M[j, k] * x[k]
                s[j] = acc
            for j in range(n):
                rhs[j] = -(x[j] * s[j] + 1.0)
                for k in range(n):
                    jac[j, k] = M[j, k] * x[j]
                jac[j, j] += s[j]
            if not _solve_small(jac, rhs):
                status[b] = ST_DEGENERATE
                break
            finite = True
            for j in range(n):
                if not (np.isfinite(rhs[j].real) and np.isfinite(rhs[j].imag)):
                    finite = False
            if not finite:
                status[b] = ST_DEGENERATE
                break
            small = True
            for j in range(n):
                x[j] += rhs[j]
                if abs(rhs[j]) > NEWTON_STEP_RTOL * abs(x[j]):
                    small = False
            if small:
                status[b] = ST_OK
                break
        xi[b] = x
    return xi, status


@njit(cache=True, parallel=True)
def compose(zetas, M, seed):
    n_batch, n_levels, n = zetas.shape
    out = np.empty((n_batch, n_levels, n), dtype=np.complex128)
    for b in prange(n_batch):
        g = seed[b].copy()
        new = np.empty(n, dtype=np.complex128)
        for level in range(n_levels - 1, -1, -1):
            for j in range(n):
                s = zetas[b, level, j]
                for k in range(n):
                    s += M[j, k] * g[k]
                new[j] = -1.0 / s
            g[:] = new
            out[b, level, :] = g
    return out


@njit(cache=True, parallel=True)
def dirichlet_table(z, M, depth):
    n_batch = z.size
    n = M.shape[0]
    table = np.empty((n_batch, depth + 1, n), dtype=np.complex128)
    for b in prange(n_batch):
        for j in range(n):
            table[b, 0, j] = -1.0 / z[b]
        for d in range(1, depth + 1):
            for j in range(n):
                s = z[b]
                for k in range(n):
                    s += M[j, k] * table[b, d - 1, k]
                table[b, d, j] = -1.0 / s
    return table
