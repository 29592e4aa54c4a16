"""Pure-numpy kernels, vectorized over the batch axis."""
import numpy as np

from ._common import DENOM_FLOOR, EPS_SCALE, NEWTON_STEP_RTOL, ST_DEGENERATE, ST_MAXITER, ST_OK

name = "numpy"


def _step_settled(new, old, tol):
    diff = new - old
    num = diff.real**2 + diff.imag**2
    den = new.imag * old.imag
    scale = EPS_SCALE * np.maximum(np.abs(new), np.abs(old))
    return np.all(num <= np.maximum(tol * den, scale * scale), axis=-1)


def picard(zeta, M, g0, tol, max_iter):
    zeta = np.asarray(zeta, dtype=np.complex128)
    g = np.array(g0, dtype=np.complex128)
    n_batch = g.shape[0]
    iters = np.full(n_batch, max_iter, dtype=np.int64)
    status = np.full(n_batch, ST_MAXITER, dtype=np.int64)
    active = np.arange(n_batch)
    MT = M.T
    for it in range(max_iter):
        if active.size == 0:
            break
        old = g[active]
        denom = zeta[active] + old @ MT
        bad = np.any(np.abs(denom) < DENOM_FLOOR, axis=-1)
        new = -1.0 / np.where(np.abs(denom) < DENOM_FLOOR, 1.0, denom)
        bad |= np.any(new.imag <= 0.0, axis=-1)
        done = _step_settled(new, old, tol) & ~bad
        g[active[~bad]] = new[~bad]
        finished = done | bad
        iters[active[finished]] = it + 1
        status[active[done]] = ST_OK
        status[active[bad]] = ST_DEGENERATE
        active = active[~finished]
    return g, iters, status


def newton(zeta, M, g0, max_iter):
    zeta = np.asarray(zeta, dtype=np.complex128)
    xi = np.array(g0, dtype=np.complex128)
    n_batch, n = xi.shape
    status = np.full(n_batch, ST_MAXITER, dtype=np.int64)
    active = np.arange(n_batch)
    eye = np.eye(n)
    MT = M.T
    for _ in range(max_iter):
        if active.size == 0:
            break
        x = xi[active]
        s = zeta[active] + x @ MT
        resid = x * s + 1.0
        jac = eye * s[:, None, :] + x[:, :, None] * M
        try:
            step = np.linalg.solve(jac, -resid[..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = np.empty_like(x)
            for i in range(x.shape[0]):
                try:
                    step[i] = np.linalg.solve(jac[i], -resid[i])
                except np.linalg.LinAlgError:
                    step[i] = np.nan
        finite = np.all(np.isfinite(step), axis=-1)
        x = x + np.where(finite[:, None], step, 0.0)
        xi[active] = x
        small = np.all(np.abs(step) <= NEWTON_STEP_RTOL * np.abs(x), axis=-1) & finite
        status[active[~finite]] = ST_DEGENERATE
        status[active[small]] = ST_OK
        active = active[~small & finite]
    return xi, status


def compose(zetas, M, seed):
    zetas = np.asarray(zetas, dtype=np.complex128)
    n_batch, n_levels, n = zetas.shape
    out = np.empty((n_batch, n_levels, n), dtype=np.complex128)
    g = np.array(seed, dtype=np.complex128)
    MT = M.T
    for level in range(n_levels - 1, -1, -1):
        g = -1.0 / (zetas[:, level, :] + g @ MT)
        out[:, level, :] = g
    return out


def dirichlet_table(z, M, depth):
    z = np.asarray(z, dtype=np.complex128)
    n = M.shape[0]
    table = np.empty((z.size, depth + 1, n), dtype=np.complex128)
    zcol = z[:, None]
    table[:, 0, :] = -1.0 / np.broadcast_to(zcol, (z.size, n))
    for d in range(1, depth + 1):
        below = table[:, d - 1, :]
        child_sum = np.einsum("jk,bk->bj", M, below)
        table[:, d, :] = -1.0 / (zcol + child_sum)
    return table
