"""Hot inner loops with two interchangeable backends.

``numba`` (default when importable) compiles the loops; ``numpy`` is a
vectorized fallback. Set ``CONETREE_BACKEND=numpy`` (or ``CONETREE_NO_NUMBA=1``)
to force the fallback. ``CONETREE_THREADS`` caps numba's thread pool.

All kernels take a leading batch axis and treat rows independently, so the
output for a row never depends on the other rows or on thread scheduling.

Kernels
-------
picard(zeta, M, g0, tol, max_iter) -> (g, iters, status)
    Iterate ``g <- -1/(zeta + M g)`` until successive iterates are within
    ``tol`` in the gamma semimetric (or at float64 resolution).
newton(zeta, M, g0, max_iter) -> (xi, status)
    Newton's method on ``xi_j (zeta_j + (M xi)_j) + 1 = 0``.
compose(zetas, M, seed) -> levels
    Backward composition ``levels[:, n] = Phi_{zeta(n)}(levels[:, n+1])``
    started from ``seed`` below the last level.
dirichlet_table(z, M, depth) -> table
    ``table[:, d, j]``: truncated Green function of a label-``j`` vertex with
    ``d`` generations below it and a Dirichlet cutoff.
"""
import os
import warnings

import numpy as np

from . import _numpy
from ._common import ST_DEGENERATE, ST_MAXITER, ST_OK

__all__ = [
    "ST_OK", "ST_MAXITER", "ST_DEGENERATE", "BACKEND", "available_backends",
    "get_backend", "set_backend", "picard", "newton", "compose", "dirichlet_table",
]

_BACKENDS = {"numpy": _numpy}

try:
    from . import _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None
else:
    _BACKENDS["numba"] = _numba
    import numba

    if "NUMBA_THREADING_LAYER" not in os.environ:
        # the system TBB is often too old and numba warns once per process
        numba.config.THREADING_LAYER = "omp"
    _threads = os.environ.get("CONETREE_THREADS")
    if _threads:
        numba.set_num_threads(max(1, min(int(_threads), numba.config.NUMBA_NUM_THREADS)))


def _initial_backend():
    requested = os.environ.get("CONETREE_BACKEND", "").strip().lower()
    if os.environ.get("CONETREE_NO_NUMBA", "").strip() not in ("", "0"):
        requested = "numpy"
    if requested in _BACKENDS:
        return requested
    if requested:
        warnings.warn(f"unknown CONETREE_BACKEND={requested!r}, using default")
    return "numba" if "numba" in _BACKENDS else "numpy"


BACKEND = _initial_backend()
_impl = _BACKENDS[BACKEND]


def available_backends():
    return sorted(_BACKENDS)


def get_backend(name=None):
    """Kernel module for ``name`` (the active one by default)."""
    return _impl if name is None else _BACKENDS[name]


def set_backend(name):
    """Switch the active backend at runtime; returns the previous name."""
    global _impl, BACKEND
    previous = BACKEND
    _impl = _BACKENDS[name]
    BACKEND = name
    return previous


def _f64(M):
    return np.ascontiguousarray(M, dtype=np.float64)


def _c128(a):
    return np.ascontiguousarray(a, dtype=np.complex128)


def picard(zeta, M, g0, tol, max_iter):
    return _impl.picard(_c128(zeta), _f64(M), _c128(g0), float(tol), int(max_iter))


def newton(zeta, M, g0, max_iter=100):
    return _impl.newton(_c128(zeta), _f64(M), _c128(g0), int(max_iter))


def compose(zetas, M, seed):
    return _impl.compose(_c128(zetas), _f64(M), _c128(seed))


def dirichlet_table(z, M, depth):
    return _impl.dirichlet_table(_c128(np.atleast_1d(z)), _f64(M), int(depth))
