"""The recursion map, its fixed points, and boundary values on the real axis.

For a shift vector ``zeta`` the recursion map acts on label-indexed points of
the upper half-plane as

    Phi_zeta(g)_j = -1 / (zeta_j + sum_k M[j, k] g_k)

and factors as ``rho o sigma_zeta o tau`` (inversion, shift, M-weighted sum).
The truncated Green functions of the free operator are its unique fixed
point for ``Im z > 0``; with a radially label symmetric potential ``v`` they
are limits of backward compositions with ``zeta_j(n) = z - v_j(n)``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .errors import NoConvergence, NotAFixedPoint, PreconditionError
from .halfplane import HalfPlaneVector, dist_from_gamma, gamma, point_at_distance
from .potential import RadialPotential
from .substitution import SubstitutionMatrix


@dataclass(frozen=True)
class SolverConfig:
    """Numerical knobs shared by the solvers.

    ``eta0 * eta_ratio**m`` for ``m = 0 .. eta_steps`` is the schedule of
    imaginary parts used to approach the real axis.
    """

    gamma_tol: float = 1e-12
    max_iter: int = 100_000
    eta0: float = 0.1
    eta_ratio: float = 0.5
    eta_steps: int = 40
    band_threshold: float = 1e-6
    tail_depth: int = 1000
    max_tail_depth: int = 2**17
    picard_budget: int = 2000
    newton_max_iter: int = 100
    stability_rtol: float = 1e-3
    stable_decades: float = 3.0
    slope_points: int = 8
    slope_tolerance: float = 0.2
    edge_tol: float = 1e-6
    angle_threshold: float = 1e-6

    def __post_init__(self):
        positive = ("gamma_tol", "eta0", "band_threshold", "stability_rtol", "edge_tol",
                    "angle_threshold", "slope_tolerance", "stable_decades")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.eta_ratio < 1:
            raise ValueError("eta_ratio must lie in (0, 1)")
        if self.max_iter < 1 or self.picard_budget < 1 or self.tail_depth < 1:
            raise ValueError("iteration counts must be positive")
        if self.slope_points < 2 or self.slope_points > self.eta_steps + 1:
            raise ValueError("slope_points must be between 2 and eta_steps + 1")

    def etas(self) -> np.ndarray:
        return self.eta0 * self.eta_ratio ** np.arange(self.eta_steps + 1)

    def with_(self, **changes) -> "SolverConfig":
        return replace(self, **changes)


DEFAULT_CONFIG = SolverConfig()


class Classification(str, enum.Enum):
    INSIDE = "INSIDE"
    OUTSIDE = "OUTSIDE"
    UNDECIDED = "UNDECIDED"

    def __str__(self):
        return self.value


# -- the map and its pieces ------------------------------------------------

def _values(x):
    return np.asarray(getattr(x, "values", x), dtype=np.complex128)


def _entries(matrix):
    if isinstance(matrix, SubstitutionMatrix):
        return matrix.as_float()
    return np.asarray(matrix, dtype=np.float64)


def shift_vector(z, n_labels) -> np.ndarray:
    """Constant shift ``(z, ..., z)``; rejects ``Im z < 0``."""
    z = complex(z)
    if z.imag < 0:
        raise PreconditionError("shift must lie in the closed upper half-plane")
    return np.full(n_labels, z, dtype=np.complex128)


def rho(g):
    return -1.0 / _values(g)


def sigma(zeta, g):
    return _values(zeta) + _values(g)


def tau(g, matrix):
    return _values(g) @ _entries(matrix).T


def phi(zeta, g, matrix):
    """Apply the recursion map ``Phi_zeta`` to ``g`` (batched on leading axes).

    ``zeta`` may be a scalar (same shift for every label) or a label vector.
    Returns a :class:`HalfPlaneVector` when ``g`` is one, else an array.
    """
    M = _entries(matrix)
    gv = _values(g)
    zeta = np.asarray(getattr(zeta, "values", zeta), dtype=np.complex128)
    if np.any(zeta.imag < 0):
        raise PreconditionError("shift must lie in the closed upper half-plane")
    out = -1.0 / (zeta + gv @ M.T)
    if isinstance(g, HalfPlaneVector):
        return HalfPlaneVector(out, g.labels)
    return out


def phi_power(zeta, g, matrix, times):
    out = _values(g)
    for _ in range(times):
        out = phi(zeta, out, matrix)
    return out


def polynomial_residual(z, h, matrix):
    """``|z h_j + sum_k M[j,k] h_k h_j + 1|`` per label."""
    h = _values(h)
    z = np.asarray(z, dtype=np.complex128)
    if z.ndim == h.ndim - 1:
        z = z[..., None]
    return np.abs(z * h + tau(h, matrix) * h + 1.0)


def uniform_bounds(z, matrix):
    """Lower and upper bounds on ``|h_j|`` for any fixed point ``h`` of ``Phi_z``."""
    M = _entries(matrix)
    diag_root = np.sqrt(np.diag(M))
    upper = 1.0 / diag_root
    lower = 1.0 / (abs(z) + (M / diag_root[:, None]).sum(axis=1))
    return lower, upper


def default_seed(matrix) -> np.ndarray:
    """``i / sqrt(M_jj)``: the centre of the annulus that contains every fixed point."""
    return 1j / np.sqrt(np.diag(_entries(matrix)))


# -- fixed points -------------------------------------------------------------

def _settled(new, old, tol):
    diff = new - old
    num = diff.real**2 + diff.imag**2
    den = new.imag * old.imag
    scale = kernels._common.EPS_SCALE * np.maximum(np.abs(new), np.abs(old))
    return np.all(num <= np.maximum(tol * den, scale * scale), axis=-1)


def _verify(zeta, M, x, tol):
    ok = np.all(np.isfinite(x), axis=-1) & np.all(x.imag > 0, axis=-1)
    with np.errstate(all="ignore"):
        img = -1.0 / (zeta + x @ M.T)
    return ok & np.all(img.imag > 0, axis=-1) & _settled(img, x, tol)


def fixed_points(zeta, matrix, g0=None, config: SolverConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Fixed points of ``Phi_zeta`` for a batch of shifts with positive imaginary part.

    Picard iteration brings every row close to the unique fixed point; a
    Newton polish on the polynomial system then pins it to float64
    accuracy. The polish is kept only if the result is in the half-plane and
    passes the Picard stopping test, otherwise Picard continues.

    Parameters
    ----------
    zeta : array_like, shape (B, N) or (B,)
        Shifts; a 1-d array is broadcast over labels.
    g0 : array_like, optional
        Starting points, shape (B, N). Defaults to :func:`default_seed`.

    Raises
    ------
    NoConvergence
        If neither Picard (within ``config.max_iter``) nor the polish succeeds.
    """
    M = _entries(matrix)
    n = M.shape[0]
    zeta = np.asarray(zeta, dtype=np.complex128)
    if zeta.ndim == 1:
        zeta = np.repeat(zeta[:, None], n, axis=1)
    if np.any(zeta.imag <= 0):
        raise PreconditionError("fixed points need Im zeta > 0")
    if g0 is None:
        g0 = np.broadcast_to(default_seed(M), zeta.shape)
    tol = config.gamma_tol

    # any root of the polynomial system inside the half-plane is the fixed point,
    # so a polished candidate is accepted on that check alone
    g, _, status = kernels.picard(zeta, M, g0, tol, min(config.picard_budget, config.max_iter))
    polished, _ = kernels.newton(zeta, M, g, config.newton_max_iter)
    good = _verify(zeta, M, polished, tol)
    retry = np.flatnonzero(~good)
    if retry.size:
        alt, _ = kernels.newton(zeta[retry], M, np.asarray(g0)[retry], config.newton_max_iter)
        alt_good = _verify(zeta[retry], M, alt, tol)
        polished[retry[alt_good]] = alt[alt_good]
        good[retry[alt_good]] = True
    out = np.where(good[:, None], polished, g)
    todo = np.flatnonzero(~good & (status != kernels.ST_OK))
    remaining = config.max_iter - config.picard_budget
    if todo.size and remaining > 0:
        g2, _, status2 = kernels.picard(zeta[todo], M, g[todo], tol, remaining)
        pol2, _ = kernels.newton(zeta[todo], M, g2, config.newton_max_iter)
        good2 = _verify(zeta[todo], M, pol2, tol)
        out[todo] = np.where(good2[:, None], pol2, g2)
        failed = todo[~good2 & (status2 != kernels.ST_OK)]
    else:
        failed = todo
    if failed.size:
        bad = zeta[failed[0], 0]
        raise NoConvergence(
            f"fixed point iteration did not converge for {failed.size} shift(s), first at {bad}",
            energy=bad.real,
        )
    return out


def fixed_point(z, matrix: SubstitutionMatrix, config: SolverConfig = DEFAULT_CONFIG,
                seed=None) -> HalfPlaneVector:
    """The vector of truncated Green functions at ``z`` (``Im z > 0``)."""
    z = complex(z)
    if z.imag <= 0:
        raise PreconditionError("fixed_point needs Im z > 0")
    g0 = None if seed is None else _values(seed)[None, :]
    h = fixed_points(np.array([z]), matrix, g0, config)[0]
    return HalfPlaneVector(h, getattr(matrix, "labels", None))


# -- boundary values ------------------------------------------------------------

@dataclass
class BoundaryValue:
    """Result of approaching ``E`` from the upper half-plane.

    ``limit`` is complex for INSIDE points and real for OUTSIDE points;
    ``trace[m]`` is the fixed point at ``E + i etas[m]``.
    """

    energy: float
    limit: np.ndarray
    classification: Classification
    etas: np.ndarray
    trace: np.ndarray


def _loglog_slopes(etas, im_parts):
    x = np.log(etas)
    y = np.log(im_parts)
    xc = x - x.mean()
    return ((y - y.mean(axis=0)) * xc[:, None]).sum(axis=0) / (xc**2).sum()


def classify_trace(etas, trace, config: SolverConfig = DEFAULT_CONFIG, label=None):
    """Classify one energy from its trace of fixed points along the eta schedule.

    INSIDE: the watched imaginary part stays above ``band_threshold`` and
    varies by at most ``stability_rtol`` (relative) over the last
    ``stable_decades`` decades of eta. OUTSIDE: every component decays like
    eta (log-log slope within ``slope_tolerance`` of 1 over the last
    ``slope_points`` points). Anything else is UNDECIDED.
    """
    im = trace.imag
    watched = im.min(axis=-1) if label is None else im[:, label]
    window = etas <= etas[-1] * 10.0**config.stable_decades * (1 + 1e-12)
    last = watched[-1]
    spread = watched[window].max() - watched[window].min()
    if last > config.band_threshold and spread <= config.stability_rtol * last:
        return Classification.INSIDE
    k = config.slope_points
    if np.all(im[-k:] > 0):
        slopes = _loglog_slopes(etas[-k:], im[-k:])
        if np.all(np.abs(slopes - 1.0) <= config.slope_tolerance):
            return Classification.OUTSIDE
    return Classification.UNDECIDED


def boundary_values(energies, matrix, config: SolverConfig = DEFAULT_CONFIG, label=None):
    """Vectorized :func:`boundary_value` over an array of energies."""
    M = _entries(matrix)
    energies = np.atleast_1d(np.asarray(energies, dtype=np.float64))
    etas = config.etas()
    n = M.shape[0]
    trace = np.empty((energies.size, etas.size, n), dtype=np.complex128)
    g = np.broadcast_to(default_seed(M), (energies.size, n))
    for m, eta in enumerate(etas):
        zeta = np.repeat((energies + 1j * eta)[:, None], n, axis=1)
        try:
            g = fixed_points(zeta, M, g, config)
        except NoConvergence as exc:
            raise NoConvergence(f"{exc} (eta={eta:.3g})", energy=exc.energy) from None
        trace[:, m] = g
    out = []
    for i, energy in enumerate(energies):
        cls = classify_trace(etas, trace[i], config, label)
        limit = trace[i, -1].real.copy() if cls is Classification.OUTSIDE else trace[i, -1].copy()
        out.append(BoundaryValue(float(energy), limit, cls, etas, trace[i]))
    return out


def boundary_value(E: float, matrix, config: SolverConfig = DEFAULT_CONFIG, label=None) -> BoundaryValue:
    """Limit of the fixed point as ``E + i eta`` approaches the real axis.

    Each step of the eta schedule warm-starts from the previous solution.
    ``label`` selects which component drives the INSIDE test (default: the
    smallest imaginary part over all labels).
    """
    if not np.isfinite(E):
        raise PreconditionError("energy must be finite")
    if label is not None and isinstance(matrix, SubstitutionMatrix):
        label = matrix.index(label)
    return boundary_values([E], matrix, config, label)[0]


# -- potentials -------------------------------------------------------------------

def green_levels(z, matrix, potential: RadialPotential, n_max: int,
                 config: SolverConfig = DEFAULT_CONFIG, seed=None) -> np.ndarray:
    """Truncated Green functions ``Gamma_{(n, j)}(z, L + v)`` for ``n <= n_max``.

    Composes ``Phi_{zeta(n)} o ... o Phi_{zeta(N)}`` backward from tail depth
    ``N``, with ``zeta_j(m) = z - v_j(m)``, and doubles ``N`` until the levels
    ``0..n_max`` move by less than ``gamma_tol`` (or float64 resolution).

    Returns an array of shape ``(len(z), n_max + 1, N)``.
    """
    M = _entries(matrix)
    n = M.shape[0]
    z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
    if np.any(z.imag <= 0):
        raise PreconditionError("green_levels needs Im z > 0")
    seed = default_seed(M) if seed is None else _values(seed)
    seed = np.broadcast_to(seed, (z.size, n))
    depth = max(int(config.tail_depth), n_max + 1)
    previous = None
    while True:
        v = potential.values(depth + 1)
        zetas = z[:, None, None] - v[None, :, :]
        levels = kernels.compose(zetas, M, seed)[:, : n_max + 1]
        if previous is not None and np.all(_settled(levels, previous, config.gamma_tol)):
            return levels
        previous = levels
        depth *= 2
        if depth > config.max_tail_depth:
            raise NoConvergence(
                f"tail composition not settled at depth {depth // 2}",
                energy=float(z[0].real),
            )


def green_with_potential(z, matrix, potential: RadialPotential, sphere: int, label,
                         config: SolverConfig = DEFAULT_CONFIG) -> complex:
    """Truncated Green function of any vertex on ``sphere`` carrying ``label``."""
    j = matrix.index(label) if isinstance(matrix, SubstitutionMatrix) else int(label)
    return complex(green_levels(complex(z), matrix, potential, sphere, config)[0, sphere, j])


# -- contraction diagnostics ----------------------------------------------------------

@dataclass
class ContractionReport:
    """Empirical contraction of ``Phi_E`` around a fixed point ``h``.

    ``ratios[s] = dist(Phi^(n+1) g_s, Phi^(n+1) h) / dist(g_s, h)`` with
    ``n`` the primitivity exponent; the expansion arrays are indexed
    ``[sample, j, k]`` (``p_h`` has no sample axis).
    """

    energy: float
    ball_radius: float
    steps: int
    samples: np.ndarray
    ratios: np.ndarray
    single_step_ratios: np.ndarray
    p_h: np.ndarray
    p_g: np.ndarray
    P: np.ndarray
    cos_alpha: np.ndarray
    c: np.ndarray
    tau_identity_residual: np.ndarray

    @property
    def max_ratio(self) -> float:
        return float(self.ratios.max())

    @property
    def worst_case_factor(self) -> float:
        return self.max_ratio

    @property
    def max_single_step_ratio(self) -> float:
        return float(self.single_step_ratios.max())


def tau_expansion(g, h, matrix):
    """Terms of the exact expansion of ``gamma(tau_j g, tau_j h)``.

    Returns ``(p_h, p_g, P, cos_alpha, c, rhs)`` where ``rhs[..., j]`` equals
    ``sum_k p_h[j,k] c[j,k] gamma(g_k, h_k)``. Terms with ``g_k == h_k`` are zero.
    """
    M = _entries(matrix)
    g = _values(g)
    h = _values(h)
    tg = tau(g, M)
    th = tau(h, M)
    p_h = M * h.imag[..., None, :] / th.imag[..., :, None]
    p_g = M * g.imag[..., None, :] / tg.imag[..., :, None]
    gam = gamma(g, h)
    a = g.imag * h.imag * gam          # |g_k - h_k|**2
    geo = np.sqrt(a[..., :, None] * a[..., None, :])
    cross = g.imag[..., :, None] * h.imag[..., None, :] * gam[..., None, :]
    arith = 0.5 * (cross + np.swapaxes(cross, -1, -2))
    with np.errstate(invalid="ignore", divide="ignore"):
        P = np.where(arith > 0, geo / np.where(arith > 0, arith, 1.0), 0.0)
    d = g - h
    cos_alpha = np.real(d[..., :, None] * np.conj(d[..., None, :]))
    norm = np.abs(d)[..., :, None] * np.abs(d)[..., None, :]
    cos_alpha = np.where(norm > 0, cos_alpha / np.where(norm > 0, norm, 1.0), 0.0)
    # c[j, k] = sum_l p_g[j, l] P[k, l] cos_alpha[k, l]
    c = np.einsum("...jl,...kl->...jk", p_g, P * cos_alpha)
    rhs = np.einsum("...jk,...jk,...k->...j", p_h, c, gam)
    return p_h, p_g, P, cos_alpha, c, rhs


def sample_ball(h, radius, n_samples, rng):
    """Points ``g`` with ``gamma(g_j, h_j) <= radius`` for every label."""
    h = _values(h)
    n = h.size
    gam = radius * rng.uniform(0.0, 1.0, size=(n_samples, n))
    direction = rng.uniform(-np.pi, np.pi, size=(n_samples, n))
    return point_at_distance(h[None, :], dist_from_gamma(gam), direction)


def contraction_diagnostics(E: float, matrix: SubstitutionMatrix, h, R: float = 0.1,
                            samples: int = 1000, seed: int = 0,
                            fixed_point_tol: float = 1e-8) -> ContractionReport:
    """Sample the ``gamma``-ball of radius ``R`` around ``h`` and measure contraction.

    Raises
    ------
    NotAFixedPoint
        If ``gamma_A(Phi_E(h), h) > fixed_point_tol``.
    """
    M = _entries(matrix)
    h = _values(h)
    E = float(E)
    if R <= 0:
        raise PreconditionError("ball radius must be positive")
    residual = float(np.max(gamma(phi(E, h, M), h)))
    if residual > fixed_point_tol:
        raise NotAFixedPoint(f"gamma(Phi_E(h), h) = {residual:.3g} exceeds {fixed_point_tol:g}")
    rng = np.random.default_rng(seed)
    g = sample_ball(h, R, samples, rng)
    steps = getattr(matrix, "primitivity_exponent", 1) + 1

    d0 = dist_from_gamma(np.max(gamma(g, h[None, :]), axis=-1))
    d1 = dist_from_gamma(np.max(gamma(phi(E, g, M), phi(E, h, M)[None, :]), axis=-1))
    gn = phi_power(E, g, M, steps)
    hn = phi_power(E, h, M, steps)
    dn = dist_from_gamma(np.max(gamma(gn, hn[None, :]), axis=-1))

    p_h, p_g, P, cos_alpha, c, rhs = tau_expansion(g, h[None, :], M)
    lhs = gamma(tau(g, M), tau(h, M)[None, :])
    return ContractionReport(
        energy=E,
        ball_radius=R,
        steps=steps,
        samples=g,
        ratios=dn / d0,
        single_step_ratios=d1 / d0,
        p_h=p_h[0],
        p_g=p_g,
        P=P,
        cos_alpha=cos_alpha,
        c=c,
        tau_identity_residual=np.abs(lhs - rhs),
    )
