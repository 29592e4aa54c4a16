"""Bands, spectral densities, vertex Green functions and spectral moments.

The spectrum of the adjacency operator is the closure of the set of
energies where the boundary values of the truncated Green functions have
positive imaginary part. Densities are ``rho_x(E) = Im G_x(E) / pi`` and the
Green function of a vertex follows from the one of its parent by

    G_y = Gamma_y + Gamma_y**2 * G_parent,    G_root = Gamma_{a(root)}.
"""
from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError, UndecidedEnergy
from .halfplane import wrap_angle
from .recursion import (
    DEFAULT_CONFIG,
    BoundaryValue,
    Classification,
    SolverConfig,
    boundary_values,
)
from .substitution import ConeTree, SubstitutionMatrix, generate_tree

INSIDE = Classification.INSIDE
OUTSIDE = Classification.OUTSIDE
UNDECIDED = Classification.UNDECIDED


class MomentMethod(str, enum.Enum):
    DENSITY = "DENSITY"
    WALKS = "WALKS"


@dataclass(frozen=True)
class Band:
    lower: float
    upper: float
    edge_refinement_tolerance: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError("band needs lower < upper")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, E, margin=0.0) -> bool:
        return self.lower + margin <= E <= self.upper - margin

    def to_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper,
                "edge_refinement_tolerance": self.edge_refinement_tolerance}


@dataclass(frozen=True)
class VertexGreen:
    vertex: int
    value: complex


@dataclass
class SpectrumReport:
    """Outcome of :func:`scan_bands`.

    ``im_gamma[i, j]`` is ``Im Gamma_j`` at the smallest eta for grid point
    ``i``; ``density_root`` is zero at OUTSIDE points and NaN at UNDECIDED
    ones. ``quadrature`` holds the ``(E, rho)`` nodes used for integrals,
    one pair of arrays per band.
    """

    fingerprint: str
    root_label: str
    energies: np.ndarray
    classifications: list
    im_gamma: np.ndarray
    density_root: np.ndarray
    bands: list
    etas: np.ndarray
    max_abs_green: np.ndarray
    growth: np.ndarray
    quadrature: list = field(default_factory=list, repr=False)
    config: dict = field(default_factory=dict)

    @property
    def normalization(self) -> float:
        return integrate(self, lambda E: np.ones_like(E))

    @property
    def undecided_energies(self) -> np.ndarray:
        mask = np.array([c is UNDECIDED for c in self.classifications], dtype=bool)
        return self.energies[mask]

    def undecided_off_edge(self) -> np.ndarray:
        """UNDECIDED grid points farther than one grid step from every band edge."""
        und = self.undecided_energies
        if und.size == 0:
            return und
        edges = np.array([e for b in self.bands for e in (b.lower, b.upper)])
        step = self.config.get("grid_step", 0.0)
        if edges.size == 0:
            return und
        gap = np.min(np.abs(und[:, None] - edges[None, :]), axis=1)
        return und[gap > step]

    def to_dict(self) -> dict:
        return {
            "fingerprint": self.fingerprint,
            "root_label": self.root_label,
            "bands": [b.to_dict() for b in self.bands],
            "normalization": self.normalization,
            "grid": {"start": float(self.energies[0]), "stop": float(self.energies[-1]),
                     "points": int(self.energies.size)},
            "eta_schedule": {"eta0": float(self.etas[0]), "eta_min": float(self.etas[-1]),
                             "steps": int(self.etas.size - 1)},
            "undecided": [float(e) for e in self.undecided_energies],
            "max_abs_green_inside": float(self.max_abs_green_inside),
            "config": self.config,
        }

    @property
    def max_abs_green_inside(self) -> float:
        mask = np.array([c is INSIDE for c in self.classifications], dtype=bool)
        return float(self.max_abs_green[mask].max()) if mask.any() else 0.0

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["E", "classification", "min_im_gamma", "density_root"])
        for E, cls, im, rho in zip(self.energies, self.classifications,
                                   self.im_gamma.min(axis=1), self.density_root):
            writer.writerow([f"{E:.10g}", str(cls), f"{im:.12e}", f"{rho:.12e}"])
        return buf.getvalue()


# -- scans -------------------------------------------------------------------

def default_range(matrix: SubstitutionMatrix):
    """``[-(1 + d), 1 + d]`` with ``d`` the largest row sum (a norm bound)."""
    d = float(matrix.row_sums.max())
    return -(1.0 + d), 1.0 + d


def energy_grid(E_range, grid_step) -> np.ndarray:
    lo, hi = float(E_range[0]), float(E_range[1])
    if grid_step <= 0 or not hi > lo:
        raise PreconditionError("need grid_step > 0 and a non-empty range")
    n = int(math.floor((hi - lo) / grid_step + 1e-9)) + 1
    return lo + grid_step * np.arange(n)


def _classify(energies, matrix, config, label):
    return boundary_values(energies, matrix, config, label)


def _bisect_edge(inner, outer, matrix, config, label):
    """Locate the transition between an INSIDE and an OUTSIDE energy.

    UNDECIDED midpoints are treated as outside the band; they only occur
    within a tiny neighbourhood of the edge.
    """
    while abs(outer - inner) > config.edge_tol:
        mid = 0.5 * (inner + outer)
        cls = _classify([mid], matrix, config, label)[0].classification
        if cls is INSIDE:
            inner = mid
        else:
            outer = mid
    return 0.5 * (inner + outer)


def _runs(classes):
    """Index ranges of INSIDE runs, merging runs separated only by UNDECIDED points."""
    runs = []
    start = None
    last_inside = None
    for i, c in enumerate(classes):
        if c is INSIDE:
            if start is None:
                start = i
            last_inside = i
        elif c is OUTSIDE and start is not None:
            runs.append((start, last_inside))
            start = None
    if start is not None:
        runs.append((start, last_inside))
    return runs


def _next_outside(classes, i, step):
    j = i + step
    while 0 <= j < len(classes) and classes[j] is not OUTSIDE:
        j += step
    return j if 0 <= j < len(classes) else None


def scan_bands(matrix: SubstitutionMatrix, E_range=None, grid_step: float = 1e-2,
               config: SolverConfig = DEFAULT_CONFIG, root_label=0) -> SpectrumReport:
    """Classify a grid of energies, then merge and refine bands.

    Grid points are classified by the root-label component of the boundary
    value. Consecutive INSIDE points form a candidate band; each edge is
    bisected between the outermost INSIDE point and the nearest OUTSIDE
    point down to ``config.edge_tol``. A band touching the end of the range
    keeps the grid end as its edge.
    """
    root = matrix.index(root_label)
    if E_range is None:
        E_range = default_range(matrix)
    grid = energy_grid(E_range, grid_step)
    results = _classify(grid, matrix, config, root)
    classes = [r.classification for r in results]

    bands = []
    for first, last in _runs(classes):
        lo_out = _next_outside(classes, first, -1)
        hi_out = _next_outside(classes, last, +1)
        lower = grid[first] if lo_out is None else _bisect_edge(grid[first], grid[lo_out], matrix, config, root)
        upper = grid[last] if hi_out is None else _bisect_edge(grid[last], grid[hi_out], matrix, config, root)
        if upper > lower:
            bands.append(Band(float(lower), float(upper), config.edge_tol))

    im_gamma = np.array([r.trace[-1].imag for r in results])
    density_root = np.array([
        r.limit[root].imag / math.pi if r.classification is INSIDE
        else (0.0 if r.classification is OUTSIDE else math.nan)
        for r in results
    ])
    window = results[0].etas <= results[0].etas[-1] * 10.0**config.stable_decades * (1 + 1e-12)
    max_abs = np.array([np.abs(r.trace[:, root]).max() for r in results])
    growth = np.array([np.abs(r.trace[window, root]).max() / np.abs(r.trace[window, root]).min()
                       for r in results])

    report = SpectrumReport(
        fingerprint=matrix.fingerprint(),
        root_label=matrix.labels[root],
        energies=grid,
        classifications=classes,
        im_gamma=im_gamma,
        density_root=density_root,
        bands=bands,
        etas=results[0].etas,
        max_abs_green=max_abs,
        growth=growth,
        config={"grid_step": grid_step, "E_range": [float(E_range[0]), float(E_range[1])],
                **_config_dict(config)},
    )
    report.quadrature = [_band_nodes(b, grid, results, matrix, config, root) for b in bands]
    return report


def _config_dict(config):
    from dataclasses import asdict

    return asdict(config)


def _band_nodes(band, grid, results, matrix, config, root):
    """Quadrature nodes on a band: both inset edges plus the interior grid points."""
    inset = config.edge_tol
    ends = np.array([band.lower + inset, band.upper - inset])
    end_vals = _classify(ends, matrix, config, root)
    E = [ends[0]]
    rho = [_rho(end_vals[0], root)]
    for Eg, r in zip(grid, results):
        if band.lower + inset < Eg < band.upper - inset:
            E.append(Eg)
            rho.append(_rho(r, root))
    E.append(ends[1])
    rho.append(_rho(end_vals[1], root))
    return np.array(E), np.array(rho)


def _rho(result: BoundaryValue, root):
    # an UNDECIDED point right at an edge carries no weight
    if result.classification is INSIDE:
        return result.limit[root].imag / math.pi
    return 0.0


def integrate(report: SpectrumReport, f) -> float:
    """Trapezoid integral of ``f(E) * rho_root(E)`` over all bands."""
    total = 0.0
    for E, rho in report.quadrature:
        y = f(E) * rho
        total += float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(E)))
    return total


def integrate_density(report: SpectrumReport) -> float:
    return report.normalization


# -- vertex Green functions -----------------------------------------------------

def green_along_path(gamma, label_path) -> complex:
    """``G`` at the end of a label path starting at the root.

    ``gamma`` is either one value per label or a ``(sphere, label)`` table
    (for radial potentials).
    """
    gamma = np.asarray(gamma, dtype=np.complex128)
    table = gamma if gamma.ndim == 2 else np.broadcast_to(gamma, (len(label_path), gamma.size))
    G = table[0, label_path[0]]
    for n, k in enumerate(label_path[1:], start=1):
        g = table[n, k]
        G = g + g * g * G
    return complex(G)


def vertex_green_array(tree: ConeTree, gamma) -> np.ndarray:
    """``G_x`` for every vertex of ``tree`` in id order."""
    gamma = np.asarray(gamma, dtype=np.complex128)
    if gamma.ndim == 1:
        g = gamma[tree.labels]
    else:
        if gamma.shape[0] <= tree.depth:
            raise PreconditionError("Gamma table must cover every sphere of the tree")
        g = gamma[tree.spheres, tree.labels]
    G = np.empty(len(tree), dtype=np.complex128)
    G[0] = g[0]
    for n in range(1, tree.depth + 1):
        ids = tree.sphere(n)
        G[ids] = g[ids] + g[ids] ** 2 * G[tree.parents[ids]]
    return G


def vertex_green(tree: ConeTree, gamma) -> list:
    """Green functions of every vertex, propagated breadth-first from the root."""
    return [VertexGreen(v, complex(x)) for v, x in enumerate(vertex_green_array(tree, gamma))]


def _label_path(matrix, root_label, path):
    root = matrix.index(root_label)
    if path is None:
        return [root]
    idx = [matrix.index(p) for p in path]
    if idx[0] != root:
        idx = [root] + idx
    for a, b in zip(idx, idx[1:]):
        if matrix.entries[a, b] == 0:
            raise PreconditionError(
                f"label {matrix.labels[b]!r} cannot follow {matrix.labels[a]!r}")
    return idx


def density(matrix: SubstitutionMatrix, E: float, root_label=0, path=None,
            config: SolverConfig = DEFAULT_CONFIG) -> float:
    """Spectral density ``Im G_x(E) / pi`` at a vertex.

    The vertex is reached from the root by the label sequence ``path``
    (root only by default); all vertices with the same sequence are
    equivalent. Returns 0 outside the spectrum.

    Raises
    ------
    UndecidedEnergy
        If the boundary value at ``E`` cannot be classified.
    """
    labels = _label_path(matrix, root_label, path)
    bv = boundary_values([E], matrix, config, labels[0])[0]
    if bv.classification is UNDECIDED:
        raise UndecidedEnergy(f"energy {E} is not classifiable (near a band edge?)")
    if bv.classification is OUTSIDE:
        return 0.0
    return max(green_along_path(bv.limit, labels).imag, 0.0) / math.pi


# -- the Sigma_0 test --------------------------------------------------------------

def max_phase_spread(values) -> float:
    """``max |arg(v_j conj(v_k))|`` over all pairs."""
    phase = np.angle(np.asarray(values, dtype=np.complex128))
    return float(np.max(np.abs(wrap_angle(phase[:, None] - phase[None, :]))))


def sigma0_test(matrix: SubstitutionMatrix, E: float, config: SolverConfig = DEFAULT_CONFIG):
    """Largest phase difference between components of ``Gamma(E)``.

    Returns ``(max_angle, "ALIGNED" | "SPREAD")`` with the cut at
    ``config.angle_threshold`` radians.
    """
    bv = boundary_values([E], matrix, config)[0]
    if bv.classification is UNDECIDED:
        raise UndecidedEnergy(f"energy {E} is not classifiable")
    if bv.classification is OUTSIDE:
        raise PreconditionError(f"energy {E} is outside the spectrum")
    angle = max_phase_spread(bv.limit)
    return angle, ("SPREAD" if angle > config.angle_threshold else "ALIGNED")


# -- moments -----------------------------------------------------------------------

def closed_walks(matrix: SubstitutionMatrix, root_label, m: int) -> int:
    """Number of closed walks of length ``m`` at the root, by dynamic programming.

    Propagates walk counts ``A^s e_root`` on the explicit depth-``ceil(m/2)``
    tree with Python integers.
    """
    if m < 0:
        raise PreconditionError("moment order must be nonnegative")
    tree = generate_tree(matrix, root_label, (m + 1) // 2)
    par = np.asarray(tree.parents[1:])
    count = np.zeros(len(tree), dtype=object)
    count[:] = 0
    count[0] = 1
    for _ in range(m):
        new = np.zeros(len(tree), dtype=object)
        new[:] = 0
        new[1:] += count[par]            # step down from the parent
        np.add.at(new, par, count[1:])   # step up from a child
        count = new
    return int(count[0])


def density_moment(report: SpectrumReport, m: int) -> float:
    return integrate(report, lambda E: E**m)


def moment(matrix: SubstitutionMatrix, root_label, m: int, via=MomentMethod.WALKS,
           config: SolverConfig = DEFAULT_CONFIG, grid_step: float = 1e-2,
           report: SpectrumReport | None = None):
    """``m``-th moment of the root spectral measure.

    ``via="WALKS"`` returns an exact integer; ``via="DENSITY"`` integrates
    ``E**m`` against the density of a band scan (``report`` is reused when given).
    """
    via = MomentMethod(via)
    if via is MomentMethod.WALKS:
        return closed_walks(matrix, root_label, m)
    if report is None:
        report = scan_bands(matrix, grid_step=grid_step, config=config, root_label=root_label)
    return density_moment(report, m)


# -- closed forms for regular trees ---------------------------------------------------

def regular_closed_form(z, k: int):
    """Truncated Green function of the tree where every vertex has ``k`` children.

    ``(-z + sqrt(z - 2 sqrt k) sqrt(z + 2 sqrt k)) / (2k)``; the product of
    principal roots picks the upper half-plane branch for ``Im z > 0`` and
    the correct real limit on both sides of the band.
    """
    z = np.asarray(z, dtype=np.complex128)
    r = 2.0 * math.sqrt(k)
    return (-z + np.sqrt(z - r) * np.sqrt(z + r)) / (2.0 * k)


def regular_band(k: int) -> Band:
    r = 2.0 * math.sqrt(k)
    return Band(-r, r, 0.0)
