"""Brute-force checks that share no code path with the fixed-point engine.

* Dirichlet Green functions: the recursion ``-1/G_x = z - v(x) + sum of
  children`` run bottom-up on an explicit finite tree, with empty child
  sums at the leaves.
* Closed-walk counts at the root by first-return decomposition, in exact
  integer arithmetic.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InsufficientDepth, PreconditionError, ValidationFailure
from .recursion import DEFAULT_CONFIG, SolverConfig, fixed_point
from .substitution import ConeTree, SubstitutionMatrix

JITTER = 0.10
# gaps below this are at float64 resolution and exempt from the monotonicity test
GAP_FLOOR = 1e-13


@dataclass
class DirichletResult:
    depth: int
    z: complex
    values: np.ndarray
    tree: ConeTree = field(repr=False)

    @property
    def root(self) -> complex:
        return complex(self.values[0])


def dirichlet_green(tree: ConeTree, z: complex, potential=None) -> DirichletResult:
    """Green functions of the finite tree with a Dirichlet cutoff below the last sphere.

    ``potential`` is an optional radial potential; the vertex ``x`` gets
    ``v(x) = coupling * w_{a(x)}(|x|)``.
    """
    z = complex(z)
    if z.imag <= 0:
        raise PreconditionError("dirichlet_green needs Im z > 0")
    n = len(tree)
    shift = np.full(n, z, dtype=np.complex128)
    if potential is not None:
        v = potential.values(tree.depth + 1)
        shift -= v[tree.spheres, tree.labels]
    G = np.empty(n, dtype=np.complex128)
    child_sum = np.zeros(n, dtype=np.complex128)
    for depth in range(tree.depth, -1, -1):
        ids = tree.sphere(depth)
        G[ids] = -1.0 / (shift[ids] + child_sum[ids])
        if depth > 0:
            np.add.at(child_sum, tree.parents[ids], G[ids])
    return DirichletResult(tree.depth, z, G, tree)


def dirichlet_table(matrix: SubstitutionMatrix, z, depth: int) -> np.ndarray:
    """Memoized zero-potential Dirichlet values.

    ``table[..., d, j]`` is the root value of a depth-``d`` tree with root
    label ``j``; cost is ``O(depth * N**2)`` instead of the tree size.
    """
    z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
    if np.any(z.imag <= 0):
        raise PreconditionError("dirichlet_table needs Im z > 0")
    return kernels.dirichlet_table(z, matrix.as_float(), depth)


# -- walks ------------------------------------------------------------------

def walk_moments(tree: ConeTree, m_max: int) -> list:
    """Closed-walk counts ``mu_0 .. mu_m_max`` at the root of ``tree``.

    Uses the first-return decomposition

        F_x(m) = sum_{y child of x} sum_l F_y(l) F_x(m - l - 2)

    where ``F_x`` counts closed walks at ``x`` inside the cone of ``x``.

    Raises
    ------
    InsufficientDepth
        If a walk of length ``m_max`` could leave the truncated tree.
    """
    if m_max < 0:
        raise PreconditionError("m_max must be nonnegative")
    if 2 * tree.depth < m_max:
        raise InsufficientDepth(
            f"walks of length {m_max} need depth {(m_max + 1) // 2}, tree has {tree.depth}")
    F = {}
    for depth in range(tree.depth, -1, -1):
        length = m_max - 2 * depth
        if length < 0:
            continue
        for x in tree.sphere(depth):
            x = int(x)
            # S[l] = sum over children of F_y(l); children live on the next sphere
            S = [0] * max(length - 1, 0)
            for y in tree.children(x):
                Fy = F.pop(int(y), None)
                if Fy is None:
                    continue
                for l in range(min(len(S), len(Fy))):
                    S[l] += Fy[l]
            f = [0] * (length + 1)
            f[0] = 1
            for m in range(2, length + 1):
                f[m] = sum(S[l] * f[m - l - 2] for l in range(m - 1))
            F[x] = f
    return F[0]


# -- cross validation --------------------------------------------------------

@dataclass
class CrossValidationEntry:
    z: complex
    depths: list
    gaps: list
    monotone: bool
    final_gap: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "z": [self.z.real, self.z.imag],
            "depths": list(self.depths),
            "gaps": [float(g) for g in self.gaps],
            "monotone": self.monotone,
            "final_gap": self.final_gap,
            "verdict": "PASS" if self.passed else "FAIL",
        }


@dataclass
class CrossValidationReport:
    fingerprint: str
    tolerance: float
    entries: list

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def offenders(self) -> list:
        return [(e.z, e.depths[-1]) for e in self.entries if not e.passed]

    def to_dict(self) -> dict:
        return {
            "fingerprint": self.fingerprint,
            "tolerance": self.tolerance,
            "verdict": "PASS" if self.passed else "FAIL",
            "entries": [e.to_dict() for e in self.entries],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def is_monotone(gaps, jitter=JITTER, floor=GAP_FLOOR) -> bool:
    """Non-increasing up to ``jitter`` relative growth; gaps below ``floor`` are ignored."""
    return all(b <= (1.0 + jitter) * a or b <= floor for a, b in zip(gaps, gaps[1:]))


def cross_validate(matrix: SubstitutionMatrix, z_samples, depth_ladder=(5, 10, 20, 40),
                   tolerance: float = 1e-8, config: SolverConfig = DEFAULT_CONFIG,
                   raise_on_failure: bool = True) -> CrossValidationReport:
    """Compare Dirichlet values along ``depth_ladder`` with the fixed point.

    The gap at depth ``D`` is ``max_j |Gamma_j^D(z) - Gamma_j(z)|`` over all
    labels. A sample passes when the gaps shrink (up to 10% jitter) and the
    last one is below ``tolerance``.

    Raises
    ------
    ValidationFailure
        Listing the failing ``(z, D)`` pairs; the full report is attached.
    """
    ladder = sorted(int(d) for d in depth_ladder)
    if not ladder or ladder[0] < 0:
        raise PreconditionError("depth ladder must hold nonnegative depths")
    z_samples = np.atleast_1d(np.asarray(z_samples, dtype=np.complex128))
    table = dirichlet_table(matrix, z_samples, ladder[-1])
    entries = []
    for i, z in enumerate(z_samples):
        h = fixed_point(complex(z), matrix, config).values
        gaps = [float(np.max(np.abs(table[i, d] - h))) for d in ladder]
        mono = is_monotone(gaps)
        entries.append(CrossValidationEntry(complex(z), ladder, gaps, mono, gaps[-1],
                                            mono and gaps[-1] < tolerance))
    report = CrossValidationReport(matrix.fingerprint(), tolerance, entries)
    if raise_on_failure and not report.passed:
        raise ValidationFailure(
            f"{len(report.offenders)} of {len(entries)} samples failed cross-validation",
            report=report, offenders=report.offenders)
    return report
