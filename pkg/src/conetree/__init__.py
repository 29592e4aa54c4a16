"""Spectral theory of trees of finite cone type, numerically.

Modules
-------
substitution
    Substitution matrices, validation, and finite tree generation.
halfplane
    Points of the upper half-plane and their hyperbolic geometry.
recursion
    The recursion map, fixed points and boundary values.
spectrum
    Bands, densities, vertex Green functions and moments.
oracle
    Brute-force cross-checks on explicit finite trees.
"""
__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AlphabetMismatch,
    ConeTreeError,
    DegenerateDifference,
    DepthOverflow,
    InsufficientDepth,
    M1Violation,
    MatrixValidationError,
    NoConvergence,
    NotAFixedPoint,
    NotPrimitive,
    OneDimensional,
    PreconditionError,
    UndecidedEnergy,
    ValidationFailure,
)
from .halfplane import HalfPlaneVector, dist, gamma, gamma_A  # noqa: E402
from .potential import RadialPotential  # noqa: E402
from .recursion import (  # noqa: E402
    Classification,
    SolverConfig,
    boundary_value,
    contraction_diagnostics,
    fixed_point,
    green_with_potential,
    phi,
)
from .spectrum import density, moment, scan_bands, sigma0_test, vertex_green  # noqa: E402
from .substitution import ConeTree, SubstitutionMatrix, generate_tree, validate  # noqa: E402
from .oracle import cross_validate, dirichlet_green, walk_moments  # noqa: E402
