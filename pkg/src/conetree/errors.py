"""Exception hierarchy.

Every error raised on purpose by the library derives from :class:`ConeTreeError`
so callers (the CLI in particular) can map families of failures onto exit codes.
"""


class ConeTreeError(Exception):
    """Base class for all library errors."""


class MatrixValidationError(ConeTreeError, ValueError):
    """A substitution matrix failed one of the model assumptions."""

    assumption = "format"


class MatrixFormatError(MatrixValidationError):
    """The input is not a square matrix of nonnegative integers."""


class M1Violation(MatrixValidationError):
    """Some diagonal entry is zero."""

    assumption = "M1"


class NotPrimitive(MatrixValidationError):
    """No power of the matrix up to the Wielandt bound is entrywise positive."""

    assumption = "M2"


class OneDimensional(MatrixValidationError):
    """Single label with a single child: the tree is a half-line."""

    assumption = "non-one-dimensional"


class DepthOverflow(ConeTreeError):
    """Requested tree truncation would exceed the vertex cap."""


class AlphabetMismatch(ConeTreeError, ValueError):
    """Two label-indexed vectors are defined over different alphabets."""


class DegenerateDifference(ConeTreeError, ValueError):
    """An angle between difference vectors was requested for a zero difference."""


class NoConvergence(ConeTreeError):
    """An iterative solver exhausted its budget.

    ``energy`` is attached when the failure happened inside an energy scan.
    """

    def __init__(self, message, energy=None):
        super().__init__(message)
        self.energy = energy


class NotAFixedPoint(ConeTreeError, ValueError):
    """The supplied vector is not a fixed point of the recursion map."""


class UndecidedEnergy(ConeTreeError):
    """The boundary-value classifier could not decide whether E is in the spectrum."""


class PreconditionError(ConeTreeError, ValueError):
    """An operation was called outside its documented domain."""


class InsufficientDepth(ConeTreeError, ValueError):
    """A finite tree is too shallow for the requested walk length."""


class ValidationFailure(ConeTreeError):
    """Cross-validation between the solver and the oracle failed.

    ``report`` holds the full cross-validation report, ``offenders`` the
    ``(z, depth)`` pairs responsible.
    """

    def __init__(self, message, report=None, offenders=()):
        super().__init__(message)
        self.report = report
        self.offenders = list(offenders)
