"""Exception types shared across the package."""


class GraftError(Exception):
    """Base class for all library-specific errors."""


class ZeroSubspace(GraftError):
    """A matrix expected to span a nonzero subspace is numerically zero."""


class ZeroGradient(GraftError):
    """An operation requiring a nonzero gradient vector received zero."""


class DegenerateBatch(GraftError):
    """A batch has no usable structure (e.g. all columns constant)."""


class SingularStart(GraftError):
    """The initial pivot submatrix for a swap sweep is singular."""


class TooLarge(GraftError):
    """An exhaustive-enumeration guard was exceeded."""


class DivergedModel(GraftError):
    """Training produced a non-finite loss or parameters."""


class FitFailed(GraftError):
    """Nonlinear curve fit did not converge from any seed."""


class DegenerateBaseline(GraftError):
    """A normalizing baseline quantity is zero."""
