"""Exception types shared across the package.

Every failure mode a caller can reasonably handle gets its own class so that
scripts can catch narrowly.  All of them derive from NodelabError, which in
turn derives from ValueError: code that just wants "bad input" semantics can
catch that.
"""


class NodelabError(ValueError):
    """Base class for all package-specific errors."""


class InvalidResolutionError(NodelabError):
    """Grid resolution too coarse to mean anything (fewer than 3 cells)."""


class UnsupportedModeError(NodelabError):
    """Closed-form mode index not available for the requested domain."""


class OutOfDomainError(NodelabError):
    """A probe ball or rescaling window leaves the domain."""


class IllPosedOperatorError(NodelabError):
    """Coefficients violate ellipticity or sign bounds at assembly time."""


class ConvergenceError(NodelabError):
    """Iterative solver failed to reach the requested tolerance."""

    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class EmptyDomainError(NodelabError):
    """An operation needs a nonempty node set and got none."""


class DegenerateRegionError(NodelabError):
    """Quadratic-form denominator vanishes on the requested region."""


class AllNodalError(NodelabError):
    """Field is zero (to tolerance) everywhere, so no sign domains exist."""


class InfiniteDistanceError(NodelabError):
    """Distance transform requested against an empty complement."""


class UnknownComponentError(NodelabError):
    """Component id not present in a nodal decomposition."""


class UnderResolvedBallError(NodelabError):
    """Probe ball radius too small for the grid spacing."""


class NoNodalSetError(NodelabError):
    """Scan requested on a field with no discrete zero set."""


class PreconditionError(NodelabError):
    """A documented hypothesis of a check does not hold for the input."""


class NoZeroSetError(NodelabError):
    """Poincare-type check needs a nonempty zero set inside the cube."""


class UnsupportedDimensionError(NodelabError):
    """Check only defined in a specific dimension."""


class UndefinedAlphaError(NodelabError):
    """Asymmetry constant undefined: complement is empty."""


class LogDomainError(NodelabError):
    """Power-law fit received non-positive data."""


class InsufficientDataError(NodelabError):
    """Fit needs at least three points."""


class FieldFormatError(NodelabError):
    """Binary field file malformed or version not understood."""


class ConfigError(NodelabError):
    """Experiment configuration invalid or inconsistent."""


class NothingToReportError(NodelabError):
    """Report requested on an empty result store."""
