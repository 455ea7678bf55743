"""Exception types shared across the package."""


class LcnError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(LcnError):
    """A parametric coordinate lies outside the valid knot range."""


class GeometryError(LcnError):
    """Invalid geometric mapping (zero weight, non-positive Gram determinant, bad net)."""


class RefinementError(LcnError):
    """Invalid partition modification: bad knot insertion, grading parameter or
    refinement-point placement."""


class SingularEvaluationError(LcnError):
    """Kernel evaluated at (or numerically too close to) the singular point."""


class AccuracyError(LcnError):
    """An adaptive integration routine exhausted its subdivision budget.

    Carries the best available estimate and its error estimate.
    """

    def __init__(self, message, best_estimate=None, error_estimate=None):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.error_estimate = error_estimate


class SolveError(LcnError):
    """Dense linear solve failed (singular or numerically rank deficient matrix)."""


class ConfigError(LcnError):
    """Malformed geometry or run-configuration input."""


class ConditionWarning(UserWarning):
    """Emitted when the estimated condition number of a system is above 1e12."""
