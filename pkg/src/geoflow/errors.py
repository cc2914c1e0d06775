"""Exception hierarchy shared by all geoflow modules."""


class GeoflowError(Exception):
    """Base class for all geoflow errors."""


class DegenerateGeometryError(GeoflowError):
    """Curve or grid input is geometrically degenerate (zero-length edge, coincident pairs)."""


class StepSizeError(GeoflowError):
    """Requested time step violates the stability (CFL) bound."""


class CurvatureOverflowError(GeoflowError):
    """Curvature has grown beyond the resolvable scale; extinction is imminent.

    Raised by flow steppers as a signal, caught by run drivers and recorded
    as normal extinction-type termination.
    """


class BlowUpError(GeoflowError):
    """A field value became non-finite during stepping."""


class PositivityError(GeoflowError):
    """An operation requiring strictly positive data received a non-positive value."""


class DomainError(GeoflowError):
    """Argument outside the mathematical domain of the operation (e.g. time past extinction)."""


class BiasError(GeoflowError):
    """Estimator failed the unbiasedness precondition; carries the measured bias."""

    def __init__(self, message, bias=None):
        super().__init__(message)
        self.bias = bias


class SingularMatrixError(GeoflowError):
    """Matrix that must be inverted is singular to working precision."""


class NonConvergenceError(GeoflowError):
    """Iterative solver exhausted its budget; carries the residual history."""

    def __init__(self, message, history=None, best=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []
        self.best = best


class MatchingError(GeoflowError):
    """Node matching between consecutive flow states failed (displacement too large)."""


class ConfigError(GeoflowError):
    """Scenario configuration is invalid; names the offending field."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
