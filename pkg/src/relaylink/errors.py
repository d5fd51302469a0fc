"""Exception hierarchy shared by the analytic and simulation engines."""


class RelayLinkError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(RelayLinkError, ValueError):
    """A parameter is outside its documented domain."""


class FeasibilityError(InvalidParameterError):
    """The requested scheme cannot operate with these dimensions (ZF needs N > M)."""


class UnsupportedProfileError(InvalidParameterError):
    """The formula only covers equal interference powers."""


class ShapeError(InvalidParameterError):
    """Curves being compared do not share an abscissa."""


class NumericalError(RelayLinkError, ArithmeticError):
    """A numerical routine failed to deliver a trustworthy value."""


class QuadratureError(NumericalError):
    """Adaptive quadrature ran out of budget before certifying its tolerance.

    ``result`` carries the best estimate reached.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class ConsistencyError(NumericalError):
    """Two routes to the same quantity disagree beyond tolerance."""


class DegenerateDrawError(NumericalError):
    """A channel realization is degenerate (zero vector, rank deficiency)."""
