class NumericsError(Exception):
    """Base class for failures inside the numerical kernel."""


class DomainError(NumericsError, ValueError):
    """An argument lies outside the domain an operation supports."""


class NonConvergenceError(NumericsError):
    """A series or iteration hit its budget before its stopping rule fired."""


class QuadratureBudgetError(NumericsError):
    def __init__(self, message, value=None, error_estimate=None, subdivisions=0):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate
        self.subdivisions = subdivisions


class NonFiniteSampleError(NumericsError):
    def __init__(self, message, abscissa=None):
        super().__init__(message)
        self.abscissa = abscissa


class GridTooCoarseError(NumericsError, ValueError):
    pass
