"""Exception hierarchy shared by all modules."""


class ShiftMetricsError(Exception):
    """Base class for every error raised by this package."""


class DomainError(ShiftMetricsError, ValueError):
    """An argument lies outside the domain of the operation."""


class CapacityError(ShiftMetricsError):
    """The requested enumeration or state space exceeds the configured cap."""


class NotPrimitiveError(ShiftMetricsError):
    """A nonnegative matrix has no strictly positive power within the Wielandt bound."""


class ConvergenceError(ShiftMetricsError):
    """An iterative method hit its iteration cap before reaching tolerance."""

    def __init__(self, message, last_delta=None):
        super().__init__(message)
        self.last_delta = last_delta


class EnvelopeError(ShiftMetricsError):
    """A computed quantity exceeds the envelope that is supposed to dominate it."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or []
