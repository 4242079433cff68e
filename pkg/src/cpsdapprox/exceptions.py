"""Exception hierarchy shared by every module."""


class CpsdError(Exception):
    """Base class for all errors raised by the package."""


class DimensionError(CpsdError, ValueError):
    pass


class NotPsdError(CpsdError, ValueError):
    pass


class EpsilonRangeError(CpsdError, ValueError):
    """Raised when an accuracy parameter lies outside the range where the bounds are proved."""


class ConvergenceError(CpsdError, RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class RetryExhaustedError(CpsdError, RuntimeError):
    """A randomized construction failed within its retry budget.

    ``best`` holds the best attempt seen, for diagnostics.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class CompressionError(CpsdError, RuntimeError):
    pass


class BoundViolationError(CpsdError, RuntimeError):
    """A runtime check of a proved bound failed (indicates a numerical problem)."""
