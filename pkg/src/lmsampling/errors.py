"""Exception types shared by all modules."""


class LmSamplingError(Exception):
    """Base class for errors raised by the package."""


class DomainError(LmSamplingError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


class NumericError(LmSamplingError, ArithmeticError):
    """A numerical procedure failed to reach its tolerance.

    ``achieved`` holds the error estimate that was reached, when known.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class ResourceError(LmSamplingError, MemoryError):
    """A computation would exceed its memory or size budget."""
