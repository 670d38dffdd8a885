"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: domain errors are usage errors (2),
resource errors exit with 3, precision and divergence errors with 4.
"""


class PercLabError(Exception):
    """Base class for all library errors."""


class DomainError(PercLabError, ValueError):
    """An argument lies outside the domain of the operation."""


class ResourceError(PercLabError):
    """The request exceeds a configured memory or size budget."""


class PrecisionError(PercLabError):
    """A Monte Carlo decision could not be resolved at the available resolution."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class DivergenceError(PercLabError):
    """An iterative criterion was not met before its step cap."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
