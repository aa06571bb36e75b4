"""Exception types raised across the package."""


class IncsimError(Exception):
    """Base class for all package errors."""


class FitInfeasible(IncsimError):
    """Sample moments fall outside the region an NIG law can reach.

    ``estimate`` carries the moment-only estimate obtained after shrinking the
    skewness into the feasible region.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class EmbeddingFailure(IncsimError):
    pass


class ResourceLimit(IncsimError):
    pass


class Divergent(IncsimError):
    pass


class NotMatchable(IncsimError):
    pass


class DegenerateSeries(IncsimError):
    pass


class LagTooLarge(IncsimError):
    pass


class TargetOutOfRange(IncsimError):
    """No lag reaches the requested level; ``interval`` is the achievable range."""

    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval


class OutOfRange(IncsimError):
    pass


class ConfigError(IncsimError):
    """Invalid run configuration; ``field`` names the offending entry."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field
