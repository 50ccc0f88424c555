class BenchError(Exception):
    """Base class for all errors raised by bgw_bench."""

    pass


class DomainError(BenchError, ValueError):
    """Exception raised for points, grids or parameters outside the valid domain."""

    pass


class EmptyRegionError(DomainError):
    """Exception raised when a region does not intersect the field domain."""

    pass


class SequenceIndexError(BenchError, KeyError):
    """Exception raised when a dyadic sequence misses a required index."""

    pass


class EstimatorError(BenchError, ValueError):
    """Exception raised when a seminorm estimator cannot be evaluated."""

    pass


class PreconditionError(BenchError, ValueError):
    """Exception raised when a precondition of an inequality check is violated."""

    pass


class ConfigError(BenchError):
    """Exception raised for unreadable or invalid experiment configurations."""

    pass
