"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class SingularityError(ValueError):
    """Evaluation requested at a singular point of a closed form."""


class TruncationError(RuntimeError):
    """A series could not reach the requested tolerance within its term cap."""


class ConfigurationError(ValueError):
    """Inconsistent geometric or experiment configuration."""


class ResolutionError(ValueError):
    """A sampled function is too coarse for the requested operation."""


class SolverError(RuntimeError):
    """Eigen or linear solve failed, or did not meet its residual contract."""


class FitError(ValueError):
    """A rate fit was requested on degenerate data."""
