"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid or unreadable configuration."""


class DomainError(ValueError):
    """Argument outside the domain of a model formula."""


class ModelViolationError(RuntimeError):
    """A physical invariant of the model does not hold (e.g. net power <= 0)."""
