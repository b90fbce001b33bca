"""Exception types shared across the package."""


class ZRPError(Exception):
    """Base class for all package errors."""


class DomainError(ZRPError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ResourceError(ZRPError):
    """A computation would exceed the configured resource budget."""


class EmptyPhaseError(ZRPError):
    """The requested phase contains no configurations (e.g. condensed with N <= R)."""


class BadInitialError(ZRPError):
    """Initial state inconsistent with the phase being exited."""


class ConfigError(ZRPError):
    """Invalid experiment configuration (bad field, missing section, ...)."""


class InsufficientDataError(ZRPError):
    """Not enough uncensored data points for a regression."""
