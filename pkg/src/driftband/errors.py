"""Exception types shared across the package."""


class DriftbandError(Exception):
    """Base class for all package-specific errors."""


class DomainError(DriftbandError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigurationError(DomainError):
    """Invalid configuration: bad field values, schema violations, mismatched shapes."""


class ProtocolError(DriftbandError, RuntimeError):
    """Sequential-interface misuse, e.g. observe() without a preceding choose()."""


class InternalError(DriftbandError, RuntimeError):
    """An internal invariant broke (for instance a Gram matrix lost definiteness)."""
