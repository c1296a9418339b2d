"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: DomainError -> 2,
ConsistencyError -> 3, ManifestMismatchError -> 4.
"""


class DivwinError(Exception):
    """Base class for all package errors."""


class DomainError(DivwinError):
    """An argument is outside the operation's domain or violates a precondition."""


class OutOfRangeError(DomainError):
    """A predictor was requested outside the parameter range where it is asserted."""


class ConfigError(DomainError):
    """A run configuration is unusable (detected before any work starts)."""


class ConsistencyError(DivwinError):
    """An internal cross-check failed; results must not be reported."""


class ManifestMismatchError(DivwinError):
    """A checkpoint belongs to a different run manifest and cannot be resumed."""
