"""Exception types shared across the package."""


class GeodpError(Exception):
    """Base class for all package errors."""


class ContractError(GeodpError):
    """Raised when operands disagree on manifold or base point."""


class DomainError(GeodpError, ValueError):
    """Raised when an input lies outside the domain of an operation."""


class AlignmentError(DomainError):
    """Raised when two shapes are orthogonal and no optimal rotation exists."""


class ConditioningError(DomainError):
    """Raised when an SPD matrix is too close to singular."""


class ConfigError(GeodpError, ValueError):
    """Raised for invalid experiment or sampler configuration."""


class FormatError(GeodpError, ValueError):
    """Raised for malformed input files."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmptyInputError(FormatError):
    """Raised when an input file holds no records."""
