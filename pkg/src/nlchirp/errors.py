"""Exception types raised across the package."""


class ChirpError(Exception):
    """Base class for all package errors."""


class ValidationError(ChirpError, ValueError):
    """A chirp polynomial or profile violates one of its invariants."""


class DomainError(ChirpError, ValueError):
    """An argument lies outside the operation's domain."""


class ContractError(ChirpError, ValueError):
    """Inputs break an operation's preconditions (lengths, bounds)."""


class ConfigError(ChirpError, ValueError):
    """Malformed or inconsistent configuration."""


class ResolutionError(ConfigError):
    """DDS mapping table too coarse for the requested profile."""


class FormatError(ChirpError, ValueError):
    """Malformed IQ file."""


class NotFoundError(ChirpError, LookupError):
    """No packet preamble found in the stream."""


class AmbiguityError(ChirpError):
    """Sync word cannot be attributed to a single registered family."""

    def __init__(self, message, candidates=()):
        super().__init__(message)
        self.candidates = tuple(candidates)


class UnknownFamilyError(AmbiguityError):
    """No registered family explains the sync word."""
