"""Exception types shared across the library."""


class SemisortError(Exception):
    """Base class for all library-specific errors."""


class ConfigurationError(SemisortError, ValueError):
    """Invalid tuning parameters or distribution settings."""


class ContractError(SemisortError, TypeError):
    """An adapter lacks a capability the requested operation needs."""


class InputFormatError(SemisortError, ValueError):
    """A file (record dump, graph, grid spec) is malformed."""
