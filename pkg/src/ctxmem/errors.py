"""Exception taxonomy shared across the engine.

The HTTP layer maps these onto ApiError codes; everything below the
service boundary raises these directly.
"""


class CtxmemError(Exception):
    """Base class for all engine errors."""


class ArgumentError(CtxmemError, ValueError):
    """Caller passed a value that violates an operation precondition."""


class IntegrityError(CtxmemError):
    """A referenced id does not exist in the tree/session."""


class ConflictError(CtxmemError):
    """State conflict: duplicate id, double-submitted choice, seq gap."""


class ValidationError(CtxmemError):
    """Structured output (plan, analysis, config) failed validation."""


class FormatError(CtxmemError):
    """Input bytes are not in a supported format (e.g. undecodable image)."""


class ProviderError(CtxmemError):
    """Analyzer transport failure; safe to retry."""

    retryable = True


class StorageError(CtxmemError):
    """I/O failure in the session store."""


class ReplayError(CtxmemError):
    """Event log replay failed; carries the offending sequence number."""

    def __init__(self, message: str, seq: int | None = None):
        super().__init__(message)
        self.seq = seq
