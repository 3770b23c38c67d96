"""Exception types shared across the package."""


class ParchernError(Exception):
    """Base class for every error raised by parchern."""


class RingMismatchError(ParchernError, ValueError):
    """Two classes living on different ring presentations were combined."""


class ValidationError(ParchernError, ValueError):
    """Input data violates a structural invariant (presentation, table, payload)."""


class PreconditionError(ParchernError, ValueError):
    """A formula was called outside its domain."""
