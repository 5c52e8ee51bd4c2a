"""Exception types shared across the toolkit."""

from __future__ import annotations


class KgprobeError(Exception):
    """Base class for all toolkit errors."""


class SchemaValidationError(KgprobeError):
    """A problem record or schema violates a structural requirement.

    ``field`` names the offending field when one can be identified.
    """

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class ConditionError(KgprobeError):
    """A condition tag failed to parse or cannot be applied."""


class ConvergenceError(KgprobeError):
    """An iterative solver hit its iteration cap; carries the last delta."""

    def __init__(self, message: str, last_delta: float):
        super().__init__(message)
        self.last_delta = last_delta


class UnembeddableError(KgprobeError):
    """Text has no content words to embed."""


class BackendError(KgprobeError):
    """A generation or embedding backend failed.

    ``retryable`` marks transport-level failures worth retrying; parse
    failures carry the raw response body in ``raw``.
    """

    def __init__(self, message: str, retryable: bool = False, raw: str | None = None):
        super().__init__(message)
        self.retryable = retryable
        self.raw = raw


class DegenerateStatisticError(KgprobeError):
    """A statistic is undefined on the given data (e.g. zero denominator)."""
