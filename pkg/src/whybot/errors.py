"""Exception types shared across the package."""

from __future__ import annotations


class WhybotError(Exception):
    """Base class for all errors raised by this package."""


class ScenarioError(WhybotError):
    """Scenario document failed validation.

    ``path`` points at the offending field, e.g. ``occluders[1].shape.radius``.
    """

    def __init__(self, message: str, path: str = "") -> None:
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class TraceError(WhybotError):
    """Base class for trace storage and replay errors."""


class TickOrderError(TraceError):
    """Appended record does not advance the tick sequence."""


class TraceFormatError(TraceError):
    """Trace file is structurally invalid. Carries the 1-based line number."""

    def __init__(self, message: str, line: int = 0) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class EnvelopeViolation(TraceError):
    """Parameter envelope broken: a record or header does not match the
    session's immutable safety parameters."""


class QueryError(WhybotError):
    """Query text or structured query could not be parsed.

    ``position`` is the character offset of the offending token; ``hint``
    lists accepted forms.
    """

    def __init__(self, message: str, position: int = 0, hint: str = "") -> None:
        self.position = position
        self.hint = hint
        full = f"{message} (at position {position})"
        if hint:
            full += f"; {hint}"
        super().__init__(full)


class UnknownTickError(WhybotError):
    """Requested tick has no decision record."""


class DeltaError(WhybotError):
    """A hypothetical state change could not be applied."""


class UnknownReferentError(DeltaError):
    """Delta names an entity that does not exist, or an anaphor that cannot
    be resolved from dialogue memory."""


class ConflictingDeltasError(DeltaError):
    """Two deltas in one what-if both place the worker absolutely."""


class UnknownSessionError(WhybotError):
    """Session id not found in the registry."""


class SessionStateError(WhybotError):
    """Operation not valid in the session's current run status (e.g. a
    command after the session finished)."""
