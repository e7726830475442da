"""Exception hierarchy for the langworld engine."""

from __future__ import annotations


class LangworldError(Exception):
    """Base class for all engine errors."""


class SchemaError(LangworldError):
    """A document does not match its declared schema."""


class ConsistencyError(LangworldError):
    """A document is schema-valid but internally inconsistent."""


class IdMismatch(LangworldError):
    """Two world states do not share the same object id set."""


class UnknownAgent(LangworldError):
    pass


class UnknownSession(LangworldError):
    pass


class UnknownTask(LangworldError):
    pass


class SamePoint(LangworldError):
    """Relative direction asked for the observer's own cell."""


class OutOfRoom(LangworldError):
    """A point lies outside the room it was queried against."""


class MissingBelief(LangworldError):
    """room_summary rendering requires a belief state."""


class ParseError(LangworldError):
    """Agent text could not be parsed into an action."""

    def __init__(self, message: str, kind: str = "Empty"):
        super().__init__(message)
        # kind: UnknownAction | ArityMismatch | Empty
        self.kind = kind


class InvalidTask(LangworldError):
    pass


class NotEnoughObjects(LangworldError):
    pass


class NoPath(LangworldError):
    """A* could not connect start to goal."""


class Unplannable(LangworldError):
    """The expert planner cannot realize a required state change."""


class DivisionUndefined(LangworldError):
    """Rearrangement scores are undefined when nothing was shuffled."""


class NonPositiveLength(LangworldError):
    pass


class EmptyInput(LangworldError):
    pass


class MissingTemplate(LangworldError):
    pass


class UnboundSlot(LangworldError):
    """A prompt template slot was left unfilled."""


class TrialLimit(LangworldError):
    """No reflection trials remain."""


class BackendError(LangworldError):
    """An LLM backend returned a non-retryable failure."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class Timeout(LangworldError):
    pass


class BudgetExceeded(LangworldError):
    """The per-episode LLM call cap was reached."""


class ConfigError(LangworldError):
    pass


class NoRecipient(LangworldError):
    """chat with no peers, or ask with no human channel bound."""


class HumanTimeout(LangworldError):
    pass


class NotYourTurn(LangworldError):
    pass


class SessionFinished(LangworldError):
    pass


class RoleConflict(LangworldError):
    pass
