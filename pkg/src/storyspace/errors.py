"""Exception taxonomy shared by the engine, providers, and service layers."""

from __future__ import annotations


class StorySpaceError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(StorySpaceError):
    """Invalid or incomplete configuration (bad provider block, empty persona, ...)."""

    def __init__(self, message: str, fields: list[str] | None = None) -> None:
        super().__init__(message)
        self.fields = fields or []


class ValidationError(StorySpaceError):
    """Input data violates a structural invariant."""


class CompletenessError(ValidationError):
    """The (stage x modality) document grid has holes."""

    def __init__(self, gaps: list[tuple[int, str]]) -> None:
        described = ", ".join(f"stage {s}/{m}" for s, m in gaps)
        super().__init__(f"knowledge base incomplete: missing {described}")
        self.gaps = gaps


class IngestionError(StorySpaceError):
    """A provider failed while building modality documents."""

    def __init__(self, message: str, timestamp: float | None = None) -> None:
        super().__init__(message)
        self.timestamp = timestamp


class RetrievalError(StorySpaceError):
    """Embedding or index lookup failed."""


class EmptyContextError(RetrievalError):
    """No chunk is eligible for the requested stage; distinct from provider faults."""


class ProviderError(StorySpaceError):
    """A model backend call failed."""

    def __init__(self, message: str, retryable: bool = False) -> None:
        super().__init__(message)
        self.retryable = retryable


class ProtocolError(ProviderError):
    """A remote backend replied with a malformed body."""

    def __init__(self, message: str) -> None:
        super().__init__(message, retryable=False)


class NotFoundError(StorySpaceError):
    """Unknown session, stage, character, or corpus path."""


class BusyError(StorySpaceError):
    """A session round is in flight and queueing is disabled."""


class ContractError(StorySpaceError):
    """A caller broke an internal contract (malformed envelope, empty responses, ...)."""


class PreconditionError(StorySpaceError):
    """Operation requires state that is absent (e.g. an empty memory stream)."""


class TransitionError(StorySpaceError):
    """Undefined (state, event) pair in the scene state machine."""

    def __init__(self, state: str, event: str) -> None:
        super().__init__(f"no transition from state {state!r} on event {event!r}")
        self.state = state
        self.event = event
