"""Agent runtime: shared message pool, responder ranking, character rounds.

One round works in two steps: the retrieval agent embeds the user query,
pulls stage-scoped context, and publishes a single pool (context + query +
instruction); then every character agent answers from that identical pool
plus its own persona. The pool is broadcast, never per-character, so all
characters in a round provably saw the same context.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING

import numpy as np

from .errors import ConfigurationError, EmptyContextError, ProviderError
from .prompting import PromptEnvelope
from .providers import content_digest
from .retrieval import ChunkIndex, ContextBundle, empty_bundle, retrieve

if TYPE_CHECKING:
    from .providers import ChatProvider, EmbedProvider
    from .sessions import InteractionSpace

QUERY_KINDS = ("in_story", "hypothetical", "personal_share")

# Editable defaults; tune freely, nothing downstream parses the wording.
DIRECTIVE_TEMPLATES = {
    "in_story": (
        "Answer as yourself, from inside the story as you know it so far. "
        "Ground your reply in the shared context; do not reveal events you have "
        "not yet lived."
    ),
    "hypothetical": (
        "The visitor proposes something that did not happen. Imagine it "
        "honestly from where you stand in the story, and say how you would act."
    ),
    "personal_share": (
        "The visitor is sharing something personal. Reply warmly as yourself, "
        "drawing on your own experiences in the story."
    ),
}

_HYPOTHETICAL_MARKERS = ("what if", "suppose", "imagine", "if you could", "would you have")
_PERSONAL_PRONOUNS = frozenset(
    ("i", "me", "my", "mine", "we", "us", "our", "you", "your", "yours")
)
_WORD_RE = re.compile(r"[A-Za-z']+")


@dataclass(frozen=True)
class CharacterProfile:
    """Persona definition; stage overlays let the persona drift per stage."""

    name: str
    persona: str
    stage_overlays: dict[int, str] = field(default_factory=dict)
    voice_hints: str = ""

    def persona_at(self, stage: int) -> str:
        overlay = self.stage_overlays.get(stage)
        return f"{self.persona}\n{overlay}" if overlay else self.persona


@dataclass(frozen=True)
class AgentInstruction:
    directive: str
    query_kind: str
    ordering_hint: str | None = None


@dataclass(frozen=True)
class SharedMessagePool:
    """The one message broadcast to every character agent in a round."""

    stage: int
    context: ContextBundle
    query: str
    instruction: AgentInstruction


@dataclass(frozen=True)
class CharacterResponse:
    character: str
    text: str
    stage: int
    round_id: int
    context_digest: str
    context_absent: bool = False
    failed: bool = False
    error: str = ""


def classify_query(text: str) -> str:
    """Rule-based query kind; counterfactual markers win over pronouns."""
    lowered = text.lower()
    if any(marker in lowered for marker in _HYPOTHETICAL_MARKERS):
        return "hypothetical"
    words = set(w.lower() for w in _WORD_RE.findall(text))
    if words & _PERSONAL_PRONOUNS:
        return "personal_share"
    return "in_story"


def build_instruction(query: str, first_responder: str | None = None) -> AgentInstruction:
    kind = classify_query(query)
    return AgentInstruction(DIRECTIVE_TEMPLATES[kind], kind, ordering_hint=first_responder)


def build_prompt(pool: SharedMessagePool, profile: CharacterProfile) -> PromptEnvelope:
    """Compose the four-segment envelope for one character."""
    if not profile.persona:
        raise ConfigurationError(f"character {profile.name!r} has an empty persona")
    return PromptEnvelope.build(
        context=pool.context.text,
        query=pool.query,
        persona=profile.persona_at(pool.stage),
        instruction=pool.instruction.directive,
    )


def _name_mentioned(name: str, query: str) -> bool:
    return re.search(rf"\b{re.escape(name)}\b", query, re.IGNORECASE) is not None


def rank_responders(query: str, roster: list[CharacterProfile],
                    embedder: "EmbedProvider | None" = None) -> list[CharacterProfile]:
    """Order characters: name-addressed first, then persona similarity, then roster order."""
    if not roster:
        raise ConfigurationError("roster is empty")
    if embedder is not None:
        qvec = embedder.embed(query)
        sims = [float(np.dot(qvec, embedder.embed(p.persona))) for p in roster]
    else:
        sims = [0.0] * len(roster)
    keyed = sorted(
        range(len(roster)),
        key=lambda i: (0 if _name_mentioned(roster[i].name, query) else 1, -sims[i], i),
    )
    return [roster[i] for i in keyed]


def pool_digest(bundle: ContextBundle) -> str:
    """Content fingerprint shared by every response generated from one pool."""
    return content_digest(bundle.text)


def respond_all(space: "InteractionSpace", query: str, chat: "ChatProvider", *,
                embedder: "EmbedProvider", index: ChunkIndex,
                profiles: dict[str, CharacterProfile], top_k: int = 4) -> list[CharacterResponse]:
    """Run one two-step round: build the pool, then answer per character.

    A per-character provider failure yields a failed response for that
    character only; the others are untouched. An empty retrieval context
    downgrades the round to persona-only answers flagged context_absent.
    """
    roster = [profiles[name] for name in space.roster]
    if not roster:
        raise ConfigurationError("space has no characters to respond")
    ranked = rank_responders(query, roster, embedder)
    instruction = build_instruction(query, first_responder=ranked[0].name)
    try:
        bundle = retrieve(query, space.stage, top_k, index, embedder)
        absent = False
    except EmptyContextError:
        bundle = empty_bundle(space.stage)
        absent = True
    pool = SharedMessagePool(stage=space.stage, context=bundle, query=query,
                             instruction=instruction)
    digest = pool_digest(bundle)
    round_id = space.stream.next_seq
    responses: list[CharacterResponse] = []
    for profile in ranked:
        envelope = build_prompt(pool, profile)
        try:
            text = chat.complete(envelope)
            responses.append(CharacterResponse(
                character=profile.name, text=text, stage=space.stage,
                round_id=round_id, context_digest=digest, context_absent=absent,
            ))
        except ProviderError as exc:
            responses.append(CharacterResponse(
                character=profile.name, text="", stage=space.stage,
                round_id=round_id, context_digest=digest, context_absent=absent,
                failed=True, error=str(exc),
            ))
    return responses


# ---------------------------------------------------------------------------
# Profile files
# ---------------------------------------------------------------------------


def profiles_from_manifest(manifest) -> dict[str, CharacterProfile]:
    """Default profiles: persona seeds straight from the story manifest."""
    out = {}
    for c in manifest.characters:
        persona = c.persona or f"You are {c.name}, a character in this story."
        out[c.name] = CharacterProfile(name=c.name, persona=persona)
    return out


def load_profiles(path, manifest) -> dict[str, CharacterProfile]:
    """Profiles from a JSON file; names must match manifest characters."""
    data = json.loads(path.read_text(encoding="utf-8"))
    known = set(manifest.character_names())
    profiles = profiles_from_manifest(manifest)
    for row in data:
        name = row["name"]
        if name not in known:
            raise ConfigurationError(f"profile {name!r} does not match any manifest character")
        overlays = {int(k): v for k, v in row.get("stage_overlays", {}).items()}
        base = profiles[name]
        profiles[name] = replace(
            base,
            persona=row.get("persona", base.persona),
            stage_overlays=overlays,
            voice_hints=row.get("voice_hints", ""),
        )
    return profiles
