"""Trans-temporal sharing: character discussion, focus/mood, sharing cards.

This is the decentralized path: after a round, characters talk among
themselves using nothing but the session's dialogue memories — no retrieval,
no index, no embeddings. What they conclude about the visitor's focus and
mood drives a proactive sharing card (story-world text plus an image prompt).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable

from .agents import CharacterProfile, rank_responders
from .errors import PreconditionError, ProviderError
from .prompting import PromptEnvelope
from .providers import content_digest, tokenize

if TYPE_CHECKING:
    from .providers import ChatProvider, ImageProvider
    from .sessions import InteractionSpace, MemoryEntry

MOODS = ("curious", "joyful", "anxious", "sad", "neutral", "excited")

MOOD_LEXICON: dict[str, frozenset[str]] = {
    "curious": frozenset("wonder wondering curious mystery why secret".split()),
    "joyful": frozenset("happy glad joy love lovely wonderful delighted celebrate laugh".split()),
    "anxious": frozenset("worried worry afraid scared fear nervous danger anxious dread".split()),
    "sad": frozenset("sad miss missing lonely lost cry sorrow grief mourn".split()),
    "excited": frozenset("excited thrilled amazing incredible eager adventure race".split()),
}

# Small canonical-topic map; raw keywords fill in everything it does not cover.
TOPIC_LEXICON: dict[str, frozenset[str]] = {
    "food": frozenset("dinner supper lunch breakfast meal eat eating cook cooking recipe recipes hungry feast".split()),
    "family": frozenset("family mother father sister brother parents home".split()),
    "friendship": frozenset("friend friends friendship loyal together".split()),
    "magic": frozenset("magic magical spell spells enchanted charm".split()),
    "travel": frozenset("journey travel road path voyage map".split()),
    "school": frozenset("school lesson lessons study teacher learn".split()),
}

_MAX_TOPICS = 5

DISCUSSION_QUESTION = (
    "Between ourselves: what is our visitor focused on, and what mood are they in?"
)
DISCUSSION_DIRECTIVE = (
    "Speak briefly to your fellow characters. Use only what was said in the "
    "chat so far; do not consult anything else."
)
SHARING_DIRECTIVE = (
    "Offer the visitor one small thing from the story world that fits what "
    "they care about right now. Describe it so it could be drawn."
)

_WORD_RE = re.compile(r"[A-Za-z']+")


@dataclass(frozen=True)
class DiscussionTranscript:
    rounds: tuple[tuple[str, str], ...]
    mode: str  # single_round | multi_round


@dataclass(frozen=True)
class FocusMood:
    focus_topics: tuple[str, ...]
    mood: str
    confidence: float


@dataclass(frozen=True)
class SharingCard:
    sharer: str
    text: str
    image_prompt: str
    derived_from: FocusMood
    stage: int
    trigger_seq: int
    image_ref: str = ""
    flags: tuple[str, ...] = ()

    def to_record(self) -> dict:
        """Flat wire shape for the sharing feed."""
        return {
            "sharer": self.sharer,
            "text": self.text,
            "image_prompt": self.image_prompt,
            "image_ref": self.image_ref,
            "focus_topics": list(self.derived_from.focus_topics),
            "mood": self.derived_from.mood,
            "confidence": self.derived_from.confidence,
            "stage": self.stage,
            "trigger_seq": self.trigger_seq,
            "flags": list(self.flags),
        }


def render_memory_evidence(entries: Iterable["MemoryEntry"]) -> str:
    """Dialogue memories as plain text — the only context discussions may see."""
    lines = []
    for e in entries:
        lines.append(f"visitor: {e.query}")
        for r in e.responses:
            lines.append(f"{r.character}: {r.text}")
    return "\n".join(lines)


def _scoped_entries(entries: tuple["MemoryEntry", ...], mode: str) -> tuple["MemoryEntry", ...]:
    if mode == "single_round":
        return entries[-1:]
    return entries


def run_discussion(space: "InteractionSpace", rounds: int, chat: "ChatProvider", *,
                   profiles: dict[str, CharacterProfile],
                   entries: tuple["MemoryEntry", ...] | None = None) -> DiscussionTranscript:
    """`rounds` round-robin passes over the roster, dialogue memories only.

    Speaker order is the lexical responder ranking of the latest query (no
    embedder — this path must not touch retrieval machinery at all).
    """
    if rounds < 1:
        raise ValueError(f"rounds must be positive, got {rounds}")
    entries = space.stream.entries if entries is None else entries
    if not entries:
        raise PreconditionError("discussion requires a non-empty memory stream")
    mode = "single_round" if rounds == 1 else "multi_round"
    scoped = _scoped_entries(entries, mode)
    evidence = render_memory_evidence(scoped)
    roster = [profiles[name] for name in space.roster]
    order = rank_responders(entries[-1].query, roster, embedder=None)
    turns: list[tuple[str, str]] = []
    for _ in range(rounds):
        for profile in order:
            prior = "\n".join(f"{speaker}: {text}" for speaker, text in turns)
            directive = DISCUSSION_DIRECTIVE if not prior else (
                f"{DISCUSSION_DIRECTIVE}\nSo far:\n{prior}"
            )
            envelope = PromptEnvelope.build(
                context=evidence,
                query=DISCUSSION_QUESTION,
                persona=profile.persona_at(space.stage),
                instruction=directive,
            )
            try:
                text = chat.complete(envelope)
            except ProviderError as exc:
                return DiscussionTranscript(rounds=tuple(turns) + ((profile.name, f"<failed: {exc}>"),),
                                            mode=mode)
            turns.append((profile.name, text))
    return DiscussionTranscript(rounds=tuple(turns), mode=mode)


def identify_focus_mood(source, mode: str = "multi_round") -> FocusMood:
    """Extract focus topics and a mood label from queries (or discussion turns).

    single_round scopes to the latest entry; multi_round reads the whole
    stream. Topics are canonical lexicon hits first, then leading raw
    keywords; mood is the best lexicon match, neutral when nothing matches.
    """
    texts = _evidence_texts(source, mode)
    if not texts:
        raise PreconditionError("focus/mood identification requires non-empty input")
    tokens: list[str] = []
    for text in texts:
        tokens.extend(tokenize(text))
    topics = _extract_topics(tokens)
    mood, confidence = _extract_mood(tokens)
    return FocusMood(focus_topics=tuple(topics), mood=mood, confidence=confidence)


def _evidence_texts(source, mode: str) -> list[str]:
    if isinstance(source, DiscussionTranscript):
        return [text for _, text in source.rounds]
    entries = getattr(source, "entries", source)
    scoped = _scoped_entries(tuple(entries), mode)
    return [e.query for e in scoped]


_TOPIC_STOP = frozenset(
    """a an the and or but is are was were do does did to of in on at for with
    from as it this that what who when where why how will would could should
    can may i me my we us our you your he she they them his her their not no
    yes so tell about think really something anything very much""".split()
)


def _extract_topics(tokens: list[str]) -> list[str]:
    present = set(tokens)
    topics = [topic for topic, triggers in TOPIC_LEXICON.items() if present & triggers]
    covered = set()
    for topic in topics:
        covered |= TOPIC_LEXICON[topic]
    counts: dict[str, int] = {}
    first_seen: dict[str, int] = {}
    for i, tok in enumerate(tokens):
        if tok in _TOPIC_STOP or tok in covered or len(tok) < 3:
            continue
        counts[tok] = counts.get(tok, 0) + 1
        first_seen.setdefault(tok, i)
    raw = sorted(counts, key=lambda t: (-counts[t], first_seen[t]))
    return (topics + [t for t in raw if t not in topics])[:_MAX_TOPICS]


def _extract_mood(tokens: list[str]) -> tuple[str, float]:
    hits = {mood: sum(1 for t in tokens if t in lex) for mood, lex in MOOD_LEXICON.items()}
    total = sum(hits.values())
    if total == 0:
        return "neutral", 0.5
    # max() keeps the first maximal mood, so ties resolve in MOODS order.
    best = max((m for m in MOODS if m in MOOD_LEXICON), key=lambda m: hits[m])
    return best, hits[best] / total


def make_sharing_card(fm: FocusMood, space: "InteractionSpace", chat: "ChatProvider", *,
                      profiles: dict[str, CharacterProfile],
                      image: "ImageProvider | None" = None,
                      entries: tuple["MemoryEntry", ...] | None = None) -> SharingCard:
    """Compose the proactive share; degrades to templates, never fails the round."""
    entries = space.stream.entries if entries is None else entries
    if not entries:
        raise PreconditionError("sharing requires a completed round")
    last = entries[-1]
    sharer = last.responses[0].character if last.responses else space.roster[0]
    profile = profiles[sharer]
    topics_text = ", ".join(fm.focus_topics)
    flags: list[str] = []
    if fm.focus_topics:
        query = (f"Share one small thing from the story world about {topics_text}. "
                 f"The visitor mood seems {fm.mood}.")
        image_prompt = f"{topics_text}, {_stage_phrase(space)}, storybook illustration"
    else:
        query = (f"Share one small thing from where the story stands now. "
                 f"The visitor mood seems {fm.mood}.")
        image_prompt = f"{_stage_phrase(space)}, storybook illustration"
    envelope = PromptEnvelope.build(
        context=render_memory_evidence(entries[-1:]),
        query=query,
        persona=profile.persona_at(space.stage),
        instruction=SHARING_DIRECTIVE,
    )
    try:
        text = chat.complete(envelope)
    except ProviderError:
        text = (f"{sharer} quietly offers a keepsake tied to {topics_text or 'the tale so far'}.")
        flags.append("chat_fallback")
    if image is not None:
        try:
            image_ref = image.generate(image_prompt)
        except ProviderError:
            image_ref = f"img-{content_digest(image_prompt)}"
            flags.append("image_fallback")
    else:
        image_ref = f"img-{content_digest(image_prompt)}"
    return SharingCard(
        sharer=sharer, text=text, image_prompt=image_prompt, derived_from=fm,
        stage=space.stage, trigger_seq=last.seq, image_ref=image_ref,
        flags=tuple(flags),
    )


def _stage_phrase(space: "InteractionSpace") -> str:
    return f"stage {space.stage}"


def sharing_pipeline(space: "InteractionSpace", chat: "ChatProvider", *,
                     profiles: dict[str, CharacterProfile], rounds: int = 2,
                     image: "ImageProvider | None" = None,
                     entries: tuple["MemoryEntry", ...] | None = None,
                     ) -> tuple[DiscussionTranscript, FocusMood, SharingCard]:
    """Post-round job: discuss, identify focus and mood, emit one card."""
    entries = space.stream.entries if entries is None else entries
    transcript = run_discussion(space, rounds, chat, profiles=profiles, entries=entries)
    mode = transcript.mode
    fm = identify_focus_mood(entries, mode=mode)
    card = make_sharing_card(fm, space, chat, profiles=profiles, image=image, entries=entries)
    return transcript, fm, card
