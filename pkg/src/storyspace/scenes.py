"""Scene customization: a decision/tool pipeline run as a finite state machine.

The layered path: a decision step turns (mode, sampled chat excerpts) into a
plan; a tool step executes the plan against stage-scoped grounding and the
chat/image providers. The tool step never sees the raw user request — only
the plan plus the selected excerpts. One FSM instance drives exactly one
scene request and is then spent.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING

from .errors import (
    ContractError,
    EmptyContextError,
    PreconditionError,
    ProviderError,
    TransitionError,
    ValidationError,
)
from .prompting import PromptEnvelope
from .providers import content_digest
from .retrieval import ChunkIndex, empty_bundle, retrieve

if TYPE_CHECKING:
    from .providers import ChatProvider, EmbedProvider, ImageProvider
    from .sessions import InteractionSpace, MemoryStream


class SceneMode(str, Enum):
    PLOT_EXTENSION = "plot_extension"
    SHIFT_PERSPECTIVE = "shift_perspective"
    CHARACTER_BIOGRAPHY = "character_biography"


MODE_TOKENS = tuple(m.value for m in SceneMode)

MODE_TITLES = {
    SceneMode.PLOT_EXTENSION: "Beyond the telling",
    SceneMode.SHIFT_PERSPECTIVE: "Through other eyes",
    SceneMode.CHARACTER_BIOGRAPHY: "Before the first page",
}


class SceneFsmState(str, Enum):
    IDLE = "Idle"
    DECIDING = "Deciding"
    EXECUTING = "Executing"
    RENDERING = "Rendering"
    DONE = "Done"
    FAILED = "Failed"


EVENTS = ("request", "plan_ready", "executed", "complete", "fail")

# Closed transition graph: the happy path Idle -> Deciding -> Executing ->
# Rendering -> Done, plus fail from any non-terminal state. Done and Failed
# are absorbing; a new request needs a fresh instance.
TRANSITIONS: dict[tuple[SceneFsmState, str], SceneFsmState] = {
    (SceneFsmState.IDLE, "request"): SceneFsmState.DECIDING,
    (SceneFsmState.DECIDING, "plan_ready"): SceneFsmState.EXECUTING,
    (SceneFsmState.EXECUTING, "executed"): SceneFsmState.RENDERING,
    (SceneFsmState.RENDERING, "complete"): SceneFsmState.DONE,
    (SceneFsmState.IDLE, "fail"): SceneFsmState.FAILED,
    (SceneFsmState.DECIDING, "fail"): SceneFsmState.FAILED,
    (SceneFsmState.EXECUTING, "fail"): SceneFsmState.FAILED,
    (SceneFsmState.RENDERING, "fail"): SceneFsmState.FAILED,
}


def step_fsm(state: SceneFsmState, event: str) -> SceneFsmState:
    """Advance one step; undefined (state, event) pairs are rejected."""
    try:
        return TRANSITIONS[(state, event)]
    except KeyError:
        raise TransitionError(state.value, event) from None


class SceneFsm:
    """Single-use instance wrapper around the transition table."""

    def __init__(self) -> None:
        self.state = SceneFsmState.IDLE
        self.cause: str | None = None

    def step(self, event: str, cause: str | None = None) -> SceneFsmState:
        self.state = step_fsm(self.state, event)
        if event == "fail":
            self.cause = cause
        return self.state


@dataclass(frozen=True)
class KeyChatSelection:
    selected: tuple[tuple[int, str], ...]  # (entry seq, verbatim excerpt)
    seed: int


@dataclass(frozen=True)
class SceneTask:
    kind: str  # extend-plot | recast-viewpoint | backfill-biography
    subject: str | None = None
    refs: tuple[int, ...] = ()


@dataclass(frozen=True)
class ScenePlan:
    mode: SceneMode
    tasks: tuple[SceneTask, ...]
    viewpoint: str | None = None

    def __post_init__(self) -> None:
        if not self.tasks:
            raise ContractError("a scene plan needs at least one task")
        if (self.mode is SceneMode.SHIFT_PERSPECTIVE) != (self.viewpoint is not None):
            raise ContractError("viewpoint is required exactly when shifting perspective")


@dataclass(frozen=True)
class SceneDescription:
    mode: SceneMode
    title: str
    narrative: str
    viewpoint: str
    image_prompt: str
    provenance: dict
    stage: int
    non_canonical: bool = False
    flags: tuple[str, ...] = ()

    def to_record(self) -> dict:
        return {
            "mode": self.mode.value,
            "title": self.title,
            "narrative": self.narrative,
            "viewpoint": self.viewpoint,
            "image_prompt": self.image_prompt,
            "provenance": self.provenance,
            "stage": self.stage,
            "non_canonical": self.non_canonical,
            "flags": list(self.flags),
        }


_EXCERPT_LIMIT = 200


def select_key_info(stream: "MemoryStream", seed: int, max_items: int = 3) -> KeyChatSelection:
    """Seeded sample (without replacement) of chat entries, excerpted verbatim."""
    entries = stream.entries
    if not entries:
        raise PreconditionError("key-info selection requires a non-empty memory stream")
    rng = random.Random(seed)
    picked = rng.sample(range(len(entries)), k=min(max_items, len(entries)))
    picked.sort()
    selected = tuple(
        (entries[i].seq, entries[i].query[:_EXCERPT_LIMIT]) for i in picked
    )
    return KeyChatSelection(selected=selected, seed=seed)


_USER_WORDS = frozenset(("i", "me", "my", "mine", "we", "us", "our", "you", "your"))
_HYPOTHETICAL_MARKERS = ("what if", "suppose", "imagine", "if you could", "would you have")
_WORD_RE = re.compile(r"[A-Za-z']+")


def _mention_counts(names: tuple[str, ...], texts: list[str]) -> dict[str, int]:
    counts = {}
    for name in names:
        pattern = re.compile(rf"\b{re.escape(name)}\b", re.IGNORECASE)
        counts[name] = sum(len(pattern.findall(t)) for t in texts)
    return counts


def decide(mode: SceneMode | str, selection: KeyChatSelection,
           space: "InteractionSpace") -> ScenePlan:
    """Decision step: map (mode, excerpts) to tasks and, if needed, a viewpoint."""
    mode = parse_mode(mode)
    texts = [excerpt for _, excerpt in selection.selected]
    seqs = tuple(seq for seq, _ in selection.selected)
    if mode is SceneMode.PLOT_EXTENSION:
        hypo = tuple(
            seq for seq, excerpt in selection.selected
            if any(marker in excerpt.lower() for marker in _HYPOTHETICAL_MARKERS)
        )
        return ScenePlan(mode, (SceneTask("extend-plot", refs=hypo or seqs),))
    if mode is SceneMode.SHIFT_PERSPECTIVE:
        mentions = _mention_counts(space.roster, texts)
        top = max(space.roster, key=lambda n: mentions[n]) if space.roster else None
        user_score = sum(
            1 for t in texts for w in _WORD_RE.findall(t) if w.lower() in _USER_WORDS
        )
        if top is None or mentions[top] == 0 or user_score >= mentions[top]:
            viewpoint = "user"
        else:
            viewpoint = top
        return ScenePlan(mode, (SceneTask("recast-viewpoint", subject=viewpoint, refs=seqs),),
                         viewpoint=viewpoint)
    mentions = _mention_counts(space.roster, texts)
    subject = max(space.roster, key=lambda n: (mentions[n], -space.roster.index(n)))
    return ScenePlan(mode, (SceneTask("backfill-biography", subject=subject, refs=seqs),))


def parse_mode(token: SceneMode | str) -> SceneMode:
    if isinstance(token, SceneMode):
        return token
    try:
        return SceneMode(token)
    except ValueError:
        raise ValidationError(
            f"unknown scene mode {token!r}; valid modes: {', '.join(MODE_TOKENS)}"
        ) from None


_MODE_PERSONAS = {
    SceneMode.PLOT_EXTENSION: "You are the story's narrator, carrying the tale past its last spoken moment.",
    SceneMode.SHIFT_PERSPECTIVE: "You are {viewpoint}, speaking in the first person about what you see and feel.",
    SceneMode.CHARACTER_BIOGRAPHY: "You are the story's chronicler, recounting {subject}'s life before the tale begins.",
}

_MODE_DIRECTIVES = {
    SceneMode.PLOT_EXTENSION: (
        "Continue the scene beyond the selected chat excerpts. Stay concrete "
        "and visual; end on an image worth drawing."
    ),
    SceneMode.SHIFT_PERSPECTIVE: (
        "Retell the moment strictly from your own viewpoint, in the first "
        "person, noticing what only you would notice."
    ),
    SceneMode.CHARACTER_BIOGRAPHY: (
        "Invent a plausible background scene from before the story. Make "
        "clear it is imagined, not canon."
    ),
}


def _render_plan(plan: ScenePlan, selection: KeyChatSelection) -> str:
    lines = [f"tasks: {', '.join(_render_task(t) for t in plan.tasks)}", "excerpts:"]
    for seq, excerpt in selection.selected:
        lines.append(f"- [seq {seq}] {excerpt}")
    return "\n".join(lines)


def _render_task(task: SceneTask) -> str:
    refs = ",".join(str(r) for r in task.refs)
    subject = f"({task.subject})" if task.subject else ""
    return f"{task.kind}{subject}[refs {refs}]"


def execute(plan: ScenePlan, selection: KeyChatSelection, *, index: ChunkIndex,
            embedder: "EmbedProvider", chat: "ChatProvider",
            image: "ImageProvider | None", stage: int, stage_title: str,
            top_k: int = 4, fsm: SceneFsm | None = None) -> SceneDescription:
    """Tool step: retrieve grounding, write the narrative, render the image.

    Receives only the plan and the selection — never the raw scene request.
    Chat failure fails the FSM; image failure degrades to a placeholder.
    """
    if fsm is not None and fsm.state is not SceneFsmState.EXECUTING:
        raise ContractError(f"execute requires the Executing state, got {fsm.state.value}")
    if not selection.selected:
        raise ContractError("scene execution requires a non-empty selection")
    grounding_query = " ".join(excerpt for _, excerpt in selection.selected)
    try:
        bundle = retrieve(grounding_query, stage, top_k, index, embedder)
    except EmptyContextError:
        bundle = empty_bundle(stage)
    subject = plan.tasks[0].subject or ""
    persona = _MODE_PERSONAS[plan.mode].format(viewpoint=plan.viewpoint, subject=subject)
    envelope = PromptEnvelope.build(
        context=bundle.text,
        query=_render_plan(plan, selection),
        persona=persona,
        instruction=_MODE_DIRECTIVES[plan.mode],
    )
    try:
        body = chat.complete(envelope)
    except ProviderError as exc:
        if fsm is not None:
            fsm.step("fail", cause=str(exc))
        raise
    if fsm is not None:
        fsm.step("executed")
    flags: list[str] = []
    non_canonical = False
    if plan.mode is SceneMode.PLOT_EXTENSION:
        viewpoint = "user"
        narrative = body
    elif plan.mode is SceneMode.SHIFT_PERSPECTIVE:
        viewpoint = plan.viewpoint or "user"
        narrative = f"I am {viewpoint}. {body}"
    else:
        viewpoint = subject or "user"
        narrative = f"Before the story began, {subject} walked another road. {body}"
        non_canonical = True
        flags.append("non_canonical")
    image_prompt = (
        f"{MODE_TITLES[plan.mode]}, {stage_title}, viewpoint {viewpoint}, "
        f"storybook illustration"
    )
    if image is not None:
        try:
            image_ref = image.generate(image_prompt)
        except ProviderError:
            image_ref = f"img-{content_digest(image_prompt)}"
            flags.append("image_fallback")
    else:
        image_ref = f"img-{content_digest(image_prompt)}"
    if fsm is not None:
        fsm.step("complete")
    provenance = {
        "chunk_ids": list(bundle.chunk_ids),
        "entry_seqs": [seq for seq, _ in selection.selected],
        "image_ref": image_ref,
    }
    return SceneDescription(
        mode=plan.mode,
        title=f"{MODE_TITLES[plan.mode]}: {stage_title}",
        narrative=narrative,
        viewpoint=viewpoint,
        image_prompt=image_prompt,
        provenance=provenance,
        stage=stage,
        non_canonical=non_canonical,
        flags=tuple(flags),
    )


def run_scene(mode: SceneMode | str, space: "InteractionSpace", *, index: ChunkIndex,
              embedder: "EmbedProvider", chat: "ChatProvider",
              image: "ImageProvider | None", stage_title: str, seed: int | None = None,
              max_items: int = 3, top_k: int = 4) -> SceneDescription:
    """Drive one full FSM run: request -> decide -> execute -> render -> done."""
    mode = parse_mode(mode)
    if seed is None:
        seed = space.seed ^ len(space.stream.entries)
    fsm = SceneFsm()
    fsm.step("request")
    try:
        selection = select_key_info(space.stream, seed, max_items)
        plan = decide(mode, selection, space)
    except PreconditionError:
        fsm.step("fail", cause="empty memory stream")
        raise
    fsm.step("plan_ready")
    return execute(plan, selection, index=index, embedder=embedder, chat=chat,
                   image=image, stage=space.stage, stage_title=stage_title,
                   top_k=top_k, fsm=fsm)
