"""Interaction spaces: sessions, the append-only memory stream, growth profiles.

A session binds one visitor to one story stage plus a character roster. Its
memory stream records every round as an ordered (query, responses...) tuple
and is never mutated or reordered; switching stages appends a marker instead
of clearing anything, so replies from different stages stay comparable.
"""

from __future__ import annotations

import random
import threading
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from itertools import accumulate
from typing import TYPE_CHECKING, Iterable

from .agents import CharacterResponse
from .errors import BusyError, ConfigurationError, ContractError, NotFoundError

if TYPE_CHECKING:
    from .ingest import StageKnowledgeBase, StoryManifest

SNAPSHOT_VERSION = 1


@dataclass(frozen=True)
class MemoryEntry:
    seq: int
    stage: int
    query: str
    responses: tuple[CharacterResponse, ...]


@dataclass(frozen=True)
class StageSwitchMarker:
    after_seq: int
    from_stage: int
    to_stage: int


class MemoryStream:
    """Append-only ordered log of rounds plus stage-switch markers."""

    def __init__(self) -> None:
        self._entries: list[MemoryEntry] = []
        self._markers: list[StageSwitchMarker] = []

    @property
    def entries(self) -> tuple[MemoryEntry, ...]:
        return tuple(self._entries)

    @property
    def markers(self) -> tuple[StageSwitchMarker, ...]:
        return tuple(self._markers)

    @property
    def next_seq(self) -> int:
        return len(self._entries) + 1

    def __len__(self) -> int:
        return len(self._entries)

    def append(self, query: str, responses: Iterable[CharacterResponse], stage: int) -> MemoryEntry:
        responses = tuple(responses)
        if not responses:
            raise ContractError("a memory entry requires at least one response")
        entry = MemoryEntry(seq=self.next_seq, stage=stage, query=query, responses=responses)
        self._entries.append(entry)
        return entry

    def mark_switch(self, from_stage: int, to_stage: int) -> StageSwitchMarker:
        marker = StageSwitchMarker(after_seq=len(self._entries),
                                   from_stage=from_stage, to_stage=to_stage)
        self._markers.append(marker)
        return marker

    def to_dict(self) -> dict:
        return {
            "entries": [
                {"seq": e.seq, "stage": e.stage, "query": e.query,
                 "responses": [asdict(r) for r in e.responses]}
                for e in self._entries
            ],
            "markers": [asdict(m) for m in self._markers],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MemoryStream":
        stream = cls()
        for e in data.get("entries", []):
            stream._entries.append(MemoryEntry(
                seq=e["seq"], stage=e["stage"], query=e["query"],
                responses=tuple(CharacterResponse(**r) for r in e["responses"]),
            ))
        for m in data.get("markers", []):
            stream._markers.append(StageSwitchMarker(**m))
        return stream


def append_round(stream: MemoryStream, query: str,
                 responses: Iterable[CharacterResponse], stage: int) -> MemoryStream:
    """Append one completed round; prior entries are untouched by construction."""
    stream.append(query, responses, stage)
    return stream


@dataclass
class InteractionSpace:
    session_id: str
    stage: int
    roster: tuple[str, ...]
    created_at: float
    seed: int
    stream: MemoryStream = field(default_factory=MemoryStream)


def open_space(manifest: "StoryManifest", stage: int, roster: Iterable[str] | None,
               seed: int, session_id: str, created_at: float,
               min_roster: int = 2) -> InteractionSpace:
    if not 1 <= stage <= manifest.stage_count:
        raise NotFoundError(f"stage {stage} not in 1..{manifest.stage_count}")
    known = manifest.character_names()
    names = tuple(roster) if roster is not None else known[: max(min_roster, 2)]
    unknown = [n for n in names if n not in known]
    if unknown:
        raise NotFoundError(f"unknown characters: {', '.join(unknown)}")
    if len(set(names)) != len(names):
        raise ConfigurationError(f"duplicate names in roster: {names}")
    if len(names) < min_roster:
        raise ConfigurationError(
            f"roster needs at least {min_roster} characters, got {len(names)}"
        )
    return InteractionSpace(session_id=session_id, stage=stage, roster=names,
                            created_at=created_at, seed=seed)


def switch_stage(space: InteractionSpace, new_stage: int, manifest: "StoryManifest") -> InteractionSpace:
    """Move the session to another stage; history stays, a marker is appended."""
    if not 1 <= new_stage <= manifest.stage_count:
        raise NotFoundError(f"stage {new_stage} not in 1..{manifest.stage_count}")
    space.stream.mark_switch(space.stage, new_stage)
    space.stage = new_stage
    return space


def space_to_dict(space: InteractionSpace) -> dict:
    return {
        "session_id": space.session_id,
        "stage": space.stage,
        "roster": list(space.roster),
        "created_at": space.created_at,
        "seed": space.seed,
        "stream": space.stream.to_dict(),
    }


def space_from_dict(data: dict) -> InteractionSpace:
    return InteractionSpace(
        session_id=data["session_id"], stage=data["stage"],
        roster=tuple(data["roster"]), created_at=data["created_at"],
        seed=data["seed"], stream=MemoryStream.from_dict(data["stream"]),
    )


# ---------------------------------------------------------------------------
# Growth profile
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GrowthProfile:
    """Per-stage growth rates and their running sum, normalized to 1.

    The rate for stage i is the stage's share of novel character mass: the
    new plot slice plus that stage's audio and vision documents. Climax-heavy
    stages that introduce the most new material get the highest rates.
    """

    rates: tuple[float, ...]
    cumulative: tuple[float, ...]


def growth_profile(kb: "StageKnowledgeBase") -> GrowthProfile:
    masses = []
    for spec in kb.manifest.stages:
        novel = (
            len(spec.plot_slice)
            + len(kb.doc(spec.index, "audio").text)
            + len(kb.doc(spec.index, "vision").text)
        )
        masses.append(novel)
    total = sum(masses)
    if total <= 0:
        raise ContractError("knowledge base carries no content mass")
    rates = tuple(m / total for m in masses)
    cumulative = tuple(p / total for p in accumulate(masses))
    return GrowthProfile(rates=rates, cumulative=cumulative)


# ---------------------------------------------------------------------------
# Session store
# ---------------------------------------------------------------------------


@dataclass
class _Slot:
    space: InteractionSpace
    lock: threading.Lock
    last_active: float


class SessionStore:
    """In-memory sessions with seeded ids, idle expiry, and per-session locks.

    queue_mode "queue" serializes concurrent rounds on one session by blocking;
    "busy" rejects the second caller with BusyError instead.
    """

    def __init__(self, manifest: "StoryManifest", *, seed: int = 0,
                 clock=time.time, idle_timeout: float = 3600.0,
                 queue_mode: str = "queue", min_roster: int = 2) -> None:
        if queue_mode not in ("queue", "busy"):
            raise ConfigurationError(f"queue_mode must be 'queue' or 'busy', got {queue_mode!r}")
        self._manifest = manifest
        self._clock = clock
        self._idle_timeout = idle_timeout
        self._queue_mode = queue_mode
        self._min_roster = min_roster
        self._rng = random.Random(seed)
        self._counter = 0
        self._slots: dict[str, _Slot] = {}
        self._guard = threading.Lock()

    def open(self, stage: int, roster: Iterable[str] | None = None,
             session_seed: int | None = None) -> InteractionSpace:
        with self._guard:
            self._counter += 1
            session_id = f"sess-{self._counter:03d}-{self._rng.getrandbits(32):08x}"
            seed = session_seed if session_seed is not None else self._rng.getrandbits(32)
        space = open_space(self._manifest, stage, roster, seed, session_id,
                           created_at=self._clock(), min_roster=self._min_roster)
        with self._guard:
            self._slots[session_id] = _Slot(space, threading.Lock(), self._clock())
        return space

    def _slot(self, session_id: str) -> _Slot:
        with self._guard:
            slot = self._slots.get(session_id)
            if slot is None:
                raise NotFoundError(f"unknown session {session_id!r}")
            if self._clock() - slot.last_active > self._idle_timeout:
                del self._slots[session_id]
                raise NotFoundError(f"session {session_id!r} expired")
            slot.last_active = self._clock()
            return slot

    def get(self, session_id: str) -> InteractionSpace:
        return self._slot(session_id).space

    def switch(self, session_id: str, new_stage: int) -> InteractionSpace:
        return switch_stage(self.get(session_id), new_stage, self._manifest)

    def drop(self, session_id: str) -> None:
        with self._guard:
            self._slots.pop(session_id, None)

    def session_ids(self) -> tuple[str, ...]:
        with self._guard:
            return tuple(self._slots)

    def adopt(self, space: InteractionSpace) -> None:
        """Install a restored session under its original id."""
        with self._guard:
            self._slots[space.session_id] = _Slot(space, threading.Lock(), self._clock())

    @contextmanager
    def lock(self, session_id: str):
        slot = self._slot(session_id)
        if self._queue_mode == "busy":
            if not slot.lock.acquire(blocking=False):
                raise BusyError(f"session {session_id!r} has a round in flight")
        else:
            slot.lock.acquire()
        try:
            yield slot.space
        finally:
            slot.lock.release()
