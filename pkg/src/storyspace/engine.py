"""Engine: binds the knowledge base, providers, and sessions into one surface.

Everything the HTTP service or CLI can do goes through here, so API state and
engine state cannot diverge. Per-session work (rounds, scenes) is serialized
through the session store's locks; sharing runs as a post-round job on a
snapshot of the stream taken while the round lock is still held, so a
follow-up query can never bleed into an earlier share.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import Executor
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

from . import scenes as scenes_mod
from .agents import CharacterProfile, profiles_from_manifest, respond_all
from .errors import PreconditionError, ValidationError
from .ingest import StageKnowledgeBase
from .retrieval import DEFAULT_TOP_K
from .sessions import SessionStore, space_from_dict, space_to_dict
from .sharing import SharingCard, sharing_pipeline

if TYPE_CHECKING:
    from .providers import ChatProvider, EmbedProvider, ImageProvider

ENGINE_SNAPSHOT_VERSION = 1


@dataclass(frozen=True)
class EngineConfig:
    top_k: int = DEFAULT_TOP_K
    discussion_rounds: int = 2
    scene_max_items: int = 3
    idle_timeout: float = 3600.0
    queue_mode: str = "queue"
    min_roster: int = 2
    seed: int = 0


@dataclass
class _SessionExtras:
    cards: list[SharingCard] = field(default_factory=list)
    scenes: list[scenes_mod.SceneDescription] = field(default_factory=list)
    chain: list[dict] = field(default_factory=list)
    next_pos: int = 1

    def push(self, kind: str, **payload) -> dict:
        event = {"pos": self.next_pos, "kind": kind, **payload}
        self.next_pos += 1
        self.chain.append(event)
        return event


class StoryEngine:
    def __init__(self, kb: StageKnowledgeBase, *, chat: "ChatProvider",
                 embedder: "EmbedProvider", image: "ImageProvider | None" = None,
                 profiles: dict[str, CharacterProfile] | None = None,
                 config: EngineConfig = EngineConfig(), clock=time.time,
                 executor: Executor | None = None) -> None:
        self.kb = kb
        self.chat = chat
        self.embedder = embedder
        self.image = image
        self.profiles = profiles or profiles_from_manifest(kb.manifest)
        self.config = config
        self._executor = executor  # None -> sharing jobs run inline
        self.store = SessionStore(
            kb.manifest, seed=config.seed, clock=clock,
            idle_timeout=config.idle_timeout, queue_mode=config.queue_mode,
            min_roster=config.min_roster,
        )
        self._extras: dict[str, _SessionExtras] = {}

    # -- session lifecycle --------------------------------------------------

    def stages_view(self) -> dict:
        m = self.kb.manifest
        return {
            "title": m.title,
            "stage_count": m.stage_count,
            "stages": [
                {"index": s.index, "title": s.title,
                 "clip_reference": s.clip_reference,
                 "duration_seconds": s.duration_seconds}
                for s in m.stages
            ],
            "characters": [
                {"name": c.name, "portrait": c.portrait, "persona": c.persona}
                for c in m.characters
            ],
        }

    def open_session(self, stage: int, roster: list[str] | None = None,
                     session_seed: int | None = None) -> dict:
        space = self.store.open(stage, roster, session_seed)
        self._extras[space.session_id] = _SessionExtras()
        return self.session_view(space.session_id)

    def session_view(self, session_id: str) -> dict:
        space = self.store.get(session_id)
        return {
            "session_id": space.session_id,
            "stage": space.stage,
            "roster": list(space.roster),
            "memory_length": len(space.stream),
        }

    def switch_stage(self, session_id: str, stage: int) -> dict:
        with self.store.lock(session_id) as space:
            self.store.switch(session_id, stage)
            extras = self._extras_for(session_id)
            extras.push("switch", from_stage=space.stream.markers[-1].from_stage,
                        to_stage=stage, after_seq=space.stream.markers[-1].after_seq)
        return self.session_view(session_id)

    def _extras_for(self, session_id: str) -> _SessionExtras:
        extras = self._extras.get(session_id)
        if extras is None:
            extras = _SessionExtras()
            self._extras[session_id] = extras
        return extras

    # -- rounds and sharing ---------------------------------------------------

    def query(self, session_id: str, text: str) -> dict:
        if not text or not text.strip():
            raise ValidationError("query text must be non-empty")
        with self.store.lock(session_id) as space:
            responses = respond_all(
                space, text, self.chat, embedder=self.embedder,
                index=self.kb.index, profiles=self.profiles,
                top_k=self.config.top_k,
            )
            entry = space.stream.append(text, responses, space.stage)
            extras = self._extras_for(session_id)
            extras.push("round", seq=entry.seq, stage=entry.stage)
            # Snapshot under the round lock: the sharing job must see exactly
            # the stream that triggered it.
            frozen = space.stream.entries
            job_id = f"share-{session_id}-{entry.seq}"
            if self._executor is None:
                self._run_sharing(session_id, frozen)
            else:
                self._executor.submit(self._run_sharing, session_id, frozen)
        return {
            "seq": entry.seq,
            "stage": entry.stage,
            "responses": [self._response_view(r) for r in responses],
            "sharing_job": job_id,
        }

    def _run_sharing(self, session_id: str, frozen_entries) -> None:
        try:
            space = self.store.get(session_id)
            _, _, card = sharing_pipeline(
                space, self.chat, profiles=self.profiles,
                rounds=self.config.discussion_rounds, image=self.image,
                entries=frozen_entries,
            )
        except Exception:
            return  # a failed share never disturbs the session
        extras = self._extras_for(session_id)
        extras.cards.append(card)
        extras.push("card", trigger_seq=card.trigger_seq, sharer=card.sharer)

    @staticmethod
    def _response_view(r) -> dict:
        return {
            "character": r.character, "text": r.text, "stage": r.stage,
            "round_id": r.round_id, "context_digest": r.context_digest,
            "context_absent": r.context_absent, "failed": r.failed,
            "error": r.error,
        }

    def sharing_cards(self, session_id: str, after: int = 0) -> dict:
        self.store.get(session_id)  # existence/expiry check
        extras = self._extras_for(session_id)
        cards = [c.to_record() for c in extras.cards if c.trigger_seq > after]
        return {"cards": cards}

    # -- scenes ---------------------------------------------------------------

    def scene(self, session_id: str, mode_token: str, seed: int | None = None) -> dict:
        with self.store.lock(session_id) as space:
            if not space.stream.entries:
                raise PreconditionError("scene customization requires at least one round")
            spec = self.kb.manifest.stage(space.stage)
            description = scenes_mod.run_scene(
                mode_token, space, index=self.kb.index, embedder=self.embedder,
                chat=self.chat, image=self.image, stage_title=spec.title,
                seed=seed, max_items=self.config.scene_max_items,
                top_k=self.config.top_k,
            )
            extras = self._extras_for(session_id)
            extras.scenes.append(description)
            extras.push("scene", mode=description.mode.value,
                        trigger_seqs=description.provenance["entry_seqs"])
        return description.to_record()

    # -- memory chain and snapshots --------------------------------------------

    def memory_view(self, session_id: str) -> dict:
        space = self.store.get(session_id)
        extras = self._extras_for(session_id)
        stream = space.stream.to_dict()
        return {
            "session": self.session_view(session_id),
            "entries": stream["entries"],
            "markers": stream["markers"],
            "cards": [c.to_record() for c in extras.cards],
            "scenes": [s.to_record() for s in extras.scenes],
            "chain": list(extras.chain),
        }

    def snapshot(self, session_id: str) -> dict:
        space = self.store.get(session_id)
        extras = self._extras_for(session_id)
        return {
            "version": ENGINE_SNAPSHOT_VERSION,
            "space": space_to_dict(space),
            "cards": [c.to_record() for c in extras.cards],
            "scenes": [s.to_record() for s in extras.scenes],
            "chain": list(extras.chain),
            "next_pos": extras.next_pos,
        }

    def save_snapshot(self, session_id: str, path: Path | str) -> None:
        Path(path).write_text(
            json.dumps(self.snapshot(session_id), indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )

    def restore_snapshot(self, data: dict | Path | str) -> str:
        if not isinstance(data, dict):
            data = json.loads(Path(data).read_text(encoding="utf-8"))
        if data.get("version") != ENGINE_SNAPSHOT_VERSION:
            raise ValidationError(f"unsupported snapshot version {data.get('version')!r}")
        space = space_from_dict(data["space"])
        self.store.adopt(space)
        extras = _SessionExtras(
            cards=[_card_from_record(r) for r in data.get("cards", [])],
            scenes=[_scene_from_record(r) for r in data.get("scenes", [])],
            chain=list(data.get("chain", [])),
            next_pos=data.get("next_pos", 1),
        )
        self._extras[space.session_id] = extras
        return space.session_id


def _card_from_record(r: dict) -> SharingCard:
    from .sharing import FocusMood

    return SharingCard(
        sharer=r["sharer"], text=r["text"], image_prompt=r["image_prompt"],
        derived_from=FocusMood(tuple(r["focus_topics"]), r["mood"], r["confidence"]),
        stage=r["stage"], trigger_seq=r["trigger_seq"],
        image_ref=r.get("image_ref", ""), flags=tuple(r.get("flags", [])),
    )


def _scene_from_record(r: dict) -> scenes_mod.SceneDescription:
    return scenes_mod.SceneDescription(
        mode=scenes_mod.SceneMode(r["mode"]), title=r["title"],
        narrative=r["narrative"], viewpoint=r["viewpoint"],
        image_prompt=r["image_prompt"], provenance=r["provenance"],
        stage=r["stage"], non_canonical=r.get("non_canonical", False),
        flags=tuple(r.get("flags", [])),
    )
