"""End-to-end demo: ingest the fable, chat across stages, share, customize.

Everything runs on mock providers with one seed, so two runs with the same
seed print byte-identical transcripts. No wall-clock values or filesystem
paths appear in the output.
"""

from __future__ import annotations

import sys
import tempfile
from pathlib import Path

from . import demo_story
from .engine import EngineConfig, StoryEngine
from .ingest import ingest_source, load_source
from .providers import MockChatProvider, MockEmbedProvider, MockVisionProvider, PlaceholderImageProvider

DEMO_QUERIES_STAGE1 = [
    "Mara, how did you and Pip first meet?",
    "What if the Great Lantern never dims - would you still leave Hollowpine?",
]
DEMO_QUERIES_STAGE5 = [
    "Mara, how did you and Pip first meet?",
    "What should I cook for dinner tonight with friends?",
]
SCENE_MODES = ["plot_extension", "shift_perspective", "character_biography"]


def run_demo(seed: int = 7, out=None) -> None:
    out = out or sys.stdout

    def emit(line: str = "") -> None:
        out.write(line + "\n")

    with tempfile.TemporaryDirectory() as tmp:
        source_dir = demo_story.write_source_corpus(Path(tmp) / "source")
        source = load_source(source_dir)
        embedder = MockEmbedProvider(seed=seed)
        vision = MockVisionProvider(seed=seed)
        kb = ingest_source(source, embedder, vision, interval_seconds=10.0, seed=seed)

        emit(f"== storyspace demo (seed={seed}) ==")
        emit(f"story: {kb.manifest.title}")
        emit(f"stages: {kb.manifest.stage_count}  docs: {len(kb.docs)}  chunks: {len(kb.index)}")
        emit()

        engine = StoryEngine(
            kb,
            chat=MockChatProvider(seed=seed),
            embedder=embedder,
            image=PlaceholderImageProvider(seed=seed),
            config=EngineConfig(seed=seed),
            executor=None,  # sharing runs inline: deterministic ordering
        )
        session = engine.open_session(stage=1, roster=["Mara", "Pip"], session_seed=seed)
        sid = session["session_id"]
        emit(f"session {sid} opened at stage 1 with roster Mara, Pip")

        for text in DEMO_QUERIES_STAGE1:
            _round(engine, sid, text, emit)

        emit("-- switching to stage 5 --")
        engine.switch_stage(sid, 5)
        for text in DEMO_QUERIES_STAGE5:
            _round(engine, sid, text, emit)

        emit("-- scene customization --")
        for i, mode in enumerate(SCENE_MODES):
            record = engine.scene(sid, mode, seed=seed + i)
            emit(f"scene[{mode}] {record['title']}")
            emit(f"  viewpoint: {record['viewpoint']}  non_canonical: {record['non_canonical']}")
            emit(f"  narrative: {record['narrative']}")
            emit(f"  provenance: chunks={record['provenance']['chunk_ids']} "
                 f"seqs={record['provenance']['entry_seqs']}")
            emit(f"  image: {record['provenance']['image_ref']}")
        emit()

        memory = engine.memory_view(sid)
        emit("-- memory chain --")
        emit(f"entries: {len(memory['entries'])}  markers: {len(memory['markers'])}  "
             f"cards: {len(memory['cards'])}  scenes: {len(memory['scenes'])}")
        for event in memory["chain"]:
            detail = {k: v for k, v in event.items() if k not in ("pos", "kind")}
            emit(f"  [{event['pos']:02d}] {event['kind']}: {detail}")


def _round(engine: StoryEngine, sid: str, text: str, emit) -> None:
    emit(f"user> {text}")
    result = engine.query(sid, text)
    for r in result["responses"]:
        emit(f"{r['character']}> {r['text']}")
    cards = engine.sharing_cards(sid, after=result["seq"] - 1)["cards"]
    for card in cards:
        emit(f"share[{card['sharer']}]> mood={card['mood']} topics={','.join(card['focus_topics'])}")
        emit(f"  {card['text']}")
        emit(f"  image_prompt: {card['image_prompt']}  ref: {card['image_ref']}")
    emit()
