"""Story corpus ingestion: manifest, modality documents, knowledge base.

Raw inputs are text: stage-marked plot slices, per-stage dialogue transcripts,
and keyframe vision descriptors (precomputed or generated by a vision
provider). The output is a per-stage, three-modality document grid plus a
chunk/embedding index, persisted under a fixed directory layout:

    story/manifest.json
    story/stages/stage_01/plot.txt      (cumulative: slices 1..i)
    story/stages/stage_01/audio.txt
    story/stages/stage_01/vision.txt
    story/index/                        (chunk table + vectors + header)

Plot documents are cumulative; audio and vision are stored per stage and made
cumulative at retrieval time by the stage <= i rule.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Mapping

from . import retrieval
from .errors import CompletenessError, IngestionError, NotFoundError, ProviderError, ValidationError
from .retrieval import MODALITIES, ChunkIndex

if TYPE_CHECKING:
    from .providers import EmbedProvider, VisionProvider


@dataclass(frozen=True)
class CharacterSpec:
    name: str
    portrait: str = ""
    persona: str = ""


@dataclass(frozen=True)
class StageSpec:
    index: int
    title: str
    plot_slice: str
    clip_reference: str | None = None
    duration_seconds: float = 0.0


@dataclass(frozen=True)
class StoryManifest:
    title: str
    stage_count: int
    stages: tuple[StageSpec, ...]
    characters: tuple[CharacterSpec, ...]

    def __post_init__(self) -> None:
        if self.stage_count < 1:
            raise ValidationError(f"stage_count must be >= 1, got {self.stage_count}")
        indices = [s.index for s in self.stages]
        if indices != list(range(1, self.stage_count + 1)):
            raise ValidationError(
                f"stage indices must be contiguous 1..{self.stage_count}, got {indices}"
            )
        for s in self.stages:
            if not s.plot_slice:
                raise ValidationError(f"stage {s.index} has an empty plot slice")
            if s.duration_seconds < 0:
                raise ValidationError(f"stage {s.index} has negative duration")
        names = [c.name for c in self.characters]
        if len(set(names)) != len(names):
            raise ValidationError(f"character names must be unique, got {names}")

    def character_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.characters)

    def stage(self, index: int) -> StageSpec:
        if not 1 <= index <= self.stage_count:
            raise NotFoundError(f"stage {index} not in 1..{self.stage_count}")
        return self.stages[index - 1]


@dataclass(frozen=True)
class VisionRecord:
    stage: int
    timestamp_seconds: float
    scenario: str
    light_shadow: str
    characters_present: tuple[str, ...]
    props: tuple[str, ...]

    def render_line(self) -> str:
        return (
            f"t={self.timestamp_seconds:g} | scenario: {self.scenario}"
            f" | light_shadow: {self.light_shadow}"
            f" | characters: {', '.join(self.characters_present)}"
            f" | props: {', '.join(self.props)}"
        )


@dataclass(frozen=True)
class ModalityDoc:
    stage: int
    modality: str
    text: str

    def __post_init__(self) -> None:
        if self.modality not in MODALITIES:
            raise ValidationError(f"unknown modality {self.modality!r}")


@dataclass(frozen=True)
class StageKnowledgeBase:
    manifest: StoryManifest
    docs: Mapping[tuple[int, str], ModalityDoc]
    index: ChunkIndex

    def doc(self, stage: int, modality: str) -> ModalityDoc:
        return self.docs[(stage, modality)]


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def slice_plot(slices: list[str], i: int) -> ModalityDoc:
    """Cumulative plot document for stage i: slices 1..i joined by newlines."""
    if not slices:
        raise IndexError("no plot slices supplied")
    if not 1 <= i <= len(slices):
        raise IndexError(f"stage {i} out of range 1..{len(slices)}")
    return ModalityDoc(stage=i, modality="plot", text="\n".join(slices[:i]))


def schedule_keyframes(duration_seconds: float, interval_seconds: float) -> list[float]:
    """Interval-resampled timestamps: 0, d, 2d, ... — floor(D/d)+1 of them."""
    if interval_seconds <= 0:
        raise ValueError(f"interval must be positive, got {interval_seconds}")
    if duration_seconds < 0:
        raise ValueError(f"duration must be non-negative, got {duration_seconds}")
    count = math.floor(duration_seconds / interval_seconds) + 1
    return [j * interval_seconds for j in range(count)]


_DESCRIPTOR_FIELDS = ("scenario", "light_shadow", "characters_present", "props")


def describe_keyframes(stage: int, timestamps: list[float], vlm: "VisionProvider",
                       characters: Iterable[str] = ()) -> list[VisionRecord]:
    """One VisionRecord per timestamp; the provider is primed with the cast first."""
    vlm.prime(list(characters))
    records: list[VisionRecord] = []
    for frame_no, t in enumerate(timestamps, start=1):
        try:
            raw = vlm.describe(stage, t)
        except ProviderError as exc:
            raise IngestionError(
                f"vision provider failed on frame {frame_no} (t={t:g}): {exc}", timestamp=t
            ) from exc
        missing = [f for f in _DESCRIPTOR_FIELDS if f not in raw]
        if missing:
            raise ValidationError(
                f"frame {frame_no} (t={t:g}) descriptor missing fields: {', '.join(missing)}"
            )
        records.append(VisionRecord(
            stage=stage,
            timestamp_seconds=t,
            scenario=raw["scenario"],
            light_shadow=raw["light_shadow"],
            characters_present=tuple(raw["characters_present"]),
            props=tuple(raw["props"]),
        ))
    return records


def vision_doc(stage: int, records: Iterable[VisionRecord]) -> ModalityDoc:
    return ModalityDoc(stage=stage, modality="vision",
                       text="\n".join(r.render_line() for r in records))


def ingest_audio(stage: int, transcript: str) -> ModalityDoc:
    """Store a transcript verbatim, normalized to one utterance per line."""
    lines = [line.strip() for line in transcript.splitlines() if line.strip()]
    return ModalityDoc(stage=stage, modality="audio", text="\n".join(lines))


def build_knowledge_base(manifest: StoryManifest, docs: Iterable[ModalityDoc],
                         embedder: "EmbedProvider",
                         chunk_size: int = retrieval.DEFAULT_CHUNK_SIZE,
                         overlap: int = retrieval.DEFAULT_OVERLAP,
                         seed: int = 0) -> StageKnowledgeBase:
    """Validate the (stage x modality) grid is full, then index everything."""
    table: dict[tuple[int, str], ModalityDoc] = {}
    for doc in docs:
        key = (doc.stage, doc.modality)
        if key in table:
            raise ValidationError(f"duplicate document for stage {doc.stage}/{doc.modality}")
        table[key] = doc
    gaps = [
        (stage, modality)
        for stage in range(1, manifest.stage_count + 1)
        for modality in MODALITIES
        if (stage, modality) not in table
    ]
    if gaps:
        raise CompletenessError(gaps)
    extra = [k for k in table if not 1 <= k[0] <= manifest.stage_count]
    if extra:
        raise ValidationError(f"documents reference unknown stages: {sorted(extra)}")
    index = retrieval.build_index(table.values(), embedder, chunk_size, overlap, seed=seed)
    return StageKnowledgeBase(manifest=manifest, docs=dict(table), index=index)


# ---------------------------------------------------------------------------
# Knowledge-base persistence
# ---------------------------------------------------------------------------


def manifest_to_dict(manifest: StoryManifest) -> dict:
    return {
        "title": manifest.title,
        "stage_count": manifest.stage_count,
        "stages": [
            {"index": s.index, "title": s.title, "plot_slice": s.plot_slice,
             "clip_reference": s.clip_reference, "duration_seconds": s.duration_seconds}
            for s in manifest.stages
        ],
        "characters": [
            {"name": c.name, "portrait": c.portrait, "persona": c.persona}
            for c in manifest.characters
        ],
    }


def manifest_from_dict(data: dict) -> StoryManifest:
    return StoryManifest(
        title=data["title"],
        stage_count=data["stage_count"],
        stages=tuple(
            StageSpec(s["index"], s["title"], s["plot_slice"],
                      s.get("clip_reference"), s.get("duration_seconds", 0.0))
            for s in data["stages"]
        ),
        characters=tuple(
            CharacterSpec(c["name"], c.get("portrait", ""), c.get("persona", ""))
            for c in data["characters"]
        ),
    )


def save_knowledge_base(kb: StageKnowledgeBase, out_dir: Path | str) -> Path:
    """Write the bit-exact corpus layout; returns the story/ root."""
    root = Path(out_dir) / "story"
    root.mkdir(parents=True, exist_ok=True)
    (root / "manifest.json").write_text(
        json.dumps(manifest_to_dict(kb.manifest), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    for stage in range(1, kb.manifest.stage_count + 1):
        stage_dir = root / "stages" / f"stage_{stage:02d}"
        stage_dir.mkdir(parents=True, exist_ok=True)
        for modality in MODALITIES:
            (stage_dir / f"{modality}.txt").write_text(
                kb.doc(stage, modality).text, encoding="utf-8"
            )
    retrieval.save_index(kb.index, root / "index")
    return root


def load_knowledge_base(directory: Path | str) -> StageKnowledgeBase:
    """Load a persisted base; accepts either the parent dir or story/ itself."""
    root = Path(directory)
    if (root / "story").is_dir():
        root = root / "story"
    if not (root / "manifest.json").is_file():
        raise NotFoundError(f"no story manifest under {directory}")
    manifest = manifest_from_dict(json.loads((root / "manifest.json").read_text(encoding="utf-8")))
    docs: dict[tuple[int, str], ModalityDoc] = {}
    for stage in range(1, manifest.stage_count + 1):
        stage_dir = root / "stages" / f"stage_{stage:02d}"
        for modality in MODALITIES:
            path = stage_dir / f"{modality}.txt"
            if not path.is_file():
                raise CompletenessError([(stage, modality)])
            docs[(stage, modality)] = ModalityDoc(stage, modality, path.read_text(encoding="utf-8"))
    index = retrieval.load_index(root / "index")
    return StageKnowledgeBase(manifest=manifest, docs=docs, index=index)


# ---------------------------------------------------------------------------
# Source corpora (raw inputs to `ingest`)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SourceStory:
    """Raw story inputs before modality processing."""

    manifest: StoryManifest
    transcripts: tuple[str, ...]                      # one per stage
    vision_records: tuple[tuple[VisionRecord, ...] | None, ...] = field(default=())

    def precomputed_vision(self, stage: int) -> tuple[VisionRecord, ...] | None:
        if not self.vision_records:
            return None
        return self.vision_records[stage - 1]


def load_source(directory: Path | str) -> SourceStory:
    """Read a raw corpus: story.json + per-stage slice/transcript/vision files."""
    root = Path(directory)
    story_path = root / "story.json"
    if not story_path.is_file():
        raise NotFoundError(f"no story.json under {directory}")
    data = json.loads(story_path.read_text(encoding="utf-8"))
    stages = []
    transcripts = []
    vision: list[tuple[VisionRecord, ...] | None] = []
    for s in data["stages"]:
        stage_dir = root / "stages" / f"stage_{s['index']:02d}"
        slice_path = stage_dir / "slice.txt"
        if not slice_path.is_file():
            raise NotFoundError(f"missing plot slice for stage {s['index']}: {slice_path}")
        stages.append(StageSpec(
            index=s["index"], title=s.get("title", f"Stage {s['index']}"),
            plot_slice=slice_path.read_text(encoding="utf-8").strip(),
            clip_reference=s.get("clip_reference"),
            duration_seconds=float(s.get("duration_seconds", 0.0)),
        ))
        transcript_path = stage_dir / "transcript.txt"
        transcripts.append(
            transcript_path.read_text(encoding="utf-8") if transcript_path.is_file() else ""
        )
        vision_path = stage_dir / "vision.jsonl"
        if vision_path.is_file():
            records = []
            for line in vision_path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                row = json.loads(line)
                records.append(VisionRecord(
                    stage=s["index"], timestamp_seconds=row["timestamp_seconds"],
                    scenario=row["scenario"], light_shadow=row["light_shadow"],
                    characters_present=tuple(row["characters_present"]),
                    props=tuple(row["props"]),
                ))
            vision.append(tuple(records))
        else:
            vision.append(None)
    manifest = StoryManifest(
        title=data["title"], stage_count=len(stages), stages=tuple(stages),
        characters=tuple(
            CharacterSpec(c["name"], c.get("portrait", ""), c.get("persona", ""))
            for c in data.get("characters", [])
        ),
    )
    return SourceStory(manifest=manifest, transcripts=tuple(transcripts), vision_records=tuple(vision))


def ingest_source(source: SourceStory, embedder: "EmbedProvider", vlm: "VisionProvider",
                  interval_seconds: float = 10.0,
                  chunk_size: int = retrieval.DEFAULT_CHUNK_SIZE,
                  overlap: int = retrieval.DEFAULT_OVERLAP,
                  seed: int = 0) -> StageKnowledgeBase:
    """Run the full modality pipeline over a raw story."""
    manifest = source.manifest
    slices = [s.plot_slice for s in manifest.stages]
    docs: list[ModalityDoc] = []
    for stage in range(1, manifest.stage_count + 1):
        docs.append(slice_plot(slices, stage))
        docs.append(ingest_audio(stage, source.transcripts[stage - 1]))
        records = source.precomputed_vision(stage)
        if records is None:
            timestamps = schedule_keyframes(
                manifest.stage(stage).duration_seconds, interval_seconds
            )
            records = tuple(describe_keyframes(
                stage, timestamps, vlm, manifest.character_names()
            ))
        docs.append(vision_doc(stage, records))
    return build_knowledge_base(manifest, docs, embedder, chunk_size, overlap, seed=seed)
