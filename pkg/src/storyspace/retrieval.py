"""Chunking, embedding index, and stage-scoped nearest-chunk retrieval.

A query at stage i may only see chunks whose source stage is <= i; that single
rule is what makes characters "know" more as the story advances. Similarity is
cosine on unit vectors (a plain dot product), top-k, ties broken by ascending
chunk id. Brute force by design: the corpus is a story, not the web.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable

import numpy as np

from .errors import EmptyContextError, ValidationError

if TYPE_CHECKING:
    from .ingest import ModalityDoc
    from .providers import EmbedProvider

MODALITIES = ("plot", "audio", "vision")
CHUNK_DELIMITER = "\n---\n"

DEFAULT_CHUNK_SIZE = 800
DEFAULT_OVERLAP = 200
DEFAULT_TOP_K = 4
DEFAULT_EMBED_DIM = 256

INDEX_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Chunk:
    id: int
    stage: int
    modality: str
    text: str
    span: tuple[int, int]


@dataclass(frozen=True)
class ContextBundle:
    """Ranked retrieval result: (chunk id, score) pairs plus the joined text."""

    stage: int
    ranked: tuple[tuple[int, float], ...]
    text: str

    @property
    def chunk_ids(self) -> tuple[int, ...]:
        return tuple(cid for cid, _ in self.ranked)


def empty_bundle(stage: int) -> ContextBundle:
    return ContextBundle(stage=stage, ranked=(), text="")


@dataclass(frozen=True)
class ChunkIndex:
    """Immutable chunk table plus one unit vector per chunk."""

    chunks: tuple[Chunk, ...]
    vectors: np.ndarray
    dim: int
    seed: int
    chunk_size: int
    overlap: int

    def __post_init__(self) -> None:
        if len(self.chunks) != len(self.vectors):
            raise ValidationError(
                f"index has {len(self.chunks)} chunks but {len(self.vectors)} vectors"
            )

    def __len__(self) -> int:
        return len(self.chunks)

    def chunk(self, chunk_id: int) -> Chunk:
        return self.chunks[chunk_id]


def chunk_documents(doc: "ModalityDoc", size: int = DEFAULT_CHUNK_SIZE,
                    overlap: int = DEFAULT_OVERLAP, start_id: int = 0) -> list[Chunk]:
    """Tile a document into overlapping spans.

    Consecutive chunks overlap by exactly `overlap` characters except the last,
    which may overlap more so that it still ends at the document boundary.
    Stripping the first `overlap` characters of every chunk after the first
    reconstructs the document.
    """
    if overlap < 0 or size <= 0:
        raise ValueError(f"need size > 0 and overlap >= 0, got size={size} overlap={overlap}")
    if overlap >= size:
        raise ValueError(f"overlap ({overlap}) must be smaller than chunk size ({size})")
    text = doc.text
    if not text:
        return []
    chunks: list[Chunk] = []
    step = size - overlap
    start = 0
    next_id = start_id
    while True:
        end = min(start + size, len(text))
        chunks.append(Chunk(next_id, doc.stage, doc.modality, text[start:end], (start, end)))
        next_id += 1
        if end >= len(text):
            return chunks
        start += step


def build_index(docs: Iterable["ModalityDoc"], embedder: "EmbedProvider",
                chunk_size: int = DEFAULT_CHUNK_SIZE, overlap: int = DEFAULT_OVERLAP,
                seed: int = 0) -> ChunkIndex:
    """Chunk all documents in (stage, modality) order and embed every chunk."""
    ordered = sorted(docs, key=lambda d: (d.stage, MODALITIES.index(d.modality)))
    chunks: list[Chunk] = []
    for doc in ordered:
        chunks.extend(chunk_documents(doc, chunk_size, overlap, start_id=len(chunks)))
    if chunks:
        vectors = np.stack([embedder.embed(c.text) for c in chunks])
    else:
        vectors = np.zeros((0, embedder.dim), dtype=np.float64)
    return ChunkIndex(tuple(chunks), vectors, embedder.dim, seed, chunk_size, overlap)


def assemble_context(chunk_texts: Iterable[str]) -> str:
    """Concatenate ranked chunk texts with the fixed delimiter line."""
    return CHUNK_DELIMITER.join(chunk_texts)


def retrieve(query: str, stage: int, k: int, index: ChunkIndex,
             embedder: "EmbedProvider") -> ContextBundle:
    """Top-k chunks by cosine among chunks with chunk.stage <= stage.

    Ties break by ascending chunk id; k larger than the eligible set clamps.
    Raises EmptyContextError when no chunk is eligible at this stage.
    """
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    eligible = [i for i, c in enumerate(index.chunks) if c.stage <= stage]
    if not eligible:
        raise EmptyContextError(f"no chunks available at stage {stage}")
    qvec = embedder.embed(query)
    # Score each row independently: a blocked matvec rounds differently for
    # different eligible subsets, which would let float noise defeat the
    # id tie-break on exactly-tied scores.
    scores = [float(np.dot(index.vectors[i], qvec)) for i in eligible]
    order = sorted(range(len(eligible)), key=lambda j: (-scores[j], index.chunks[eligible[j]].id))
    top = order[: min(k, len(eligible))]
    ranked = tuple((index.chunks[eligible[j]].id, scores[j]) for j in top)
    text = assemble_context(index.chunks[cid].text for cid, _ in ranked)
    return ContextBundle(stage=stage, ranked=ranked, text=text)


# ---------------------------------------------------------------------------
# Persistence: chunk table as JSONL, vectors as .npy, versioned header
# ---------------------------------------------------------------------------


def save_index(index: ChunkIndex, directory: Path | str) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    header = {
        "format_version": INDEX_FORMAT_VERSION,
        "dim": index.dim,
        "count": len(index),
        "seed": index.seed,
        "chunk_size": index.chunk_size,
        "overlap": index.overlap,
    }
    (directory / "header.json").write_text(json.dumps(header, indent=2) + "\n", encoding="utf-8")
    with (directory / "chunks.jsonl").open("w", encoding="utf-8") as fh:
        for c in index.chunks:
            fh.write(json.dumps(
                {"id": c.id, "stage": c.stage, "modality": c.modality,
                 "span": list(c.span), "text": c.text},
                ensure_ascii=False) + "\n")
    np.save(directory / "vectors.npy", index.vectors)


def load_index(directory: Path | str) -> ChunkIndex:
    directory = Path(directory)
    header = json.loads((directory / "header.json").read_text(encoding="utf-8"))
    if header.get("format_version") != INDEX_FORMAT_VERSION:
        raise ValidationError(
            f"unsupported index format version {header.get('format_version')!r}"
        )
    chunks: list[Chunk] = []
    with (directory / "chunks.jsonl").open("r", encoding="utf-8") as fh:
        for line in fh:
            row = json.loads(line)
            chunks.append(Chunk(row["id"], row["stage"], row["modality"],
                                row["text"], (row["span"][0], row["span"][1])))
    vectors = np.load(directory / "vectors.npy")
    if vectors.shape != (header["count"], header["dim"]):
        raise ValidationError("vector block shape does not match header")
    return ChunkIndex(tuple(chunks), vectors, header["dim"], header["seed"],
                      header["chunk_size"], header["overlap"])
