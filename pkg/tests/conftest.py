"""Shared fixtures: tiny corpora, mock providers, engine builders."""

from __future__ import annotations

import sys

import pytest

from storyspace.agents import CharacterProfile
from storyspace.engine import EngineConfig, StoryEngine
from storyspace.ingest import (
    CharacterSpec,
    ModalityDoc,
    StageSpec,
    StoryManifest,
    build_knowledge_base,
)
from storyspace.providers import MockChatProvider, MockEmbedProvider, PlaceholderImageProvider

DEFAULT_CHARACTERS = ("Ana", "Bo")


def build_manifest(slices, characters=DEFAULT_CHARACTERS, durations=None,
                   title="Test Tale") -> StoryManifest:
    durations = durations or [30.0] * len(slices)
    return StoryManifest(
        title=title,
        stage_count=len(slices),
        stages=tuple(
            StageSpec(index=i + 1, title=f"Stage {i + 1}", plot_slice=s,
                      duration_seconds=durations[i])
            for i, s in enumerate(slices)
        ),
        characters=tuple(
            CharacterSpec(name=n, persona=f"You are {n}, a figure of this tale.")
            for n in characters
        ),
    )


def docs_for(manifest, audio=None, vision=None) -> list[ModalityDoc]:
    """Full (stage x modality) grid: cumulative plot, per-stage audio/vision."""
    slices = [s.plot_slice for s in manifest.stages]
    n = manifest.stage_count
    audio = audio or [f"A{i}: line one of stage {i}." for i in range(1, n + 1)]
    vision = vision or [f"t=0 | scenario: scene {i} | light_shadow: dim"
                        f" | characters:  | props: " for i in range(1, n + 1)]
    docs = []
    for i in range(1, n + 1):
        docs.append(ModalityDoc(i, "plot", "\n".join(slices[:i])))
        docs.append(ModalityDoc(i, "audio", audio[i - 1]))
        docs.append(ModalityDoc(i, "vision", vision[i - 1]))
    return docs


def make_kb(slices, audio=None, vision=None, characters=DEFAULT_CHARACTERS,
            chunk_size=120, overlap=30, dim=64, seed=5):
    manifest = build_manifest(slices, characters)
    embedder = MockEmbedProvider(seed=seed, dim=dim)
    kb = build_knowledge_base(manifest, docs_for(manifest, audio, vision),
                              embedder, chunk_size, overlap, seed=seed)
    return kb, embedder


MARKER_SLICES = [
    "The marker zanzibarone stands alone in the first clearing among tall reeds.",
    "The marker quovaltwo hums beside the river stones where herons wade.",
    "The marker brimwickthree sleeps beneath the lighthouse stair out of the wind.",
    "The marker dalrockfour glows in the market cellar behind the salt barrels.",
    "The marker vexhollowfive waits on the mountain pass above the snow line.",
]
MARKER_TOKENS = ["zanzibarone", "quovaltwo", "brimwickthree", "dalrockfour", "vexhollowfive"]


@pytest.fixture
def marker_kb():
    return make_kb(
        MARKER_SLICES,
        audio=[f"VOICE: the word {t} is spoken here." for t in MARKER_TOKENS],
        vision=[f"t=0 | scenario: sign reading {t} | light_shadow: noon"
                f" | characters:  | props: sign" for t in MARKER_TOKENS],
    )


@pytest.fixture
def small_engine():
    """Two-stage engine on mocks with inline sharing jobs."""
    kb, embedder = make_kb([
        "Ana found the brass compass under the floor of the mill.",
        "Bo traded the compass for a map of the drowned coast.",
    ])
    engine = StoryEngine(
        kb,
        chat=MockChatProvider(seed=3),
        embedder=embedder,
        image=PlaceholderImageProvider(seed=3),
        config=EngineConfig(seed=3),
    )
    return engine


@pytest.fixture
def profiles_two():
    return {
        "Ana": CharacterProfile(name="Ana", persona="You are Ana, a careful miller."),
        "Bo": CharacterProfile(name="Bo", persona="You are Bo, a restless trader."),
    }


def pytest_runtest_logreport(report):
    # One visible line per acceptance criterion, pass or fail.
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    status = "PASS" if report.passed else "FAIL"
    criterion = report.nodeid.split("::")[-1]
    sys.stderr.write(f"[acceptance] {status}: {criterion}\n")
