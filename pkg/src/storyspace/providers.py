"""Provider gateway: chat, embedding, image, and vision backends.

Mock backends are bit-deterministic pure functions of (input, seed, config) so
every downstream behavior is replayable and assertable. All providers append a
CallRecord per call; tests read those records as spies (e.g. to prove that no
retrieval happens during character discussions).

Remote backends speak one minimal JSON shape over HTTP:

    POST {endpoint}/chat  {"model": ..., "segments": [{"tag": ..., "text": ...}]}
        -> {"text": "..."}
    POST {endpoint}/embed {"model": ..., "text": ..., "dim": N}
        -> {"values": [...]}
    POST {endpoint}/image {"model": ..., "prompt": ...}
        -> {"ref": "..."}

Vendor specifics belong in adapters behind this shape, not in the engine.
"""

from __future__ import annotations

import re
import threading
import time
from dataclasses import dataclass
from hashlib import blake2b
from typing import Callable, Protocol

import httpx
import numpy as np

from .errors import ConfigurationError, ProtocolError, ProviderError
from .prompting import SEGMENT_ORDER, PromptEnvelope

PROVIDER_KINDS = ("chat", "embed", "image", "vision")
BACKENDS = ("mock", "remote")

_TOKEN_RE = re.compile(r"[A-Za-z0-9']+")

_STOPWORDS = frozenset(
    """a an the and or but if then else is are was were be been being am do does
    did to of in on at for with from by as it its this that these those there
    here i me my mine we us our you your yours he him his she her hers they
    them their what who whom which when where why how will would could should
    can may might must shall not no yes so such very just about into over under
    again once more most some any each both only own same than too s t don
    """.split()
)


def tokenize(text: str) -> list[str]:
    """Lowercased alphanumeric tokens; the unit of all mock text handling."""
    return [t.lower() for t in _TOKEN_RE.findall(text)]


def salient_tokens(text: str, limit: int = 12) -> list[str]:
    """Content tokens in order of appearance, original case, stopwords dropped."""
    return [t for t in _TOKEN_RE.findall(text) if t.lower() not in _STOPWORDS][:limit]


def _seed_key(seed: int) -> bytes:
    return int(seed).to_bytes(8, "little", signed=False)


def keyed_digest(text: str, seed: int) -> str:
    """8-hex digest of text keyed by the mock seed."""
    return blake2b(text.encode("utf-8"), digest_size=4, key=_seed_key(seed)).hexdigest()


def content_digest(text: str) -> str:
    """Seed-independent 8-hex content fingerprint (context digests, placeholders)."""
    return blake2b(text.encode("utf-8"), digest_size=4).hexdigest()


def _bucket(token: str, seed: int, dim: int) -> int:
    raw = blake2b(token.encode("utf-8"), digest_size=8, key=_seed_key(seed)).digest()
    return int.from_bytes(raw, "big") % dim


def _pick(bank: tuple[str, ...], seed: int, *parts: object) -> str:
    tag = "|".join(str(p) for p in parts).encode("utf-8")
    raw = blake2b(tag, digest_size=8, key=_seed_key(seed)).digest()
    return bank[int.from_bytes(raw, "big") % len(bank)]


# ---------------------------------------------------------------------------
# Configuration and call records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProviderConfig:
    """One provider block from the service config."""

    kind: str
    backend: str = "mock"
    endpoint: str | None = None
    model_name: str = "mock"
    timeout: float = 30.0
    seed: int = 0

    def validate(self) -> None:
        problems = []
        if self.kind not in PROVIDER_KINDS:
            problems.append(f"kind must be one of {PROVIDER_KINDS}, got {self.kind!r}")
        if self.backend not in BACKENDS:
            problems.append(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.backend == "remote" and not self.endpoint:
            problems.append("remote backend requires an endpoint")
        if self.backend == "mock" and self.seed is None:
            problems.append("mock backend requires a seed")
        if self.timeout <= 0:
            problems.append(f"timeout must be positive, got {self.timeout}")
        if problems:
            raise ConfigurationError("; ".join(problems), fields=problems)


@dataclass(frozen=True)
class CallRecord:
    kind: str
    input_digest: str
    tags: tuple[str, ...] = ()
    timestamp: float = 0.0
    outcome: str = "ok"


class _Recorder:
    """Append-only, thread-safe call log shared by all provider classes."""

    def __init__(self) -> None:
        self._records: list[CallRecord] = []
        self._lock = threading.Lock()

    def record(self, kind: str, payload: str, tags: tuple[str, ...] = (), outcome: str = "ok") -> None:
        entry = CallRecord(kind, content_digest(payload), tags, time.time(), outcome)
        with self._lock:
            self._records.append(entry)

    @property
    def call_records(self) -> tuple[CallRecord, ...]:
        with self._lock:
            return tuple(self._records)

    def call_count(self, kind: str | None = None) -> int:
        with self._lock:
            if kind is None:
                return len(self._records)
            return sum(1 for r in self._records if r.kind == kind)


# ---------------------------------------------------------------------------
# Protocols
# ---------------------------------------------------------------------------


class ChatProvider(Protocol):
    def complete(self, envelope: PromptEnvelope) -> str: ...

    @property
    def call_records(self) -> tuple[CallRecord, ...]: ...


class EmbedProvider(Protocol):
    dim: int

    def embed(self, text: str) -> np.ndarray: ...

    @property
    def call_records(self) -> tuple[CallRecord, ...]: ...


class ImageProvider(Protocol):
    def generate(self, prompt: str) -> str: ...


class VisionProvider(Protocol):
    def prime(self, characters: list[str]) -> None: ...

    def describe(self, stage: int, timestamp: float) -> dict: ...


# ---------------------------------------------------------------------------
# Mock backends
# ---------------------------------------------------------------------------


class MockChatProvider(_Recorder):
    """Deterministic chat stand-in.

    Replies follow a fixed grammar embedding the four segment digests plus an
    echo of the query's content tokens:

        ctx:<d8> qry:<d8> persona:<d8> instr:<d8> | <echoed tokens>

    The digests let tests prove which context a character saw; the echo lets
    them trace query content (focus topics, excerpts) into downstream text.
    """

    def __init__(self, seed: int = 0, fail_if: Callable[[PromptEnvelope], bool] | None = None) -> None:
        super().__init__()
        self.seed = int(seed)
        self.fail_if = fail_if
        self.captured: list[PromptEnvelope] = []

    def complete(self, envelope: PromptEnvelope) -> str:
        if not isinstance(envelope, PromptEnvelope):
            raise TypeError("chat providers accept PromptEnvelope only")
        tags = tuple(tag for tag, _ in envelope.segments)
        if self.fail_if is not None and self.fail_if(envelope):
            self.record("chat", envelope.render_wire(), tags, outcome="error")
            raise ProviderError("mock chat configured to fail", retryable=False)
        self.captured.append(envelope)
        self.record("chat", envelope.render_wire(), tags)
        digests = " ".join(
            f"{tag.lower()}:{keyed_digest(envelope.text(tag), self.seed)}" for tag in SEGMENT_ORDER
        )
        echo = " ".join(salient_tokens(envelope.text("QRY")))
        return f"{digests} | {echo}"


class MockEmbedProvider(_Recorder):
    """Hashed-token-count embedder, L2-normalized.

    Tokens are hashed into `dim` buckets with a seed-keyed blake2b, counted,
    and the count vector normalized. Empty text maps to the reserved basis
    vector e0 (an all-zero vector is never emitted).
    """

    def __init__(self, seed: int = 0, dim: int = 256) -> None:
        super().__init__()
        if dim <= 0:
            raise ConfigurationError(f"embedding dim must be positive, got {dim}")
        self.seed = int(seed)
        self.dim = int(dim)

    def embed(self, text: str) -> np.ndarray:
        self.record("embed", text)
        vec = np.zeros(self.dim, dtype=np.float64)
        tokens = tokenize(text)
        if not tokens:
            vec[0] = 1.0
            return vec
        for token in tokens:
            vec[_bucket(token, self.seed, self.dim)] += 1.0
        return vec / np.linalg.norm(vec)


class PlaceholderImageProvider(_Recorder):
    """Always-available image backend returning a stable token per prompt."""

    def __init__(self, seed: int = 0) -> None:
        super().__init__()
        self.seed = int(seed)

    def generate(self, prompt: str) -> str:
        self.record("image", prompt)
        return f"img-{keyed_digest(prompt, self.seed)}"


_SCENERY = ("a narrow lane", "a market square", "a pine forest", "a river crossing",
            "a watchtower", "a harvest field", "a stone bridge", "a cavern mouth")
_LIGHT = ("cold morning light", "amber dusk", "flickering lamplight", "overcast noon",
          "moonlit shadows", "firelight and smoke")
_PROPS = ("lantern", "rope", "ledger", "cart wheel", "iron key", "woolen cloak",
          "clay jug", "carved whistle")


class MockVisionProvider(_Recorder):
    """Deterministic keyframe descriptor generator.

    Requires character priming before describe() calls (mirroring the real
    pipeline, which prompts main-character portraits up front). `omit_field_at`
    and `fail_at_frame` are test knobs keyed by 1-based describe-call index.
    """

    def __init__(
        self,
        seed: int = 0,
        omit_field_at: tuple[int, str] | None = None,
        fail_at_frame: int | None = None,
    ) -> None:
        super().__init__()
        self.seed = int(seed)
        self.omit_field_at = omit_field_at
        self.fail_at_frame = fail_at_frame
        self._primed: list[str] = []
        self._frame_no = 0

    def prime(self, characters: list[str]) -> None:
        self._primed = list(characters)
        self.record("prime", ",".join(characters))

    def describe(self, stage: int, timestamp: float) -> dict:
        self._frame_no += 1
        if not self._primed:
            self.record("vision", f"{stage}:{timestamp}", outcome="error")
            raise ProviderError("vision provider used before character priming")
        if self.fail_at_frame == self._frame_no:
            self.record("vision", f"{stage}:{timestamp}", outcome="error")
            raise ProviderError(f"mock vision failure at frame {self._frame_no}", retryable=True)
        self.record("vision", f"{stage}:{timestamp}")
        present = [
            name
            for i, name in enumerate(self._primed)
            if _bucket(f"{stage}:{timestamp}:{name}:{i}", self.seed, 2) == 0
        ]
        record = {
            "scenario": f"{_pick(_SCENERY, self.seed, 'scene', stage, timestamp)}",
            "light_shadow": _pick(_LIGHT, self.seed, "light", stage, timestamp),
            "characters_present": present,
            "props": [_pick(_PROPS, self.seed, "prop", stage, timestamp)],
        }
        if self.omit_field_at and self.omit_field_at[0] == self._frame_no:
            record.pop(self.omit_field_at[1], None)
        return record


# ---------------------------------------------------------------------------
# Remote backends
# ---------------------------------------------------------------------------


def _post(client: httpx.Client, url: str, payload: dict, timeout: float) -> dict:
    try:
        response = client.post(url, json=payload, timeout=timeout)
    except httpx.TimeoutException as exc:
        raise ProviderError(f"timeout calling {url}", retryable=True) from exc
    except httpx.HTTPError as exc:
        raise ProviderError(f"transport failure calling {url}: {exc}", retryable=True) from exc
    if response.status_code >= 500:
        raise ProviderError(f"{url} returned {response.status_code}", retryable=True)
    if response.status_code >= 400:
        raise ProviderError(f"{url} returned {response.status_code}", retryable=False)
    try:
        body = response.json()
    except ValueError as exc:
        raise ProtocolError(f"{url} returned non-JSON body") from exc
    if not isinstance(body, dict):
        raise ProtocolError(f"{url} returned a non-object body")
    return body


class RemoteChatProvider(_Recorder):
    def __init__(self, endpoint: str, model_name: str = "", timeout: float = 30.0,
                 client: httpx.Client | None = None) -> None:
        super().__init__()
        self.endpoint = endpoint.rstrip("/")
        self.model_name = model_name
        self.timeout = timeout
        self._client = client or httpx.Client()

    def complete(self, envelope: PromptEnvelope) -> str:
        if not isinstance(envelope, PromptEnvelope):
            raise TypeError("chat providers accept PromptEnvelope only")
        tags = tuple(tag for tag, _ in envelope.segments)
        payload = {
            "model": self.model_name,
            "segments": [{"tag": tag, "text": text} for tag, text in envelope.segments],
        }
        try:
            body = _post(self._client, f"{self.endpoint}/chat", payload, self.timeout)
        except ProviderError:
            self.record("chat", envelope.render_wire(), tags, outcome="error")
            raise
        if not isinstance(body.get("text"), str):
            self.record("chat", envelope.render_wire(), tags, outcome="error")
            raise ProtocolError("chat reply missing string 'text' field")
        self.record("chat", envelope.render_wire(), tags)
        return body["text"]


class RemoteEmbedProvider(_Recorder):
    def __init__(self, endpoint: str, dim: int, model_name: str = "", timeout: float = 30.0,
                 client: httpx.Client | None = None) -> None:
        super().__init__()
        self.endpoint = endpoint.rstrip("/")
        self.dim = int(dim)
        self.model_name = model_name
        self.timeout = timeout
        self._client = client or httpx.Client()

    def embed(self, text: str) -> np.ndarray:
        payload = {"model": self.model_name, "text": text, "dim": self.dim}
        try:
            body = _post(self._client, f"{self.endpoint}/embed", payload, self.timeout)
        except ProviderError:
            self.record("embed", text, outcome="error")
            raise
        values = body.get("values")
        if not isinstance(values, list):
            self.record("embed", text, outcome="error")
            raise ProtocolError("embed reply missing 'values' list")
        if len(values) != self.dim:
            self.record("embed", text, outcome="error")
            raise ConfigurationError(
                f"embed backend returned dim {len(values)}, configured dim is {self.dim}"
            )
        vec = np.asarray(values, dtype=np.float64)
        if not np.all(np.isfinite(vec)):
            self.record("embed", text, outcome="error")
            raise ProtocolError("embed reply contains non-finite values")
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            self.record("embed", text, outcome="error")
            raise ProtocolError("embed reply is the zero vector")
        self.record("embed", text)
        return vec / norm


class RemoteImageProvider(_Recorder):
    def __init__(self, endpoint: str, model_name: str = "", timeout: float = 30.0,
                 client: httpx.Client | None = None) -> None:
        super().__init__()
        self.endpoint = endpoint.rstrip("/")
        self.model_name = model_name
        self.timeout = timeout
        self._client = client or httpx.Client()

    def generate(self, prompt: str) -> str:
        payload = {"model": self.model_name, "prompt": prompt}
        try:
            body = _post(self._client, f"{self.endpoint}/image", payload, self.timeout)
        except ProviderError:
            self.record("image", prompt, outcome="error")
            raise
        if not isinstance(body.get("ref"), str):
            self.record("image", prompt, outcome="error")
            raise ProtocolError("image reply missing string 'ref' field")
        self.record("image", prompt)
        return body["ref"]


# ---------------------------------------------------------------------------
# Factories
# ---------------------------------------------------------------------------


def make_chat_provider(config: ProviderConfig) -> MockChatProvider | RemoteChatProvider:
    config.validate()
    if config.backend == "mock":
        return MockChatProvider(seed=config.seed)
    return RemoteChatProvider(config.endpoint or "", config.model_name, config.timeout)


def make_embed_provider(config: ProviderConfig, dim: int) -> MockEmbedProvider | RemoteEmbedProvider:
    config.validate()
    if config.backend == "mock":
        return MockEmbedProvider(seed=config.seed, dim=dim)
    return RemoteEmbedProvider(config.endpoint or "", dim, config.model_name, config.timeout)


def make_image_provider(config: ProviderConfig | None) -> PlaceholderImageProvider | RemoteImageProvider:
    if config is None:
        return PlaceholderImageProvider()
    config.validate()
    if config.backend == "mock":
        return PlaceholderImageProvider(seed=config.seed)
    return RemoteImageProvider(config.endpoint or "", config.model_name, config.timeout)
