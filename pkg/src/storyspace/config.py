"""Service configuration: JSON file, field-level validation, env overrides.

Endpoints and keys may come from the environment so configs can be committed
without secrets:

    STORYSPACE_CHAT_ENDPOINT / STORYSPACE_EMBED_ENDPOINT / STORYSPACE_IMAGE_ENDPOINT
    STORYSPACE_API_KEY (forwarded to remote adapters as a bearer header)
    STORYSPACE_SEED (overrides the global seed; the CLI --seed wins over both)
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigurationError
from .providers import PROVIDER_KINDS, ProviderConfig
from .retrieval import DEFAULT_CHUNK_SIZE, DEFAULT_EMBED_DIM, DEFAULT_OVERLAP, DEFAULT_TOP_K


@dataclass(frozen=True)
class ServiceConfig:
    corpus: str = ""
    host: str = "127.0.0.1"
    port: int = 8040
    seed: int = 0
    chunk_size: int = DEFAULT_CHUNK_SIZE
    overlap: int = DEFAULT_OVERLAP
    top_k: int = DEFAULT_TOP_K
    embed_dim: int = DEFAULT_EMBED_DIM
    discussion_rounds: int = 2
    scene_max_items: int = 3
    session_idle_timeout: float = 3600.0
    queue_mode: str = "queue"
    min_roster: int = 2
    profiles_path: str | None = None
    ui_dir: str | None = None
    providers: dict[str, ProviderConfig] = field(default_factory=dict)

    def provider(self, kind: str) -> ProviderConfig:
        block = self.providers.get(kind)
        if block is None:
            return ProviderConfig(kind=kind, backend="mock", seed=self.seed)
        return block


def load_config(path: Path | str) -> ServiceConfig:
    """Parse and validate; all field problems are reported together."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def config_from_dict(data: dict) -> ServiceConfig:
    problems: list[str] = []
    cfg = ServiceConfig()

    def take(key: str, default, kind, check=None, note: str = ""):
        value = data.get(key, default)
        if not isinstance(value, kind) or isinstance(value, bool):
            problems.append(f"{key}: expected {kind.__name__ if not isinstance(kind, tuple) else 'number'}, got {value!r}")
            return default
        if check is not None and not check(value):
            problems.append(f"{key}: {note}, got {value!r}")
            return default
        return value

    corpus = take("corpus", "", str)
    host = take("host", cfg.host, str)
    port = take("port", cfg.port, int, lambda v: 0 < v < 65536, "must be a valid port")
    seed = take("seed", cfg.seed, int, lambda v: v >= 0, "must be non-negative")
    chunk_size = take("chunk_size", cfg.chunk_size, int, lambda v: v > 0, "must be positive")
    overlap = take("overlap", cfg.overlap, int, lambda v: v >= 0, "must be non-negative")
    if not problems and overlap >= chunk_size:
        problems.append(f"overlap: must be smaller than chunk_size, got {overlap} >= {chunk_size}")
    top_k = take("top_k", cfg.top_k, int, lambda v: v > 0, "must be positive")
    embed_dim = take("embed_dim", cfg.embed_dim, int, lambda v: v > 0, "must be positive")
    rounds = take("discussion_rounds", cfg.discussion_rounds, int, lambda v: v > 0, "must be positive")
    scene_max = take("scene_max_items", cfg.scene_max_items, int, lambda v: v > 0, "must be positive")
    idle = take("session_idle_timeout", cfg.session_idle_timeout, (int, float),
                lambda v: v > 0, "must be positive")
    queue_mode = take("queue_mode", cfg.queue_mode, str,
                      lambda v: v in ("queue", "busy"), "must be 'queue' or 'busy'")
    min_roster = take("min_roster", cfg.min_roster, int, lambda v: v >= 1, "must be >= 1")
    profiles_path = data.get("profiles")
    ui_dir = data.get("ui_dir")

    providers: dict[str, ProviderConfig] = {}
    raw_providers = data.get("providers", {})
    if not isinstance(raw_providers, dict):
        problems.append(f"providers: expected an object, got {raw_providers!r}")
        raw_providers = {}
    for kind, block in raw_providers.items():
        if kind not in PROVIDER_KINDS:
            problems.append(f"providers.{kind}: unknown provider kind")
            continue
        if not isinstance(block, dict):
            problems.append(f"providers.{kind}: expected an object")
            continue
        pc = ProviderConfig(
            kind=kind,
            backend=block.get("backend", "mock"),
            endpoint=block.get("endpoint"),
            model_name=block.get("model_name", "mock"),
            timeout=block.get("timeout", 30.0),
            seed=block.get("seed", seed),
        )
        try:
            pc.validate()
        except ConfigurationError as exc:
            problems.append(f"providers.{kind}: {exc}")
            continue
        providers[kind] = pc

    if problems:
        raise ConfigurationError(
            "invalid config: " + "; ".join(problems), fields=problems
        )
    return ServiceConfig(
        corpus=corpus, host=host, port=port, seed=seed, chunk_size=chunk_size,
        overlap=overlap, top_k=top_k, embed_dim=embed_dim,
        discussion_rounds=rounds, scene_max_items=scene_max,
        session_idle_timeout=float(idle), queue_mode=queue_mode,
        min_roster=min_roster, profiles_path=profiles_path, ui_dir=ui_dir,
        providers=providers,
    )


_ENDPOINT_VARS = {
    "chat": "STORYSPACE_CHAT_ENDPOINT",
    "embed": "STORYSPACE_EMBED_ENDPOINT",
    "image": "STORYSPACE_IMAGE_ENDPOINT",
}


def apply_env_overrides(cfg: ServiceConfig, environ=os.environ) -> ServiceConfig:
    providers = dict(cfg.providers)
    for kind, var in _ENDPOINT_VARS.items():
        endpoint = environ.get(var)
        if endpoint:
            base = providers.get(kind, ProviderConfig(kind=kind))
            providers[kind] = replace(base, backend="remote", endpoint=endpoint)
    seed_var = environ.get("STORYSPACE_SEED")
    seed = cfg.seed
    if seed_var is not None:
        try:
            seed = int(seed_var)
        except ValueError:
            raise ConfigurationError(f"STORYSPACE_SEED must be an integer, got {seed_var!r}")
    return replace(cfg, providers=providers, seed=seed)
