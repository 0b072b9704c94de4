"""HTTP surface: the five-zone interaction contract consumed by the UI.

Endpoints (JSON in/out):

    GET  /health
    GET  /stages
    POST /sessions                      {stage, roster?, seed?}
    POST /sessions/{id}/stage           {stage}
    POST /sessions/{id}/query           {text}
    GET  /sessions/{id}/sharing?after=N
    POST /sessions/{id}/scene           {mode, seed?}
    GET  /sessions/{id}/memory

Error mapping: unknown things -> 404, validation -> 400, missing state -> 409,
busy sessions -> 429, provider faults -> 502.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .agents import load_profiles
from .config import ServiceConfig, apply_env_overrides, load_config
from .engine import EngineConfig, StoryEngine
from .errors import (
    BusyError,
    ConfigurationError,
    ContractError,
    NotFoundError,
    PreconditionError,
    ProviderError,
    StorySpaceError,
    ValidationError,
)
from .ingest import load_knowledge_base
from .providers import make_chat_provider, make_embed_provider, make_image_provider

_STATUS_BY_ERROR: tuple[tuple[type, int], ...] = (
    (NotFoundError, 404),
    (BusyError, 429),
    (PreconditionError, 409),
    (ValidationError, 400),
    (ConfigurationError, 400),
    (ContractError, 400),
    (ProviderError, 502),
)


class SessionRequest(BaseModel):
    stage: int
    roster: list[str] | None = None
    seed: int | None = None


class StageRequest(BaseModel):
    stage: int


class QueryRequest(BaseModel):
    text: str


class SceneRequest(BaseModel):
    mode: str
    seed: int | None = None


def create_app(engine: StoryEngine, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="storyspace", version="0.1.0")
    # The UI may be served from any static host; auth is a non-goal here.
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(StorySpaceError)
    async def _domain_error(request: Request, exc: StorySpaceError) -> JSONResponse:
        status = next((code for klass, code in _STATUS_BY_ERROR if isinstance(exc, klass)), 500)
        return JSONResponse(status_code=status,
                            content={"error": type(exc).__name__, "detail": str(exc)})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "stages": engine.kb.manifest.stage_count}

    @app.get("/stages")
    def stages() -> dict:
        return engine.stages_view()

    @app.post("/sessions")
    def open_session(req: SessionRequest) -> dict:
        return engine.open_session(req.stage, req.roster, req.seed)

    @app.post("/sessions/{session_id}/stage")
    def switch_stage(session_id: str, req: StageRequest) -> dict:
        return engine.switch_stage(session_id, req.stage)

    @app.post("/sessions/{session_id}/query")
    def query(session_id: str, req: QueryRequest) -> dict:
        return engine.query(session_id, req.text)

    @app.get("/sessions/{session_id}/sharing")
    def sharing(session_id: str, after: int = 0) -> dict:
        return engine.sharing_cards(session_id, after)

    @app.post("/sessions/{session_id}/scene")
    def scene(session_id: str, req: SceneRequest) -> dict:
        return engine.scene(session_id, req.mode, req.seed)

    @app.get("/sessions/{session_id}/memory")
    def memory(session_id: str) -> dict:
        return engine.memory_view(session_id)

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def build_engine(cfg: ServiceConfig, *, executor=None) -> StoryEngine:
    """Assemble an engine from a validated config (corpus must be ingested)."""
    if not cfg.corpus:
        raise ConfigurationError("config is missing 'corpus' (path to an ingested story)")
    kb = load_knowledge_base(cfg.corpus)
    embedder = make_embed_provider(cfg.provider("embed"), dim=cfg.embed_dim)
    chat = make_chat_provider(cfg.provider("chat"))
    image = make_image_provider(cfg.providers.get("image"))
    profiles = None
    if cfg.profiles_path:
        profiles = load_profiles(Path(cfg.profiles_path), kb.manifest)
    engine_cfg = EngineConfig(
        top_k=cfg.top_k, discussion_rounds=cfg.discussion_rounds,
        scene_max_items=cfg.scene_max_items, idle_timeout=cfg.session_idle_timeout,
        queue_mode=cfg.queue_mode, min_roster=cfg.min_roster, seed=cfg.seed,
    )
    return StoryEngine(kb, chat=chat, embedder=embedder, image=image,
                       profiles=profiles, config=engine_cfg, executor=executor)


def app_from_config_file(path: str, seed_override: int | None = None) -> tuple[FastAPI, ServiceConfig]:
    cfg = apply_env_overrides(load_config(path))
    if seed_override is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=seed_override)
    from concurrent.futures import ThreadPoolExecutor

    engine = build_engine(cfg, executor=ThreadPoolExecutor(max_workers=2))
    return create_app(engine, ui_dir=cfg.ui_dir), cfg
