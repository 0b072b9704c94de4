"""Command line: ingest a corpus, serve the API, run the demo, one-shot query."""

from __future__ import annotations

import argparse
import json
import sys

from .demo import run_demo
from .errors import StorySpaceError
from .ingest import ingest_source, load_knowledge_base, load_source, save_knowledge_base
from .providers import MockChatProvider, MockEmbedProvider, MockVisionProvider
from .retrieval import DEFAULT_CHUNK_SIZE, DEFAULT_OVERLAP


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StorySpaceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="storyspace")
    sub = parser.add_subparsers(required=True)

    ingest = sub.add_parser("ingest", help="build a knowledge base from a raw story corpus")
    ingest.add_argument("--corpus", required=True, help="source directory (story.json + stages/)")
    ingest.add_argument("--out", required=True, help="output directory for the story/ layout")
    ingest.add_argument("--interval", type=float, default=10.0,
                        help="keyframe resampling interval in seconds")
    ingest.add_argument("--seed", type=int, default=0)
    ingest.add_argument("--chunk-size", type=int, default=DEFAULT_CHUNK_SIZE)
    ingest.add_argument("--overlap", type=int, default=DEFAULT_OVERLAP)
    ingest.set_defaults(func=_cmd_ingest)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--config", required=True, help="JSON config file")
    serve.add_argument("--seed", type=int, default=None, help="override the config seed")
    serve.set_defaults(func=_cmd_serve)

    demo = sub.add_parser("demo", help="run the bundled fable end-to-end with mocks")
    demo.add_argument("--seed", type=int, default=7)
    demo.set_defaults(func=_cmd_demo)

    query = sub.add_parser("query", help="one-shot question against an ingested corpus")
    query.add_argument("--corpus", required=True, help="ingested corpus directory")
    query.add_argument("--stage", type=int, required=True)
    query.add_argument("--text", required=True)
    query.add_argument("--roster", default=None,
                       help="comma-separated character names (default: first two)")
    query.add_argument("--seed", type=int, default=0)
    query.set_defaults(func=_cmd_query)

    return parser


def _cmd_ingest(args) -> int:
    source = load_source(args.corpus)
    embedder = MockEmbedProvider(seed=args.seed)
    vision = MockVisionProvider(seed=args.seed)
    kb = ingest_source(source, embedder, vision, interval_seconds=args.interval,
                       chunk_size=args.chunk_size, overlap=args.overlap, seed=args.seed)
    root = save_knowledge_base(kb, args.out)
    print(f"ingested {kb.manifest.title!r}: {kb.manifest.stage_count} stages, "
          f"{len(kb.docs)} docs, {len(kb.index)} chunks -> {root}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import app_from_config_file

    app, cfg = app_from_config_file(args.config, seed_override=args.seed)
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="info")
    return 0


def _cmd_demo(args) -> int:
    run_demo(seed=args.seed)
    return 0


def _cmd_query(args) -> int:
    from .engine import EngineConfig, StoryEngine

    kb = load_knowledge_base(args.corpus)
    engine = StoryEngine(
        kb,
        chat=MockChatProvider(seed=args.seed),
        embedder=MockEmbedProvider(seed=args.seed, dim=kb.index.dim),
        config=EngineConfig(seed=args.seed),
    )
    roster = args.roster.split(",") if args.roster else None
    session = engine.open_session(args.stage, roster)
    result = engine.query(session["session_id"], args.text)
    print(json.dumps(result, indent=2, ensure_ascii=False))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
