"""Command-line client: serve the API plus desk-scale drivers for the
engine (ingest files, replay a session, score a query, calibrate the
probe, hash an image).

Non-serve subcommands work directly on a session directory so they run
offline with the mock provider.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analyzer.mock import MockAnalyzer
from .config import EngineConfig
from .errors import CtxmemError
from .models import Provenance
from .obsfilter import phash
from .probe import load_calibration_corpus, run_calibration
from .retrieval import score_memory
from .session import SessionEngine
from .store import SessionStore, replay

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}
TEXT_SUFFIXES = {".txt", ".md"}


def _engine(args) -> SessionEngine:
    analyzer = MockAnalyzer()
    config = EngineConfig.load(args.config if getattr(args, "config", None) else None)
    root = Path(args.data)
    if args.session and args.session in SessionStore.list_sessions(root):
        return SessionEngine.open(root, args.session, analyzer, config)
    return SessionEngine.create(root, analyzer, config, session_id=args.session)


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    app = create_app(args.data)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_ingest(args) -> int:
    engine = _engine(args)
    target = Path(args.path)
    files = sorted(p for p in ([target] if target.is_file() else target.rglob("*"))
                   if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES | TEXT_SUFFIXES)
    if not files:
        print(f"no ingestable files under {target}", file=sys.stderr)
        return 1
    for path in files:
        prov = Provenance(app_name="ingest", window_title=path.name,
                          url=path.resolve().as_uri())
        if path.suffix.lower() in TEXT_SUFFIXES:
            result = engine.capture_snippet(text=path.read_text(encoding="utf-8"),
                                            provenance=prov)
            print(f"{path.name}: snippet {result['memoryId']} -> "
                  f"{result['placement']['branchId']}")
        else:
            result = engine.capture_observation(image=path.read_bytes(),
                                                provenance=prov)
            if result["memoryId"] is None:
                evidence = result["decisions"][0]["evidence"]
                print(f"{path.name}: discarded (d_H={evidence['minHamming']})")
            else:
                state = "hidden" if result["hidden"] else "visible"
                print(f"{path.name}: observation {result['memoryId']} ({state})")
    print(f"session: {engine.session_id}")
    return 0


def cmd_replay(args) -> int:
    store = SessionStore.open(Path(args.data), args.session)
    tree = replay(store.read_events(), args.session)
    print(tree.canonical_json())
    return 0


def cmd_score(args) -> int:
    store = SessionStore.open(Path(args.data), args.session)
    tree = replay(store.read_events(), args.session)
    now = args.now if args.now is not None else max(
        (m.captured_at for m in tree.memories.values()), default=0)
    rows = []
    for m in tree.retrievable():
        s = score_memory(m, args.query, now)
        rows.append((s.score, m.id, m.title, s.components))
    rows.sort(key=lambda r: (-r[0], r[1]))
    for score, mid, title, comp in rows:
        print(f"{score:.6f}  {mid}  {title!r}  "
              f"overlap={comp['tokenOverlap']:.6f} "
              f"tagBoost={comp['tagBoost']:.2f} recency={comp['recency']:.6f}")
    return 0


def cmd_probe_calibrate(args) -> int:
    pairs = load_calibration_corpus(args.corpus)
    report = run_calibration(pairs)
    if not args.full:
        report = {k: v for k, v in report.items() if k != "pairs"}
    print(json.dumps(report, ensure_ascii=False, indent=2, sort_keys=True))
    return 0


def cmd_hash(args) -> int:
    print(phash(Path(args.image).read_bytes()).hex())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ctxmem",
                                     description="context-memory engine CLI")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--data", default="./data")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("ingest", help="capture files into a session")
    p.add_argument("path", help="file or directory (.txt/.md as snippets, images as observations)")
    p.add_argument("--data", default="./data")
    p.add_argument("--session", default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("replay", help="print the canonical tree replayed from a session log")
    p.add_argument("session")
    p.add_argument("--data", default="./data")
    p.set_defaults(fn=cmd_replay)

    p = sub.add_parser("score", help="print per-memory score components for a query")
    p.add_argument("--query", required=True)
    p.add_argument("--session", required=True)
    p.add_argument("--data", default="./data")
    p.add_argument("--now", type=int, default=None)
    p.set_defaults(fn=cmd_score)

    p = sub.add_parser("probe-calibrate", help="run calibration over a labeled pair corpus")
    p.add_argument("corpus")
    p.add_argument("--full", action="store_true", help="include per-pair rows")
    p.set_defaults(fn=cmd_probe_calibrate)

    p = sub.add_parser("hash", help="print the 64-hex perceptual hash of an image")
    p.add_argument("image")
    p.set_defaults(fn=cmd_hash)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CtxmemError as exc:
        print(json.dumps({"code": exc.__class__.__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(json.dumps({"code": "notFound", "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
