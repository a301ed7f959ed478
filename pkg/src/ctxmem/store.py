"""Event-sourced session persistence.

One directory per session:

    <root>/<sessionId>/
        manifest.json    session metadata + blob index
        events.ndjson    one JSON record per line, schema contexty-log/1
        blobs/<hash>.png|.jpg|.bin   content-addressed images

Events are append-only and gapless; trees are reconstructed by replaying
the log through the same apply functions the live engine uses, so a
replayed tree serializes byte-identically to the live one.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

from .analyzer.base import RelevanceJudgment, ReorgGroup, ReorgPlan
from .errors import ConflictError, IntegrityError, ReplayError, StorageError
from .models import BranchSpec, MemoryItem, Provenance
from .tree import MemoryTree

LOG_SCHEMA = "contexty-log/1"

EVENT_KINDS = ("capture", "analysis", "placement", "evolution", "move", "group",
               "reorg", "visibility", "chat", "probe", "preference", "summary")


@dataclass
class SessionEvent:
    seq: int
    at: int
    kind: str
    payload: dict

    def to_line(self) -> str:
        return json.dumps({"seq": self.seq, "at": self.at, "kind": self.kind,
                           "payload": self.payload},
                          ensure_ascii=False, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_line(cls, line: str) -> "SessionEvent":
        doc = json.loads(line)
        return cls(doc["seq"], doc["at"], doc["kind"], doc["payload"])


class SessionStore:
    """Filesystem-backed append-only store for one session."""

    def __init__(self, root: Path, session_id: str):
        self.root = Path(root)
        self.session_id = session_id
        self.dir = self.root / session_id
        self.events_path = self.dir / "events.ndjson"
        self.manifest_path = self.dir / "manifest.json"
        self.blob_dir = self.dir / "blobs"
        self._last_seq: int | None = None

    # -- lifecycle -----------------------------------------------------------

    @classmethod
    def create(cls, root: Path, session_id: str, created_at: int) -> "SessionStore":
        store = cls(root, session_id)
        if store.dir.exists():
            raise ConflictError(f"session {session_id!r} already exists")
        store.blob_dir.mkdir(parents=True)
        store.events_path.touch()
        store._write_manifest({
            "sessionId": session_id,
            "createdAt": created_at,
            "schemaVersion": LOG_SCHEMA,
            "eventCount": 0,
            "blobIndex": {},
        })
        return store

    @classmethod
    def open(cls, root: Path, session_id: str) -> "SessionStore":
        store = cls(root, session_id)
        if not store.manifest_path.exists():
            raise IntegrityError(f"unknown session {session_id!r}")
        return store

    @staticmethod
    def list_sessions(root: Path) -> list[str]:
        root = Path(root)
        if not root.exists():
            return []
        return sorted(p.name for p in root.iterdir() if (p / "manifest.json").exists())

    def manifest(self) -> dict:
        return json.loads(self.manifest_path.read_text(encoding="utf-8"))

    def _write_manifest(self, doc: dict) -> None:
        tmp = self.manifest_path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(doc, ensure_ascii=False, sort_keys=True, indent=2),
                       encoding="utf-8")
        tmp.replace(self.manifest_path)

    # -- event log -------------------------------------------------------------

    def last_seq(self) -> int:
        if self._last_seq is None:
            events = self.read_events()
            self._last_seq = events[-1].seq if events else 0
        return self._last_seq

    def append_event(self, event: SessionEvent) -> int:
        """Durably append one event; seq must be exactly last + 1."""
        expected = self.last_seq() + 1
        if event.seq != expected:
            raise ConflictError(f"event seq {event.seq} != expected {expected}")
        if event.kind not in EVENT_KINDS:
            raise StorageError(f"unknown event kind {event.kind!r}")
        line = event.to_line() + "\n"
        try:
            with open(self.events_path, "a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise StorageError(f"event append failed: {exc}") from exc
        self._last_seq = event.seq
        doc = self.manifest()
        doc["eventCount"] = event.seq
        self._write_manifest(doc)
        return event.seq

    def read_events(self) -> list[SessionEvent]:
        """All fully-written events; a trailing partial line (torn write)
        is ignored, a corrupt line elsewhere is an error."""
        if not self.events_path.exists():
            return []
        raw = self.events_path.read_bytes().decode("utf-8")
        lines = raw.split("\n")
        trailing_partial = lines and lines[-1] != ""
        if not trailing_partial:
            lines = lines[:-1]
        events: list[SessionEvent] = []
        for i, line in enumerate(lines):
            is_last = i == len(lines) - 1
            try:
                events.append(SessionEvent.from_line(line))
            except (json.JSONDecodeError, KeyError) as exc:
                if is_last and trailing_partial:
                    break
                raise ReplayError(f"corrupt event record at line {i + 1}: {exc}",
                                  seq=events[-1].seq + 1 if events else 1) from exc
        expected = 1
        for event in events:
            if event.seq != expected:
                raise ReplayError(f"sequence gap: expected {expected}, got {event.seq}",
                                  seq=event.seq)
            expected += 1
        return events

    # -- blobs -------------------------------------------------------------------

    def store_blob(self, data: bytes) -> str:
        """Content-addressed write; returns the sha256 hex ref."""
        ref = hashlib.sha256(data).hexdigest()
        ext = _sniff_ext(data)
        path = self.blob_dir / f"{ref}{ext}"
        if not path.exists():
            self.blob_dir.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(path.suffix + ".tmp")
            tmp.write_bytes(data)
            tmp.replace(path)
        doc = self.manifest()
        if ref not in doc["blobIndex"]:
            doc["blobIndex"][ref] = path.name
            self._write_manifest(doc)
        return ref

    def load_blob(self, ref: str) -> bytes:
        index = self.manifest()["blobIndex"]
        if ref not in index:
            raise IntegrityError(f"unknown blob ref {ref!r}")
        return (self.blob_dir / index[ref]).read_bytes()


def _sniff_ext(data: bytes) -> str:
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        return ".png"
    if data[:2] == b"\xff\xd8":
        return ".jpg"
    return ".bin"


# -- replay ------------------------------------------------------------------------


class EventProcessor:
    """Folds events into tree state. The live engine routes its own
    mutations through apply() after logging them, so replay and live paths
    execute identical code."""

    def __init__(self, session_id: str):
        self.tree = MemoryTree(session_id)
        self.summary_text: str = "No context yet."
        self.pending_probes: dict[str, dict] = {}
        self.branch_count = 0          # branches ever created (ids never reused)
        self.chat_count = 0
        self.last_modified: list[str] = []     # result of the latest evolution
        self._analysis: dict[str, dict] = {}   # memoryId -> analysis payload
        self._capture: dict[str, dict] = {}    # memoryId -> capture payload

    # each handler consumes one event kind; payloads are the wire dicts
    def apply(self, event: SessionEvent) -> None:
        handler = getattr(self, f"_on_{event.kind}", None)
        if handler is None:
            raise ReplayError(f"unhandled event kind {event.kind!r}", seq=event.seq)
        try:
            handler(event.payload)
        except ReplayError:
            raise
        except Exception as exc:
            raise ReplayError(f"event {event.seq} ({event.kind}) failed: {exc}",
                              seq=event.seq) from exc

    # -- handlers ---------------------------------------------------------------

    def _on_capture(self, p: dict) -> None:
        if p.get("memoryId") is None:
            return  # stage-1 discarded observation: recorded, no memory
        self._capture[p["memoryId"]] = p

    def _on_analysis(self, p: dict) -> None:
        self._analysis[p["memoryId"]] = p

    def _on_placement(self, p: dict) -> None:
        mid = p["memoryId"]
        cap = self._capture.pop(mid)
        ana = self._analysis.get(mid)
        if ana is None:
            raise IntegrityError(f"placement for {mid!r} without analysis")
        content = ana["content"]
        item = MemoryItem(
            id=mid, source=cap["source"], title=content["title"],
            summary=content["content"], context_sentence=content["context"],
            tags=list(content["tags"]),
            provenance=Provenance.from_dict(cap["provenance"]),
            captured_at=cap["capturedAt"], sequence=cap["sequence"],
            raw_text=cap.get("rawText"), image_ref=cap.get("imageRef"),
            user_memo=cap.get("userMemo"), perceptual_hash=cap.get("perceptualHash"),
        )
        judgments = [RelevanceJudgment.from_dict(j) for j in ana["judgments"]]
        spec = BranchSpec.from_dict(p["newBranch"]) if p.get("newBranch") else None
        if spec is not None:
            self.branch_count += 1
        self.tree.insert_memory(item, judgments, spec,
                                strong_link_threshold=p.get("strongLinkThreshold", 0.8))

    def _on_evolution(self, p: dict) -> None:
        if "edit" in p:  # user card correction
            edit = p["edit"]
            self.tree.edit_memory(p["memoryId"], title=edit.get("title"),
                                  summary=edit.get("summary"),
                                  context_sentence=edit.get("contextSentence"),
                                  tags=edit.get("tags"), user_memo=edit.get("userMemo"))
            return
        judgments = [RelevanceJudgment.from_dict(j) for j in p["judgments"]]
        self.last_modified = self.tree.apply_evolution(judgments)

    def _on_move(self, p: dict) -> None:
        self.tree.move_memory(p["memoryId"], p.get("targetBranchId"))

    def _on_group(self, p: dict) -> None:
        self.branch_count += 1
        self.tree.group_memories(p["memoryIds"], BranchSpec.from_dict(p["branch"]))

    def _on_reorg(self, p: dict) -> None:
        if p.get("action") == "delete-branch":
            self.tree.delete_branch(p["branchId"])
            return
        plan = ReorgPlan([ReorgGroup(g["name"], list(g.get("memoryIds", [])),
                                     list(g.get("branchIds", [])))
                          for g in p["groups"]])
        specs = [BranchSpec.from_dict(g["branch"]) for g in p["groups"]]
        self.branch_count += len(specs)
        self.tree.apply_reorg_plan(plan, specs)

    def _on_visibility(self, p: dict) -> None:
        self.tree.set_visibility(p["memoryId"], p["hidden"], p["archived"])

    def _on_chat(self, p: dict) -> None:
        self.chat_count += 1
        if p.get("pendingChoice"):
            self.pending_probes[p["queryId"]] = p

    def _on_probe(self, p: dict) -> None:
        pass  # gate audit record; no tree effect

    def _on_preference(self, p: dict) -> None:
        self.pending_probes.pop(p["queryId"], None)

    def _on_summary(self, p: dict) -> None:
        self.summary_text = p["text"]


def replay(events: list[SessionEvent], session_id: str) -> MemoryTree:
    """Rebuild the tree from a gapless event log."""
    processor = EventProcessor(session_id)
    for event in events:
        processor.apply(event)
    return processor.tree


def replay_processor(events: list[SessionEvent], session_id: str) -> EventProcessor:
    processor = EventProcessor(session_id)
    for event in events:
        processor.apply(event)
    return processor
