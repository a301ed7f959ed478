"""Session engine: the single mutation path for one session.

Every mutation is committed as events (analyzer outputs included, so
replay never re-calls a provider) and then applied to in-memory state by
the same EventProcessor code replay uses. One lock serializes writers;
reads work on the in-memory state.
"""

from __future__ import annotations

import threading
import time
import uuid
from pathlib import Path

from .analyzer.base import Analyzer
from .analyzer.prompts import load_prompt
from .config import EngineConfig
from .errors import ArgumentError, ConflictError, CtxmemError
from .models import BranchSpec, MemoryItem, Provenance
from .obsfilter import (
    AcceptedHashRing,
    PerceptualHash,
    phash,
    rebuild_ring,
    stage1_dedup,
    stage2_autohide,
)
from .probe import build_variants, stage1_gate, stage2_gate
from .retrieval import Query, format_context, parse_references, retrieve
from .store import SessionEvent, SessionStore, replay_processor
from .tree import MemoryTree


def now_ms() -> int:
    return int(time.time() * 1000)


def new_session_id() -> str:
    return "s_" + uuid.uuid4().hex[:12]


class SessionEngine:
    def __init__(self, store: SessionStore, analyzer: Analyzer,
                 config: EngineConfig | None = None, clock=now_ms):
        self.store = store
        self.analyzer = analyzer
        self.config = config or EngineConfig()
        self.clock = clock
        self.lock = threading.RLock()
        self.proc = replay_processor(store.read_events(), store.session_id)
        self.ring: AcceptedHashRing = rebuild_ring(self.proc.tree,
                                                   self.config.dedup_ring_size)
        self.version = self.store.last_seq()

    # -- constructors --------------------------------------------------------

    @classmethod
    def create(cls, root: Path, analyzer: Analyzer, config: EngineConfig | None = None,
               session_id: str | None = None, clock=now_ms) -> "SessionEngine":
        sid = session_id or new_session_id()
        store = SessionStore.create(Path(root), sid, created_at=clock())
        return cls(store, analyzer, config, clock)

    @classmethod
    def open(cls, root: Path, session_id: str, analyzer: Analyzer,
             config: EngineConfig | None = None, clock=now_ms) -> "SessionEngine":
        store = SessionStore.open(Path(root), session_id)
        return cls(store, analyzer, config, clock)

    # -- state views -----------------------------------------------------------

    @property
    def tree(self) -> MemoryTree:
        return self.proc.tree

    @property
    def session_id(self) -> str:
        return self.store.session_id

    def summary(self) -> str:
        return self.proc.summary_text

    def manifest(self) -> dict:
        return self.store.manifest()

    def timeline(self) -> list[MemoryItem]:
        return sorted(self.tree.memories.values(), key=lambda m: -m.sequence)

    # -- event plumbing -----------------------------------------------------------

    def _commit(self, kind: str, payload: dict) -> SessionEvent:
        event = SessionEvent(seq=self.store.last_seq() + 1, at=self.clock(),
                             kind=kind, payload=payload)
        self.store.append_event(event)
        self.proc.apply(event)
        self.version = event.seq
        return event

    def _next_memory_id(self) -> tuple[str, int]:
        seq = self.tree.next_sequence()
        return f"mem_{seq:04d}", seq

    def _branch_spec(self, ordinal: int, name: str, summary: str = "") -> BranchSpec:
        return BranchSpec(id=f"br_{ordinal:04d}", name=name, summary=summary,
                          created_at=self.clock())

    def _refresh_summary(self) -> None:
        snapshot = self.tree.snapshot(self.config.snapshot_recent_limit)
        try:
            text = self.analyzer.summarize_context(snapshot).summary
        except CtxmemError:
            return  # keep the previous summary; capture must not block
        if text != self.proc.summary_text:
            self._commit("summary", {"text": text})

    # -- capture pipeline ------------------------------------------------------------

    def _ingest(self, source: str, raw_text: str | None, image: bytes | None,
                user_memo: str | None, provenance: Provenance,
                perceptual: str | None = None) -> dict:
        """Shared analyze -> insert -> evolve path; caller holds the lock.

        All analyzer calls run before the first event is written, so a
        provider failure leaves no partial capture in the log."""
        analysis = self.analyzer.analyze_content(raw_text, provenance, image=image)
        memory_id, sequence = self._next_memory_id()
        captured_at = self.clock()
        pending_item = MemoryItem(
            id=memory_id, source=source, title=analysis.title,
            summary=analysis.content, context_sentence=analysis.context,
            tags=list(analysis.tags), provenance=provenance,
            captured_at=captured_at, sequence=sequence, raw_text=raw_text,
            user_memo=user_memo, perceptual_hash=perceptual)
        judgments = self.analyzer.score_related(pending_item, self.tree.retrievable())

        image_ref = self.store.store_blob(image) if image else None
        pending_item.image_ref = image_ref
        self._commit("capture", {
            "memoryId": memory_id, "source": source, "rawText": raw_text,
            "imageRef": image_ref, "userMemo": user_memo,
            "provenance": provenance.to_dict(), "capturedAt": captured_at,
            "sequence": sequence, "perceptualHash": perceptual,
        })
        self._commit("analysis", {
            "memoryId": memory_id,
            "content": {"title": analysis.title, "content": analysis.content,
                        "context": analysis.context, "tags": list(analysis.tags)},
            "judgments": [j.to_dict() for j in judgments],
        })

        decision = self.tree.plan_placement(judgments)
        new_branch = None
        if decision.created_new:
            new_branch = self._name_new_branch(pending_item)
        self._commit("placement", {
            "memoryId": memory_id,
            "branchScores": decision.branch_scores,
            "targetBranchId": decision.branch_id,
            "newBranch": new_branch.to_dict() if new_branch else None,
            "strongLinkThreshold": self.config.strong_link_threshold,
        })
        placed = self.tree.memory(memory_id)

        modified: list[str] = []
        if any(j.suggest_tags or j.suggest_context is not None for j in judgments):
            self._commit("evolution", {
                "memoryId": memory_id,
                "judgments": [j.to_dict() for j in judgments],
            })
            modified = list(self.proc.last_modified)

        return {"memoryId": memory_id, "sequence": sequence,
                "placement": {"target": "new-branch" if decision.created_new else decision.branch_id,
                              "branchId": placed.branch_id,
                              "createdNew": decision.created_new,
                              "branchScores": decision.branch_scores},
                "modified": modified, "judgments": judgments}

    def _name_new_branch(self, item: MemoryItem) -> BranchSpec:
        ordinal = self.proc.branch_count + 1
        try:
            named = self.analyzer.name_group([item])
            return self._branch_spec(ordinal, named.name, named.summary)
        except CtxmemError:
            # naming must not block capture; fall back to the item title
            return self._branch_spec(ordinal, item.title or "Untitled")

    def capture_snippet(self, *, text: str | None = None, image: bytes | None = None,
                        user_memo: str | None = None,
                        provenance: Provenance) -> dict:
        if not text and not image:
            raise ArgumentError("snippet needs text or an image")
        with self.lock:
            result = self._ingest("snippet", text, image, user_memo, provenance)
            self._refresh_summary()
            return {k: v for k, v in result.items() if k != "judgments"}

    def capture_observation(self, *, image: bytes, provenance: Provenance) -> dict:
        with self.lock:
            h = phash(image)
            decision = stage1_dedup(h, self.ring, self.config.dedup_hamming)
            if decision.outcome == "discard":
                image_ref = self.store.store_blob(image)
                self._commit("capture", {
                    "memoryId": None, "source": "observation", "imageRef": image_ref,
                    "provenance": provenance.to_dict(), "capturedAt": self.clock(),
                    "perceptualHash": h.hex(), "filter": decision.to_dict(),
                })
                return {"memoryId": None, "decisions": [decision.to_dict()],
                        "hidden": False}

            result = self._ingest("observation", None, image, None, provenance,
                                  perceptual=h.hex())
            self.ring.add(PerceptualHash(h.bits, result["memoryId"]))
            hide = stage2_autohide(self.tree, result["memoryId"], result["judgments"],
                                   self.config.autohide_sigma, self.config.autohide_window)
            if hide.outcome == "hide":
                self._commit("visibility", {
                    "memoryId": result["memoryId"], "hidden": True, "archived": False,
                    "reason": "autohide", "evidence": hide.to_dict()["evidence"],
                })
            self._refresh_summary()
            out = {k: v for k, v in result.items() if k != "judgments"}
            out["decisions"] = [decision.to_dict(), hide.to_dict()]
            out["hidden"] = hide.outcome == "hide"
            return out

    # -- chat + probe -------------------------------------------------------------------

    def chat(self, message: str, explicit_memory_ids: list[str] | None = None,
             explicit_branch_ids: list[str] | None = None, probe: bool = False) -> dict:
        with self.lock:
            query = Query(text=message,
                          explicit_memory_ids=list(explicit_memory_ids or []),
                          explicit_branch_ids=list(explicit_branch_ids or []),
                          now=self.clock())
            query_id = f"q_{self.proc.chat_count + 1:04d}"
            contract = load_prompt("conversational_chat")

            bundle = retrieve(self.tree, query, self.config.slot_limit,
                              self.config.rep_count, self.config.source_boost)
            bundle.rendered_text = format_context(bundle, self.tree)

            gate_payload = None
            response_b = None
            if probe:
                variant_a, variant_b = build_variants(
                    self.tree, query, self.config.slot_limit,
                    self.config.rep_count, self.config.source_boost)
                gate = stage1_gate(variant_a, variant_b,
                                   self.config.probe_jmem, self.config.probe_jtok)
                response_a = self.analyzer.chat_complete(
                    contract, [], variant_a.rendered_text, message)
                if not gate.stage1_equivalent:
                    response_b = self.analyzer.chat_complete(
                        contract, [], variant_b.rendered_text, message)
                    gate = stage2_gate(gate, response_a, response_b,
                                       self.config.probe_tau, self.config.gzip_level)
                gate_payload = gate.to_dict()
                gate_payload["variantA"] = variant_a.memory_ids
                gate_payload["variantB"] = variant_b.memory_ids
                pending = bool(gate.stage2_show)
                if not pending:
                    response_b = None
            else:
                response_a = self.analyzer.chat_complete(
                    contract, [], bundle.rendered_text, message)
                pending = False

            references = [t.to_dict() for t in parse_references(response_a)]
            self._commit("chat", {
                "queryId": query_id, "message": message,
                "explicitMemoryIds": query.explicit_memory_ids,
                "explicitBranchIds": query.explicit_branch_ids,
                "entries": [e.to_dict() for e in bundle.entries],
                "probe": probe, "responseA": response_a, "responseB": response_b,
                "references": references, "pendingChoice": pending,
                "shownAt": self.clock(),
            })
            if gate_payload is not None:
                self._commit("probe", {"queryId": query_id, **gate_payload})

            if pending:
                return {"queryId": query_id, "pendingChoice": True,
                        "gate": gate_payload,
                        "candidates": [
                            {"label": "A", "text": response_a,
                             "references": references},
                            {"label": "B", "text": response_b,
                             "references": [t.to_dict() for t in parse_references(response_b)]},
                        ]}

            self._store_chat_memory(message, response_a)
            self._refresh_summary()
            return {"queryId": query_id, "pendingChoice": False, "text": response_a,
                    "references": references, "gate": gate_payload}

    def _store_chat_memory(self, message: str, response: str) -> dict:
        raw = f"Q: {message}\nA: {response}"
        return self._ingest("chat", raw, None, None, Provenance("", "", None))

    def resolve_probe_choice(self, query_id: str, chosen: str) -> dict:
        if chosen not in ("A", "B"):
            raise ArgumentError("chosen must be 'A' or 'B'")
        with self.lock:
            pending = self.proc.pending_probes.get(query_id)
            if pending is None:
                raise ConflictError(f"no pending probe pair for {query_id!r}")
            self._commit("preference", {
                "queryId": query_id, "chosen": chosen,
                "shownAt": pending["shownAt"], "chosenAt": self.clock(),
            })
            text = pending["responseA"] if chosen == "A" else pending["responseB"]
            self._store_chat_memory(pending["message"], text)
            self._refresh_summary()
            return {"queryId": query_id, "chosen": chosen, "text": text}

    # -- reorganization ---------------------------------------------------------------------

    def move_memory(self, memory_id: str, target_branch_id: str | None) -> None:
        with self.lock:
            self.tree.memory(memory_id)
            if target_branch_id is not None:
                self.tree.branch(target_branch_id)
            self._commit("move", {"memoryId": memory_id,
                                  "targetBranchId": target_branch_id})

    def group_memories(self, memory_ids: list[str], name: str | None = None) -> str:
        if not memory_ids:
            raise ArgumentError("group needs at least one memory id")
        with self.lock:
            items = [self.tree.memory(mid) for mid in memory_ids]
            ordinal = self.proc.branch_count + 1
            if name:
                spec = self._branch_spec(ordinal, name)
            else:
                named = self.analyzer.name_group(items)
                spec = self._branch_spec(ordinal, named.name, named.summary)
            self._commit("group", {"branch": spec.to_dict(), "memoryIds": memory_ids})
            return spec.id

    def reorg(self, instruction: str, memory_ids: list[str] | None = None,
              branch_ids: list[str] | None = None) -> dict:
        """Natural-language reorganization over the given selection (or all
        memories when no selection)."""
        with self.lock:
            memories = ([self.tree.memory(mid) for mid in memory_ids]
                        if memory_ids else list(self.tree.memories.values()))
            branches = ([self.tree.branch(bid) for bid in branch_ids]
                        if branch_ids else [])
            plan = self.analyzer.plan_reorg(instruction, memories, branches)
            plan.validate({m.id for m in memories}, {b.id for b in branches})
            base = self.proc.branch_count
            groups_payload = []
            for i, group in enumerate(plan.groups, start=1):
                spec = self._branch_spec(base + i, group.name)
                groups_payload.append({"name": group.name,
                                       "memoryIds": group.memory_ids,
                                       "branchIds": group.branch_ids,
                                       "branch": spec.to_dict()})
            self._commit("reorg", {"instruction": instruction,
                                   "groups": groups_payload})
            return {"createdBranchIds": [g["branch"]["id"] for g in groups_payload],
                    "groups": groups_payload}

    def edit_memory(self, memory_id: str, *, title: str | None = None,
                    summary: str | None = None, context_sentence: str | None = None,
                    tags: list[str] | None = None, user_memo: str | None = None) -> bool:
        with self.lock:
            item = self.tree.memory(memory_id)
            if title is not None and len(title) > 24:
                raise ArgumentError("title longer than 24 chars")
            if user_memo is not None and item.source != "snippet":
                raise ArgumentError("user memo is only valid on snippets")
            edit: dict = {}
            if title is not None and title != item.title:
                edit["title"] = title
            if summary is not None and summary != item.summary:
                edit["summary"] = summary
            if context_sentence is not None and context_sentence != item.context_sentence:
                edit["contextSentence"] = context_sentence
            if tags is not None and list(tags) != item.tags:
                edit["tags"] = list(tags)
            if user_memo is not None and user_memo != (item.user_memo or ""):
                edit["userMemo"] = user_memo
            if not edit:
                return False
            self._commit("evolution", {"memoryId": memory_id, "edit": edit})
            return True

    def set_visibility(self, memory_id: str, hidden: bool, archived: bool) -> None:
        with self.lock:
            self.tree.memory(memory_id)
            self._commit("visibility", {"memoryId": memory_id, "hidden": hidden,
                                        "archived": archived, "reason": "user"})

    def delete_branch(self, branch_id: str) -> None:
        with self.lock:
            self.tree.branch(branch_id)
            self._commit("reorg", {"action": "delete-branch", "branchId": branch_id})
