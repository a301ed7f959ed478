"""Hierarchical memory structure and its mutations.

The tree owns memories, branches and cross-links. All id/name generation
for new branches happens in the caller (session engine), which passes a
prepared BranchSpec; that keeps every mutation here a pure function of its
arguments, which is what makes event replay byte-deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .analyzer.base import RelevanceJudgment, ReorgPlan
from .errors import ArgumentError, ConflictError, IntegrityError
from .models import (
    Branch,
    BranchSpec,
    CrossLink,
    MemoryItem,
    PlacementDecision,
    Snapshot,
    SnapshotBranch,
    SnapshotMemory,
)

CANONICAL_SCHEMA = "contexty/1"


@dataclass
class MemoryTree:
    session_id: str
    memories: dict[str, MemoryItem] = field(default_factory=dict)
    branches: dict[str, Branch] = field(default_factory=dict)
    links: list[CrossLink] = field(default_factory=list)

    # -- lookups -----------------------------------------------------------

    def memory(self, memory_id: str) -> MemoryItem:
        try:
            return self.memories[memory_id]
        except KeyError:
            raise IntegrityError(f"unknown memory id {memory_id!r}") from None

    def branch(self, branch_id: str) -> Branch:
        try:
            return self.branches[branch_id]
        except KeyError:
            raise IntegrityError(f"unknown branch id {branch_id!r}") from None

    def members(self, branch_id: str) -> list[MemoryItem]:
        return [m for m in self.memories.values() if m.branch_id == branch_id]

    def next_sequence(self) -> int:
        return max((m.sequence for m in self.memories.values()), default=0) + 1

    def retrievable(self) -> list[MemoryItem]:
        """Everything retrieval may score: non-archived (hidden included)."""
        return [m for m in self.memories.values() if not m.archived]

    # -- automatic placement -------------------------------------------------

    def plan_placement(self, judgments: list[RelevanceJudgment]) -> PlacementDecision:
        """Aggregate relevance per branch and pick the assignment target.

        Branch score is the sum of judgment scores over its members. The
        item goes to the top-scoring branch when that score is positive,
        otherwise a new branch is requested. Ties break by the highest
        single judgment inside the branch, then by most recent creation.
        """
        for j in judgments:
            self.memory(j.related_id)
        scores: dict[str, float] = {}
        best_single: dict[str, float] = {}
        for j in judgments:
            bid = self.memories[j.related_id].branch_id
            if bid is None:
                continue
            scores[bid] = scores.get(bid, 0.0) + j.score
            best_single[bid] = max(best_single.get(bid, 0.0), j.score)
        order = {bid: i for i, bid in enumerate(self.branches)}
        target: str | None = None
        if scores and max(scores.values()) > 0.0:
            target = max(scores, key=lambda b: (scores[b], best_single[b], order[b]))
        return PlacementDecision(branch_id=target, created_new=target is None,
                                 branch_scores=scores)

    def insert_memory(self, item: MemoryItem, judgments: list[RelevanceJudgment],
                      new_branch: BranchSpec | None = None,
                      strong_link_threshold: float = 0.8) -> PlacementDecision:
        """Insert a memory, place it, and link strong relations.

        ``new_branch`` must be supplied when no existing branch scores
        above zero (the caller owns branch identity).
        """
        if item.id in self.memories:
            raise ConflictError(f"duplicate memory id {item.id!r}")
        decision = self.plan_placement(judgments)
        if decision.created_new:
            if new_branch is None:
                raise ArgumentError("placement needs a new branch but no spec was given")
            if new_branch.id in self.branches:
                raise ConflictError(f"duplicate branch id {new_branch.id!r}")
            self.branches[new_branch.id] = new_branch.to_branch()
            decision.branch_id = new_branch.id
        item.branch_id = decision.branch_id
        self.memories[item.id] = item
        for j in judgments:
            if j.score >= strong_link_threshold:
                self.add_link(item.id, j.related_id, j.score)
        return decision

    def add_link(self, memory_a: str, memory_b: str, score: float) -> None:
        link = CrossLink(memory_a, memory_b, score)
        if any(l.pair == link.pair for l in self.links):
            return
        self.links.append(link)

    # -- evolution -----------------------------------------------------------

    def apply_evolution(self, judgments: list[RelevanceJudgment]) -> list[str]:
        """Fold suggested metadata updates into existing memories.

        Tags are set-unioned (original order kept, new ones appended);
        a context suggestion replaces the sentence. The updated badge is
        raised only when a suggestion actually changed state. Returns the
        modified ids in capture-sequence order.
        """
        for j in judgments:
            self.memory(j.related_id)
        modified: set[str] = set()
        for j in judgments:
            target = self.memories[j.related_id]
            changed = False
            if j.suggest_tags:
                have = {t.casefold() for t in target.tags}
                for tag in j.suggest_tags:
                    if tag.casefold() not in have:
                        target.tags.append(tag)
                        have.add(tag.casefold())
                        changed = True
            if j.suggest_context is not None and j.suggest_context != target.context_sentence:
                target.context_sentence = j.suggest_context
                changed = True
            if changed:
                target.updated_badge = True
                modified.add(target.id)
        return sorted(modified, key=lambda mid: self.memories[mid].sequence)

    # -- user reorganization ---------------------------------------------------

    def move_memory(self, memory_id: str, target_branch_id: str | None) -> None:
        item = self.memory(memory_id)
        if target_branch_id is not None:
            self.branch(target_branch_id)
        item.branch_id = target_branch_id
        # an emptied source branch is kept; deletion is a separate, explicit op

    def group_memories(self, memory_ids: list[str], spec: BranchSpec) -> str:
        if not memory_ids:
            raise ArgumentError("group needs at least one memory id")
        items = [self.memory(mid) for mid in memory_ids]
        if spec.id in self.branches:
            raise ConflictError(f"duplicate branch id {spec.id!r}")
        self.branches[spec.id] = spec.to_branch()
        for item in items:
            item.branch_id = spec.id
        return spec.id

    def apply_reorg_plan(self, plan: ReorgPlan, specs: list[BranchSpec]) -> list[str]:
        """Create one branch per plan group; reassign listed memories and
        reparent listed branches. ``specs`` carries the identity of each
        new branch, aligned with ``plan.groups``."""
        plan.validate(set(self.memories), set(self.branches))
        if len(specs) != len(plan.groups):
            raise ArgumentError("one branch spec required per plan group")
        created: list[str] = []
        for group, spec in zip(plan.groups, specs):
            if spec.id in self.branches:
                raise ConflictError(f"duplicate branch id {spec.id!r}")
            self.branches[spec.id] = spec.to_branch()
            created.append(spec.id)
            for mid in group.memory_ids:
                self.memories[mid].branch_id = spec.id
            for bid in group.branch_ids:
                self.branches[bid].parent_id = spec.id
        return created

    def set_visibility(self, memory_id: str, hidden: bool, archived: bool) -> None:
        item = self.memory(memory_id)
        item.hidden = hidden
        item.archived = archived

    def edit_memory(self, memory_id: str, *, title: str | None = None,
                    summary: str | None = None, context_sentence: str | None = None,
                    tags: list[str] | None = None, user_memo: str | None = None) -> bool:
        """User-driven card correction; returns True when anything changed."""
        item = self.memory(memory_id)
        changed = False
        if title is not None and title != item.title:
            if len(title) > 24:
                raise ArgumentError("title longer than 24 chars")
            item.title, changed = title, True
        if summary is not None and summary != item.summary:
            item.summary, changed = summary, True
        if context_sentence is not None and context_sentence != item.context_sentence:
            item.context_sentence, changed = context_sentence, True
        if tags is not None and tags != item.tags:
            item.tags, changed = list(tags), True
        if user_memo is not None and user_memo != (item.user_memo or ""):
            if item.source != "snippet":
                raise ArgumentError("user memo is only valid on snippets")
            item.user_memo, changed = user_memo, True
        return changed

    def delete_branch(self, branch_id: str) -> None:
        """Explicit branch removal: members detach, children reparent."""
        branch = self.branch(branch_id)
        for m in self.members(branch_id):
            m.branch_id = None
        for b in self.branches.values():
            if b.parent_id == branch_id:
                b.parent_id = branch.parent_id
        del self.branches[branch_id]

    # -- views ------------------------------------------------------------------

    def snapshot(self, recent_limit: int) -> Snapshot:
        """Canvas-facing snapshot: per-branch recent members, unclustered
        recents, and strong links; hidden/archived items are excluded here
        (they stay retrievable)."""
        if recent_limit < 1:
            raise ArgumentError("recentLimit must be >= 1")

        def visible(m: MemoryItem) -> bool:
            return not m.hidden and not m.archived

        def snap(m: MemoryItem) -> SnapshotMemory:
            return SnapshotMemory(m.id, m.title, m.summary, m.context_sentence,
                                  m.source, m.sequence)

        clusters = []
        for branch in self.branches.values():  # creation order
            members = sorted((m for m in self.members(branch.id) if visible(m)),
                             key=lambda m: -m.sequence)[:recent_limit]
            clusters.append(SnapshotBranch(branch.id, branch.name, branch.summary,
                                           branch.tags, [snap(m) for m in members]))
        unclustered = sorted((m for m in self.memories.values()
                              if m.branch_id is None and visible(m)),
                             key=lambda m: -m.sequence)[:recent_limit]
        strong = [(self.memories[l.memory_a].title, self.memories[l.memory_b].title)
                  for l in self.links
                  if visible(self.memories[l.memory_a]) and visible(self.memories[l.memory_b])]
        return Snapshot(clusters, [snap(m) for m in unclustered], strong)

    # -- canonical serialization --------------------------------------------------

    def canonical_dict(self) -> dict:
        return {
            "schema": CANONICAL_SCHEMA,
            "sessionId": self.session_id,
            "memories": [self.memories[k].to_dict() for k in sorted(self.memories)],
            "branches": [self.branches[k].to_dict() for k in sorted(self.branches)],
            "links": [l.to_dict() for l in sorted(self.links, key=lambda l: l.pair)],
        }

    def canonical_json(self) -> str:
        """Single UTF-8 document used for persistence equality checks."""
        return json.dumps(self.canonical_dict(), ensure_ascii=False,
                          sort_keys=True, separators=(",", ":"))
