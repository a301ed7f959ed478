"""Analyzer provider contract.

Five analysis capabilities plus the chat channel. Providers return the
typed records below; the adapter layer guarantees the invariants (score
clamping, judgment truncation, plan validation) so nothing out-of-contract
escapes to the engine.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

from ..errors import ArgumentError, ValidationError
from ..models import MemoryItem, Provenance, Snapshot

MAX_TITLE_CHARS = 24
MAX_JUDGMENTS = 5
MAX_SUMMARY_CHARS = 200
MAX_REORG_GROUPS = 8


@dataclass
class ContentAnalysis:
    title: str
    content: str
    context: str
    tags: list[str]

    def validate(self) -> "ContentAnalysis":
        if len(self.title) > MAX_TITLE_CHARS:
            raise ValidationError(f"title longer than {MAX_TITLE_CHARS} chars: {self.title!r}")
        if not 3 <= len(self.tags) <= 5:
            raise ValidationError(f"expected 3-5 tags, got {len(self.tags)}")
        return self


@dataclass
class RelevanceJudgment:
    related_id: str
    score: float
    suggest_tags: list[str] | None = None
    suggest_context: str | None = None

    def to_dict(self) -> dict:
        return {"relatedId": self.related_id, "score": self.score,
                "suggestTags": self.suggest_tags, "suggestContext": self.suggest_context}

    @classmethod
    def from_dict(cls, d: dict) -> "RelevanceJudgment":
        return cls(d["relatedId"], d["score"], d.get("suggestTags"), d.get("suggestContext"))


@dataclass
class GroupName:
    name: str
    summary: str


@dataclass
class ReorgGroup:
    name: str
    memory_ids: list[str] = field(default_factory=list)
    branch_ids: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"name": self.name, "memoryIds": list(self.memory_ids),
                "branchIds": list(self.branch_ids)}


@dataclass
class ReorgPlan:
    groups: list[ReorgGroup]

    def validate(self, known_memory_ids: set[str], known_branch_ids: set[str]) -> "ReorgPlan":
        """Structural validation: 1-8 non-empty groups, each id known and
        used at most once across groups."""
        if not 1 <= len(self.groups) <= MAX_REORG_GROUPS:
            raise ValidationError(f"plan must have 1-{MAX_REORG_GROUPS} groups, got {len(self.groups)}")
        seen: set[str] = set()
        for group in self.groups:
            if not group.memory_ids and not group.branch_ids:
                raise ValidationError(f"group {group.name!r} is empty")
            for mid in group.memory_ids:
                if mid not in known_memory_ids:
                    raise ValidationError(f"plan references unknown memory id {mid!r}")
                if mid in seen:
                    raise ValidationError(f"id {mid!r} appears in more than one group")
                seen.add(mid)
            for bid in group.branch_ids:
                if bid not in known_branch_ids:
                    raise ValidationError(f"plan references unknown branch id {bid!r}")
                if bid in seen:
                    raise ValidationError(f"id {bid!r} appears in more than one group")
                seen.add(bid)
        return self

    def to_dict(self) -> dict:
        return {"groups": [g.to_dict() for g in self.groups]}

    @classmethod
    def from_dict(cls, d: dict) -> "ReorgPlan":
        return cls([ReorgGroup(g["name"], list(g.get("memoryIds", [])), list(g.get("branchIds", [])))
                    for g in d["groups"]])


@dataclass
class ContextSummary:
    summary: str

    def validate(self) -> "ContextSummary":
        if len(self.summary) > MAX_SUMMARY_CHARS:
            raise ValidationError(f"summary longer than {MAX_SUMMARY_CHARS} chars")
        return self


def clamp_judgments(raw: list[RelevanceJudgment], known_ids: set[str]) -> list[RelevanceJudgment]:
    """Normalize provider judgments: drop unknown ids, clamp scores into
    [0,1], keep the top MAX_JUDGMENTS by score."""
    kept = []
    for j in raw:
        if j.related_id not in known_ids:
            continue
        score = min(1.0, max(0.0, float(j.score)))
        kept.append(RelevanceJudgment(j.related_id, score, j.suggest_tags, j.suggest_context))
    kept.sort(key=lambda j: -j.score)
    return kept[:MAX_JUDGMENTS]


class Analyzer(ABC):
    """Provider contract. Implementations must be safe for concurrent
    calls; they hold no mutable state beyond connection config."""

    #: False for providers with network latency; capture endpoints then
    #: switch to a pending/polling response style.
    synchronous: bool = True

    @abstractmethod
    def analyze_content(self, raw: str | None, provenance: Provenance,
                        image: bytes | None = None) -> ContentAnalysis:
        """Structured analysis of a captured snippet/observation/chat."""

    @abstractmethod
    def score_related(self, new_item: MemoryItem, existing: list[MemoryItem]) -> list[RelevanceJudgment]:
        """Top related existing items with relevance scores and optional
        metadata suggestions."""

    @abstractmethod
    def name_group(self, items: list[MemoryItem]) -> GroupName:
        """2-4 word Title Case name plus one-sentence summary."""

    @abstractmethod
    def plan_reorg(self, instruction: str, memories: list[MemoryItem],
                   branches: list) -> ReorgPlan:
        """Clustering plan for a natural-language reorganization request.
        Returned plans are already validated against the given ids."""

    @abstractmethod
    def summarize_context(self, snapshot: Snapshot) -> ContextSummary:
        """<=200-char summary of the user's current focus."""

    @abstractmethod
    def chat_complete(self, system_contract: str, history: list[dict],
                      context_block: str, user_message: str) -> str:
        """Assistant response grounded in the rendered context block."""


def require_content_input(raw: str | None, image: bytes | None) -> None:
    if not raw and not image:
        raise ArgumentError("analyze_content needs raw text or an image")
