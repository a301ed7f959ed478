"""Core domain types for the memory tree: items, branches, links, snapshots.

Plain dataclasses; the HTTP layer has its own pydantic schemas. Timestamps
are UTC milliseconds. The canonical on-disk/wire form of every type is the
dict produced by its ``to_dict``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ArgumentError

SOURCES = ("snippet", "observation", "chat")


@dataclass
class Provenance:
    app_name: str = ""
    window_title: str = ""
    url: str | None = None

    def to_dict(self) -> dict:
        return {"appName": self.app_name, "windowTitle": self.window_title, "url": self.url}

    @classmethod
    def from_dict(cls, d: dict) -> "Provenance":
        return cls(d.get("appName", ""), d.get("windowTitle", ""), d.get("url"))


@dataclass
class MemoryItem:
    id: str
    source: str                       # snippet | observation | chat
    title: str
    summary: str                      # analyzer "content"
    context_sentence: str
    tags: list[str]
    provenance: Provenance
    captured_at: int                  # UTC ms
    sequence: int                     # strictly increasing per session
    raw_text: str | None = None
    image_ref: str | None = None      # content-addressed blob id
    user_memo: str | None = None      # snippets only
    branch_id: str | None = None
    hidden: bool = False
    archived: bool = False
    updated_badge: bool = False
    perceptual_hash: str | None = None  # 64-hex, observations only

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ArgumentError(f"unknown source: {self.source!r}")
        if self.source != "snippet" and self.user_memo:
            raise ArgumentError("user memo is only valid on snippets")
        if self.source != "chat" and not self.provenance.app_name:
            raise ArgumentError("appName required for snippet/observation provenance")

    def token_text(self) -> str:
        """Concatenated searchable text: title, summary, context, memo,
        raw text, tags, and provenance fields."""
        parts = [self.title, self.summary, self.context_sentence,
                 self.user_memo or "", self.raw_text or "",
                 " ".join(self.tags),
                 self.provenance.app_name, self.provenance.window_title,
                 self.provenance.url or ""]
        return " ".join(p for p in parts if p)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "source": self.source,
            "title": self.title,
            "summary": self.summary,
            "contextSentence": self.context_sentence,
            "tags": list(self.tags),
            "rawText": self.raw_text,
            "imageRef": self.image_ref,
            "userMemo": self.user_memo,
            "provenance": self.provenance.to_dict(),
            "capturedAt": self.captured_at,
            "branchId": self.branch_id,
            "hidden": self.hidden,
            "archived": self.archived,
            "updatedBadge": self.updated_badge,
            "perceptualHash": self.perceptual_hash,
            "sequence": self.sequence,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MemoryItem":
        return cls(
            id=d["id"], source=d["source"], title=d["title"], summary=d["summary"],
            context_sentence=d["contextSentence"], tags=list(d["tags"]),
            provenance=Provenance.from_dict(d["provenance"]),
            captured_at=d["capturedAt"], sequence=d["sequence"],
            raw_text=d.get("rawText"), image_ref=d.get("imageRef"),
            user_memo=d.get("userMemo"), branch_id=d.get("branchId"),
            hidden=d.get("hidden", False), archived=d.get("archived", False),
            updated_badge=d.get("updatedBadge", False),
            perceptual_hash=d.get("perceptualHash"),
        )


@dataclass
class Branch:
    id: str
    name: str
    summary: str = ""
    tags: list[str] = field(default_factory=list)
    parent_id: str | None = None
    created_at: int = 0

    def __post_init__(self):
        if not self.name:
            raise ArgumentError("branch name must be non-empty")

    def to_dict(self) -> dict:
        return {"id": self.id, "name": self.name, "summary": self.summary,
                "tags": list(self.tags), "parentId": self.parent_id,
                "createdAt": self.created_at}

    @classmethod
    def from_dict(cls, d: dict) -> "Branch":
        return cls(d["id"], d["name"], d.get("summary", ""), list(d.get("tags", [])),
                   d.get("parentId"), d.get("createdAt", 0))


@dataclass
class CrossLink:
    """Scored relation between two memories; endpoints stored sorted."""

    memory_a: str
    memory_b: str
    score: float

    def __post_init__(self):
        if self.memory_a == self.memory_b:
            raise ArgumentError("cross-link endpoints must differ")
        if self.memory_a > self.memory_b:
            self.memory_a, self.memory_b = self.memory_b, self.memory_a

    @property
    def pair(self) -> tuple[str, str]:
        return (self.memory_a, self.memory_b)

    def to_dict(self) -> dict:
        return {"memoryA": self.memory_a, "memoryB": self.memory_b, "score": self.score}


@dataclass
class BranchSpec:
    """Prepared identity for a branch about to be created; recorded in the
    event log so replay reuses the same id/name."""

    id: str
    name: str
    summary: str = ""
    created_at: int = 0
    parent_id: str | None = None

    def to_branch(self) -> Branch:
        return Branch(self.id, self.name, self.summary, [], self.parent_id, self.created_at)

    def to_dict(self) -> dict:
        return {"id": self.id, "name": self.name, "summary": self.summary,
                "createdAt": self.created_at, "parentId": self.parent_id}

    @classmethod
    def from_dict(cls, d: dict) -> "BranchSpec":
        return cls(d["id"], d["name"], d.get("summary", ""), d.get("createdAt", 0),
                   d.get("parentId"))


@dataclass
class PlacementDecision:
    branch_id: str | None          # branch the item landed in (None before insert on new-branch plans)
    created_new: bool              # True when no existing branch scored > 0
    branch_scores: dict[str, float]

    @property
    def target(self) -> str:
        """Existing branch id, or the literal directive ``new-branch``."""
        return "new-branch" if self.created_new else (self.branch_id or "new-branch")

    def to_dict(self) -> dict:
        return {"target": self.target, "branchId": self.branch_id,
                "createdNew": self.created_new, "branchScores": dict(self.branch_scores)}


@dataclass
class SnapshotMemory:
    id: str
    title: str
    content: str
    context: str
    source: str
    sequence: int

    def to_dict(self) -> dict:
        return {"id": self.id, "title": self.title, "content": self.content,
                "context": self.context, "source": self.source,
                "sequenceNumber": self.sequence}


@dataclass
class SnapshotBranch:
    id: str
    name: str
    summary: str
    tags: list[str]
    memories: list[SnapshotMemory]

    def to_dict(self) -> dict:
        return {"id": self.id, "name": self.name, "summary": self.summary,
                "tags": list(self.tags),
                "recentMemories": [m.to_dict() for m in self.memories]}


@dataclass
class Snapshot:
    """Canvas-facing view of the tree fed to the context summarizer:
    clusters with recent members, unclustered recents, strong links."""

    clusters: list[SnapshotBranch]
    unclustered: list[SnapshotMemory]
    strong_links: list[tuple[str, str]]   # title pairs

    def to_dict(self) -> dict:
        return {"clusters": [c.to_dict() for c in self.clusters],
                "unclustered": [m.to_dict() for m in self.unclustered],
                "strongLinks": [list(p) for p in self.strong_links]}

    @property
    def empty(self) -> bool:
        return not self.clusters and not self.unclustered
