"""Query-time context assembly.

Scoring is a three-term composite: query-token overlap, a flat tag boost
when any memory tag appears as a substring of the query, and a linear
30-day recency decay. Explicit references (memories and branch
representatives) take priority over automatic retrieval; everything is
rendered into the versioned ``ctxfmt/1`` text block that precedes a chat
message.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ArgumentError, IntegrityError
from .models import MemoryItem
from .text import tokenize
from .tree import MemoryTree

FORMAT_SCHEMA = "ctxfmt/1"
THIRTY_DAYS_MS = 30 * 24 * 60 * 60 * 1000
TAG_BOOST = 0.2
RECENCY_WEIGHT = 0.15


@dataclass
class Query:
    text: str
    explicit_memory_ids: list[str] = field(default_factory=list)
    explicit_branch_ids: list[str] = field(default_factory=list)
    now: int = 0


@dataclass
class ScoredMemory:
    memory_id: str
    score: float
    components: dict[str, float]

    def to_dict(self) -> dict:
        return {"memoryId": self.memory_id, "score": self.score,
                "components": dict(self.components)}


@dataclass
class BundleEntry:
    kind: str              # "memory" | "branch"
    ref_id: str
    mention: bool

    def to_dict(self) -> dict:
        return {"kind": self.kind, "refId": self.ref_id, "mention": self.mention}


@dataclass
class ContextBundle:
    entries: list[BundleEntry]
    rendered_text: str = ""

    def memory_ids(self) -> list[str]:
        return [e.ref_id for e in self.entries if e.kind == "memory"]


@dataclass
class ReferenceTag:
    kind: str              # "memory" | "cluster"
    label: str
    ref_id: str
    span: tuple[int, int]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "label": self.label, "refId": self.ref_id,
                "span": list(self.span)}


def score_memory(memory: MemoryItem, query_text: str, now: int,
                 source_boost: float = 0.0) -> ScoredMemory:
    """Composite relevance of one memory against a query.

    overlap  = |tokens(q) & tokens(m)| / |tokens(q)|
    tagBoost = 0.2 if any memory tag is a case-insensitive substring of q
    recency  = 0.15 * max(0, 1 - age/30d)
    """
    if memory.archived:
        raise ArgumentError("archived memories are not scoreable")
    q_tokens = tokenize(query_text)
    if not q_tokens:
        raise ArgumentError("query has no tokens")
    m_tokens = tokenize(memory.token_text())
    overlap = len(q_tokens & m_tokens) / len(q_tokens)
    q_fold = query_text.casefold()
    tag_boost = TAG_BOOST if any(t and t.casefold() in q_fold for t in memory.tags) else 0.0
    age = max(0, now - memory.captured_at)
    recency = RECENCY_WEIGHT * max(0.0, 1.0 - age / THIRTY_DAYS_MS)
    components = {"tokenOverlap": overlap, "tagBoost": tag_boost, "recency": recency}
    if source_boost and memory.source == "snippet":
        components["sourceBoost"] = source_boost
    return ScoredMemory(memory.id, sum(components.values()), components)


def resolve_branch_refs(tree: MemoryTree, branch_id: str, rep_count: int) -> list[str]:
    """Most recent non-archived members of a branch, newest first."""
    tree.branch(branch_id)
    members = sorted((m for m in tree.members(branch_id) if not m.archived),
                     key=lambda m: -m.sequence)
    return [m.id for m in members[:rep_count]]


def retrieve(tree: MemoryTree, query: Query, slot_limit: int = 8,
             rep_count: int = 3, source_boost: float = 0.0) -> ContextBundle:
    """Merge explicit references with automatic retrieval into a bundle.

    Explicit memories and branch representatives come first (MENTION), in
    reference order; the remaining slots are filled by composite score,
    ties broken by recency then id. With an untokenizable query or an
    all-zero scoreboard this degrades to most-recent-first.
    """
    if slot_limit < 1:
        raise ArgumentError("slotLimit must be >= 1")
    entries: list[BundleEntry] = []
    seen_memories: set[str] = set()

    for mid in query.explicit_memory_ids:
        item = tree.memory(mid)
        if item.archived or mid in seen_memories:
            continue
        entries.append(BundleEntry("memory", mid, mention=True))
        seen_memories.add(mid)
    for bid in query.explicit_branch_ids:
        if bid not in tree.branches:
            raise IntegrityError(f"unknown branch id {bid!r}")
        entries.append(BundleEntry("branch", bid, mention=True))
        for mid in resolve_branch_refs(tree, bid, rep_count):
            if mid not in seen_memories:
                entries.append(BundleEntry("memory", mid, mention=True))
                seen_memories.add(mid)

    candidates = [m for m in tree.retrievable() if m.id not in seen_memories]
    try:
        ranked = sorted(
            (score_memory(m, query.text, query.now, source_boost) for m in candidates),
            key=lambda s: (-s.score, -tree.memories[s.memory_id].sequence, s.memory_id))
        ordered = [s.memory_id for s in ranked]
    except ArgumentError:
        # no query tokens: recency-only fallback
        ordered = [m.id for m in sorted(candidates, key=lambda m: (-m.sequence, m.id))]
    for mid in ordered:
        if len(entries) >= slot_limit:
            break
        entries.append(BundleEntry("memory", mid, mention=False))

    return ContextBundle(entries[:slot_limit])


# -- rendering ----------------------------------------------------------------


def _memory_block(item: MemoryItem, mention: bool) -> str:
    marker = f"MENTION|{item.source.upper()}" if mention else item.source.upper()
    lines = [f"- [{marker}] id={item.id}",
             f"  title: {item.title}",
             f"  context: {item.context_sentence}",
             f"  summary: {item.summary}",
             f"  tags: {', '.join(item.tags)}"]
    if item.source == "snippet" and item.user_memo:
        lines.append(f"  memo: {item.user_memo}")
    lines.append(f"  (reference as: ((({item.title}({item.id})))))")
    return "\n".join(lines)


def _branch_block(tree: MemoryTree, branch_id: str) -> str:
    branch = tree.branch(branch_id)
    count = len(tree.members(branch_id))
    return "\n".join([
        f"- [CLUSTER|MENTION] id={branch.id}",
        f"  name: {branch.name}",
        f"  summary: {branch.summary}",
        f"  tags: {', '.join(branch.tags)}",
        f"  members: {count} {'item' if count == 1 else 'items'}",
        f"  (reference as: (((cluster: {branch.name}({branch.id})))))",
    ])


def format_context(bundle: ContextBundle, tree: MemoryTree) -> str:
    """Render the bundle as the structured block prepended to a chat
    message. MENTION memories render before automatic ones; cluster blocks
    get their own leading section. Empty bundle renders as empty string."""
    cluster_blocks = [_branch_block(tree, e.ref_id)
                      for e in bundle.entries if e.kind == "branch"]
    mention_blocks = [_memory_block(tree.memory(e.ref_id), True)
                      for e in bundle.entries if e.kind == "memory" and e.mention]
    auto_blocks = [_memory_block(tree.memory(e.ref_id), False)
                   for e in bundle.entries if e.kind == "memory" and not e.mention]
    sections = []
    if cluster_blocks:
        sections.append("Cluster Context (explicitly referenced groups):\n"
                        + "\n".join(cluster_blocks))
    if mention_blocks or auto_blocks:
        sections.append("Memory Context:\n" + "\n".join(mention_blocks + auto_blocks))
    return "\n\n".join(sections)


# -- reference grammar -----------------------------------------------------------

# (((title(id))))  /  (((cluster: name(branchId))))
# label may itself contain parens (the id is the last parenthesized token
# right before the closing four) but may not span another ((( opener, so
# a malformed tag never swallows a well-formed one that follows it.
_LABEL = r"(?:(?!\(\(\()[^\n])*?"
_TAG_RE = re.compile(
    r"\(\(\((?:cluster:[ \t]*(?P<cluster_label>" + _LABEL + r")"
    r"|(?P<memory_label>" + _LABEL + r"))"
    r"\((?P<ref_id>[^()\n]+)\)\)\)\)")


def parse_references(response_text: str) -> list[ReferenceTag]:
    """Extract reference tags left-to-right; malformed tags are skipped."""
    tags: list[ReferenceTag] = []
    for match in _TAG_RE.finditer(response_text):
        if match.group("cluster_label") is not None:
            kind, label = "cluster", match.group("cluster_label")
        else:
            kind, label = "memory", match.group("memory_label")
        tags.append(ReferenceTag(kind, label, match.group("ref_id"), match.span()))
    return tags
