"""Deterministic offline provider.

Rules (documented so tests can oracle them independently):

- content analysis: tokens are counted over the raw text (or, for images,
  over the provenance fields); stopwords drop out; the title is the top
  1-3 tokens by (frequency desc, first occurrence) capitalized, clipped to
  24 chars; tags are the top 3-5 tokens, padded from provenance and then
  from fixed fillers so there are always at least 3.
- relatedness: Jaccard similarity over each item's (tags | text tokens);
  when the score reaches the strong-link level (0.8) the new item's first
  missing tag is suggested for the related item.
- group naming: first two title tokens of the most recent member,
  capitalized ("Group" appended when the title has a single token).
- reorganization: memories/branches grouped by their first tag (items
  without tags fall into "general"), capped at 8 groups with the overflow
  folded into the last one.
- context summary: "No context yet." for an empty snapshot, otherwise a
  one-liner over the first cluster / latest snippet, clipped to 200 chars.
- chat: echoes the (reference as: ...) hint of every MENTION block, then
  restates the context titles/summaries and the user message.

Identical inputs yield byte-identical outputs.
"""

from __future__ import annotations

import re

from ..errors import ValidationError
from ..models import MemoryItem, Provenance, Snapshot
from ..text import token_sequence, tokenize
from .base import (
    MAX_SUMMARY_CHARS,
    MAX_TITLE_CHARS,
    Analyzer,
    ContentAnalysis,
    ContextSummary,
    GroupName,
    RelevanceJudgment,
    ReorgGroup,
    ReorgPlan,
    clamp_judgments,
    require_content_input,
)

STOPWORDS = frozenset("""
a an and are as at be but by for from has have i in is it its my of on or
our so that the their this to was we were what when where which with you
your
""".split())

_FILLER_TAGS = ("note", "capture", "context")

_MENTION_BLOCK_RE = re.compile(r"^- \[(?:CLUSTER\|)?MENTION\b", re.M)
_HINT_RE = re.compile(r"\(reference as: (\(\(\(.*?\)\)\)\))\)")
_FIELD_RE = re.compile(r"^  (title|summary): (.*)$", re.M)


def _ranked_tokens(text: str) -> list[str]:
    """Distinct non-stopword tokens by (count desc, first occurrence)."""
    seq = [t for t in token_sequence(text) if t not in STOPWORDS]
    counts: dict[str, int] = {}
    first: dict[str, int] = {}
    for i, tok in enumerate(seq):
        counts[tok] = counts.get(tok, 0) + 1
        first.setdefault(tok, i)
    return sorted(counts, key=lambda t: (-counts[t], first[t]))


def _cap(token: str) -> str:
    return token[:1].upper() + token[1:]


def item_token_set(item: MemoryItem) -> set[str]:
    """Token universe used for mock relatedness: non-stopword tokens of the
    content fields (title, summary, raw text, memo) plus tags. Context
    sentences and provenance stay out so the template boilerplate they
    share does not make everything look related."""
    text = " ".join(filter(None, [item.title, item.summary,
                                  item.raw_text or "", item.user_memo or ""]))
    return ({t for t in tokenize(text) if t not in STOPWORDS}
            | {t.casefold() for t in item.tags})


def _jaccard(a: set[str], b: set[str]) -> float:
    if not a and not b:
        return 1.0
    union = a | b
    return len(a & b) / len(union) if union else 0.0


class MockAnalyzer(Analyzer):
    synchronous = True

    def __init__(self, strong_suggestion_threshold: float = 0.8):
        self.strong_suggestion_threshold = strong_suggestion_threshold
        self.call_counts: dict[str, int] = {}

    def _count(self, op: str) -> None:
        self.call_counts[op] = self.call_counts.get(op, 0) + 1

    def analyze_content(self, raw, provenance: Provenance, image=None) -> ContentAnalysis:
        require_content_input(raw, image)
        self._count("analyze_content")
        basis = raw if raw else " ".join(
            p for p in (provenance.app_name, provenance.window_title, provenance.url or "") if p)
        ranked = _ranked_tokens(basis)
        if not ranked:
            ranked = _ranked_tokens("untitled capture")

        title = ""
        for tok in ranked[:3]:
            candidate = f"{title} {_cap(tok)}".strip()
            if len(candidate) > MAX_TITLE_CHARS:
                break
            title = candidate
        if not title:
            title = _cap(ranked[0])[:MAX_TITLE_CHARS]

        tags = ranked[:5]
        if len(tags) < 3:
            for extra in _ranked_tokens(f"{provenance.app_name} {provenance.window_title}") + list(_FILLER_TAGS):
                if extra not in tags:
                    tags.append(extra)
                if len(tags) >= 3:
                    break

        if raw:
            content = raw
        else:
            content = f"Screen capture from {provenance.app_name}: {provenance.window_title}".strip(": ")
        if provenance.app_name:
            context = f"User is using {provenance.app_name}: {provenance.window_title}".strip(": ")
        else:
            context = "User is in a chat conversation"
        return ContentAnalysis(title=title, content=content, context=context, tags=tags).validate()

    def score_related(self, new_item: MemoryItem, existing: list[MemoryItem]) -> list[RelevanceJudgment]:
        self._count("score_related")
        new_tokens = item_token_set(new_item)
        raw: list[RelevanceJudgment] = []
        for item in existing:
            score = _jaccard(new_tokens, item_token_set(item))
            if score <= 0.0:
                continue
            suggest = None
            if score >= self.strong_suggestion_threshold:
                existing_tags = {t.casefold() for t in item.tags}
                missing = [t for t in new_item.tags if t.casefold() not in existing_tags]
                if missing:
                    suggest = [missing[0]]
            raw.append(RelevanceJudgment(item.id, score, suggest_tags=suggest))
        return clamp_judgments(raw, {m.id for m in existing})

    def name_group(self, items: list[MemoryItem]) -> GroupName:
        self._count("name_group")
        newest = max(items, key=lambda m: m.sequence)
        words = [_cap(t) for t in token_sequence(newest.title)[:2]]
        if len(words) < 2:
            words = (words or ["Misc"]) + ["Group"]
        name = " ".join(words)
        return GroupName(name=name, summary=f"Group of {len(items)} related memories.")

    def plan_reorg(self, instruction: str, memories: list[MemoryItem], branches: list) -> ReorgPlan:
        self._count("plan_reorg")
        groups: dict[str, ReorgGroup] = {}

        def slot(tags: list[str]) -> ReorgGroup:
            key = tags[0].casefold() if tags else "general"
            if key not in groups:
                if len(groups) >= 8:
                    key = next(reversed(groups))
                else:
                    groups[key] = ReorgGroup(name=" ".join(_cap(t) for t in key.split()) or "General")
            return groups[key]

        for m in memories:
            slot(m.tags).memory_ids.append(m.id)
        for b in branches:
            slot(b.tags).branch_ids.append(b.id)
        plan = ReorgPlan(list(groups.values()))
        return plan.validate({m.id for m in memories}, {b.id for b in branches})

    def summarize_context(self, snapshot: Snapshot) -> ContextSummary:
        self._count("summarize_context")
        if snapshot.empty:
            return ContextSummary("No context yet.")
        all_mem = [m for c in snapshot.clusters for m in c.memories] + list(snapshot.unclustered)
        snippets = [m for m in all_mem if m.source == "snippet"]
        parts = []
        if snapshot.clusters:
            parts.append(f"Working on {snapshot.clusters[0].name}")
        else:
            parts.append(f"Recent activity: {all_mem[0].title}")
        if snippets:
            latest = max(snippets, key=lambda m: m.sequence)
            parts.append(f"latest note: {latest.title}")
        count = len(all_mem)
        parts.append(f"{count} {'memory' if count == 1 else 'memories'} in view")
        return ContextSummary(("; ".join(parts) + ".")[:MAX_SUMMARY_CHARS]).validate()

    def chat_complete(self, system_contract: str, history: list[dict],
                      context_block: str, user_message: str) -> str:
        self._count("chat_complete")
        mention_hints: list[str] = []
        notes: list[str] = []
        for block in context_block.split("\n- ")[1:] if context_block else []:
            block = "- " + block
            hint = _HINT_RE.search(block)
            if _MENTION_BLOCK_RE.search(block) and hint:
                mention_hints.append(hint.group(1))
            fields = dict(_FIELD_RE.findall(block))
            if "title" in fields:
                note = fields["title"]
                if fields.get("summary"):
                    note += ": " + fields["summary"]
                notes.append(note)
        lines = []
        if mention_hints:
            lines.append("Drawing on " + ", ".join(mention_hints) + ".")
        if notes:
            lines.append("Context notes: " + " | ".join(notes))
        lines.append(f"Answer: {user_message}")
        return "\n".join(lines)


def ensure_valid_plan(plan: ReorgPlan, memory_ids: set[str], branch_ids: set[str]) -> ReorgPlan:
    """Helper for callers that receive plans from arbitrary providers."""
    if not isinstance(plan, ReorgPlan):
        raise ValidationError("provider did not return a plan")
    return plan.validate(memory_ids, branch_ids)
