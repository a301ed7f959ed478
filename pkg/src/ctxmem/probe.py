"""Snippet-ablation preference probe.

For a query, two context variants are assembled: A over the full tree, B
over the tree with every snippet (and thus every in-situ memo) removed.
A two-stage gate decides whether a side-by-side choice is warranted:
stage 1 deems the contexts equivalent when both Jaccard thresholds hold
(inclusive); stage 2 shows both responses only when their normalized
compression distance strictly exceeds tau. Compression lengths use gzip
at a pinned level so results reproduce across platforms.
"""

from __future__ import annotations

import gzip
import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ArgumentError
from .retrieval import Query, format_context, retrieve
from .text import token_sequence, tokenize
from .tree import MemoryTree

REPORT_SCHEMA = "probe-report/1"
GZIP_LEVEL = 6
DEFAULT_TAU = 0.7
DEFAULT_JMEM = 0.85
DEFAULT_JTOK = 0.92


@dataclass
class ContextVariant:
    label: str                       # "A_full" | "B_noSnippet"
    memory_ids: list[str]
    rendered_text: str
    content_tokens: set[str] = field(default_factory=set)

    def to_dict(self) -> dict:
        return {"label": self.label, "memoryIds": list(self.memory_ids),
                "renderedText": self.rendered_text}


@dataclass
class SimilarityReport:
    jaccard_mem: float
    jaccard_tok: float
    ncd: float | None = None
    rouge_l: float | None = None

    def to_dict(self) -> dict:
        return {"jaccardMem": self.jaccard_mem, "jaccardTok": self.jaccard_tok,
                "ncd": self.ncd, "rougeL": self.rouge_l}


@dataclass
class GateDecision:
    stage1_equivalent: bool
    report: SimilarityReport
    stage2_show: bool | None = None  # present iff stage 1 did not collapse

    def to_dict(self) -> dict:
        return {"stage1Equivalent": self.stage1_equivalent,
                "stage2Show": self.stage2_show, "report": self.report.to_dict()}


@dataclass
class PreferenceRecord:
    query_id: str
    chosen: str                      # "A" | "B"
    shown_at: int
    chosen_at: int

    def to_dict(self) -> dict:
        return {"queryId": self.query_id, "chosen": self.chosen,
                "shownAt": self.shown_at, "chosenAt": self.chosen_at}


# -- context variants ---------------------------------------------------------


def strip_snippets(tree: MemoryTree) -> MemoryTree:
    """View of the tree with snippet memories (and links touching them)
    removed; branches are shared, memories are the same objects."""
    kept = {mid: m for mid, m in tree.memories.items() if m.source != "snippet"}
    links = [l for l in tree.links if l.memory_a in kept and l.memory_b in kept]
    return MemoryTree(tree.session_id, kept, tree.branches, links)


def _content_tokens(tree: MemoryTree, bundle) -> set[str]:
    """Tokens of the variant's substantive content: entry fields only, the
    fixed template markers excluded."""
    tokens: set[str] = set()
    for entry in bundle.entries:
        if entry.kind == "memory":
            tokens |= tokenize(tree.memory(entry.ref_id).token_text())
        else:
            branch = tree.branch(entry.ref_id)
            tokens |= tokenize(" ".join([branch.name, branch.summary, *branch.tags]))
    return tokens


def build_variants(tree: MemoryTree, query: Query, slot_limit: int = 8,
                   rep_count: int = 3, source_boost: float = 0.0
                   ) -> tuple[ContextVariant, ContextVariant]:
    """Assemble the full and snippet-ablated contexts under identical
    retrieval settings."""
    bundle_a = retrieve(tree, query, slot_limit, rep_count, source_boost)
    bundle_a.rendered_text = format_context(bundle_a, tree)

    stripped = strip_snippets(tree)
    query_b = Query(
        text=query.text,
        explicit_memory_ids=[mid for mid in query.explicit_memory_ids
                             if mid in stripped.memories],
        explicit_branch_ids=list(query.explicit_branch_ids),
        now=query.now)
    bundle_b = retrieve(stripped, query_b, slot_limit, rep_count, source_boost)
    bundle_b.rendered_text = format_context(bundle_b, stripped)

    variant_a = ContextVariant("A_full", bundle_a.memory_ids(), bundle_a.rendered_text,
                               _content_tokens(tree, bundle_a))
    variant_b = ContextVariant("B_noSnippet", bundle_b.memory_ids(), bundle_b.rendered_text,
                               _content_tokens(stripped, bundle_b))
    return variant_a, variant_b


# -- similarity metrics ---------------------------------------------------------


def jaccard(set_a: set, set_b: set) -> float:
    """Intersection over union; two empty sets count as identical (1.0)."""
    if not set_a and not set_b:
        return 1.0
    return len(set_a & set_b) / len(set_a | set_b)


def gzip_len(data: bytes, level: int = GZIP_LEVEL) -> int:
    """Pinned-compressor byte length (gzip container, zeroed mtime)."""
    return len(gzip.compress(data, compresslevel=level, mtime=0))


def ncd(a: bytes | str, b: bytes | str, level: int = GZIP_LEVEL) -> float:
    """Normalized compression distance over gzip lengths:
    (C(ab) - min(C(a), C(b))) / max(C(a), C(b))."""
    a_bytes = a.encode("utf-8") if isinstance(a, str) else a
    b_bytes = b.encode("utf-8") if isinstance(b, str) else b
    if not a_bytes or not b_bytes:
        raise ArgumentError("ncd needs non-empty inputs")
    ca = gzip_len(a_bytes, level)
    cb = gzip_len(b_bytes, level)
    cab = gzip_len(a_bytes + b_bytes, level)
    return (cab - min(ca, cb)) / max(ca, cb)


def rouge_l(a: str, b: str) -> float:
    """LCS F1 (beta=1) over the shared tokenizer's token sequences."""
    ta, tb = token_sequence(a), token_sequence(b)
    if not ta or not tb:
        return 0.0
    lcs = _lcs_len(ta, tb)
    if lcs == 0:
        return 0.0
    precision = lcs / len(tb)
    recall = lcs / len(ta)
    return 2 * precision * recall / (precision + recall)


def _lcs_len(a: list[str], b: list[str]) -> int:
    if len(b) > len(a):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, 1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


# -- gates ----------------------------------------------------------------------


def stage1_equivalent(jaccard_mem: float, jaccard_tok: float,
                      jmem_threshold: float = DEFAULT_JMEM,
                      jtok_threshold: float = DEFAULT_JTOK) -> bool:
    """Contexts are equivalent when both thresholds hold, inclusive."""
    return jaccard_mem >= jmem_threshold and jaccard_tok >= jtok_threshold


def stage1_gate(variant_a: ContextVariant, variant_b: ContextVariant,
                jmem_threshold: float = DEFAULT_JMEM,
                jtok_threshold: float = DEFAULT_JTOK) -> GateDecision:
    j_mem = jaccard(set(variant_a.memory_ids), set(variant_b.memory_ids))
    j_tok = jaccard(variant_a.content_tokens, variant_b.content_tokens)
    equivalent = stage1_equivalent(j_mem, j_tok, jmem_threshold, jtok_threshold)
    return GateDecision(equivalent, SimilarityReport(j_mem, j_tok))


def stage2_show_both(ncd_value: float, tau: float = DEFAULT_TAU) -> bool:
    """Responses are substantively different only strictly above tau."""
    return ncd_value > tau


def stage2_gate(decision: GateDecision, response_a: str, response_b: str,
                tau: float = DEFAULT_TAU, level: int = GZIP_LEVEL) -> GateDecision:
    """Complete a non-equivalent decision with the response-level gate."""
    value = ncd(response_a, response_b, level)
    decision.report.ncd = value
    decision.report.rouge_l = rouge_l(response_a, response_b)
    decision.stage2_show = stage2_show_both(value, tau)
    return decision


# -- calibration ------------------------------------------------------------------


@dataclass
class CalibrationPair:
    pair_id: str
    response_a: str
    response_b: str
    substantive: bool


def run_calibration(pairs: list[CalibrationPair], level: int = GZIP_LEVEL) -> dict:
    """Per-metric distributions and group means over a labeled corpus of
    response pairs, as a machine-readable report with plot-ready rows."""
    if not pairs:
        raise ArgumentError("calibration needs a non-empty corpus")
    rows = []
    for pair in pairs:
        rows.append({
            "id": pair.pair_id,
            "substantive": pair.substantive,
            "ncd": ncd(pair.response_a, pair.response_b, level),
            "rougeL": rouge_l(pair.response_a, pair.response_b),
            "jaccard": jaccard(tokenize(pair.response_a), tokenize(pair.response_b)),
        })

    def dist(values: list[float]) -> dict:
        return {"median": statistics.median(values),
                "mean": statistics.fmean(values),
                "sd": statistics.pstdev(values) if len(values) > 1 else 0.0}

    metrics = {}
    group_means = {}
    for metric in ("ncd", "rougeL", "jaccard"):
        values = [r[metric] for r in rows]
        metrics[metric] = dist(values)
        sub = [r[metric] for r in rows if r["substantive"]]
        non = [r[metric] for r in rows if not r["substantive"]]
        group_means[metric] = {
            "substantive": statistics.fmean(sub) if sub else None,
            "nonSubstantive": statistics.fmean(non) if non else None,
        }
    return {
        "schema": REPORT_SCHEMA,
        "gzipLevel": level,
        "pairCount": len(rows),
        "counts": {"substantive": sum(1 for r in rows if r["substantive"]),
                   "nonSubstantive": sum(1 for r in rows if not r["substantive"])},
        "metrics": metrics,
        "groupMeans": group_means,
        "pairs": rows,
    }


def load_calibration_corpus(path) -> list[CalibrationPair]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return [CalibrationPair(p["id"], p["a"], p["b"], bool(p["substantive"]))
            for p in doc["pairs"]]


def funnel(events: list) -> dict:
    """Aggregate probe funnel counts from a session event list."""
    queries = triggered = chosen_full = chosen_ablated = 0
    for event in events:
        if event.kind == "chat":
            queries += 1
        elif event.kind == "probe" and event.payload.get("stage2Show"):
            triggered += 1
        elif event.kind == "preference":
            if event.payload.get("chosen") == "A":
                chosen_full += 1
            else:
                chosen_ablated += 1
    return {"queries": queries, "triggered": triggered,
            "chosenWithSnippet": chosen_full, "chosenWithoutSnippet": chosen_ablated}
