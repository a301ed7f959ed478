"""Preference probe: variant construction, jaccard, both gates at exact
boundaries, NCD against the standalone script, ROUGE-L arithmetic,
calibration report."""

import json
import random
import string
import subprocess
import sys
from pathlib import Path

import pytest

from ctxmem.errors import ArgumentError
from ctxmem.probe import (
    CalibrationPair,
    build_variants,
    jaccard,
    load_calibration_corpus,
    ncd,
    rouge_l,
    run_calibration,
    stage1_equivalent,
    stage1_gate,
    stage2_gate,
    stage2_show_both,
    strip_snippets,
)
from ctxmem.retrieval import Query
from ctxmem.tree import MemoryTree

from conftest import FIXTURES, mk_item

SCRIPT = Path(__file__).parent.parent / "scripts" / "ncd_reference.py"


def corpus_tree(sources):
    tree = MemoryTree("s_p")
    for i, source in enumerate(sources, 1):
        item = mk_item(mid=f"mem_{i:04d}", source=source, sequence=i,
                       title=f"item {i}", summary=f"topic{i} words",
                       tags=[f"tag{i}"], app="" if source == "chat" else "Chrome",
                       user_memo=f"memo sentinel {i}" if source == "snippet" else None,
                       captured_at=1_700_000_000_000 + i)
        tree.memories[item.id] = item
    return tree


# -- variants -------------------------------------------------------------------


def test_variants_identical_without_snippets():
    tree = corpus_tree(["observation", "chat", "observation"])
    a, b = build_variants(tree, Query("topic1 topic2", now=1_700_000_100_000))
    assert a.memory_ids == b.memory_ids
    assert a.label == "A_full" and b.label == "B_noSnippet"


def test_variants_all_snippets_yields_empty_b():
    tree = corpus_tree(["snippet", "snippet"])
    a, b = build_variants(tree, Query("topic1", now=1_700_000_100_000))
    assert a.memory_ids and not b.memory_ids
    assert b.rendered_text == ""


def test_variant_b_never_contains_snippets_random():
    rng = random.Random(8)
    for _ in range(100):
        sources = [rng.choice(["snippet", "observation", "chat"])
                   for _ in range(rng.randrange(1, 10))]
        tree = corpus_tree(sources)
        query = Query(f"topic{rng.randrange(1, 10)} words",
                      now=1_700_000_200_000)
        _, b = build_variants(tree, query)
        snippet_ids = {m.id for m in tree.memories.values() if m.source == "snippet"}
        assert not (set(b.memory_ids) & snippet_ids)


def test_variant_b_strips_memo_sentinels_from_render():
    tree = corpus_tree(["snippet", "observation", "snippet"])
    a, b = build_variants(tree, Query("topic1 topic2 topic3 words",
                                      now=1_700_000_100_000))
    assert "memo sentinel" in a.rendered_text
    assert "memo sentinel" not in b.rendered_text


def test_variant_b_drops_explicit_snippet_refs():
    tree = corpus_tree(["snippet", "observation"])
    query = Query("words", explicit_memory_ids=["mem_0001"], now=1_700_000_100_000)
    a, b = build_variants(tree, query)
    assert "mem_0001" in a.memory_ids
    assert "mem_0001" not in b.memory_ids


def test_strip_snippets_drops_links_touching_snippets():
    tree = corpus_tree(["snippet", "observation", "observation"])
    tree.add_link("mem_0001", "mem_0002", 0.9)
    tree.add_link("mem_0002", "mem_0003", 0.85)
    stripped = strip_snippets(tree)
    assert [l.pair for l in stripped.links] == [("mem_0002", "mem_0003")]


# -- jaccard ---------------------------------------------------------------------


def test_jaccard_cases():
    assert jaccard({"a", "b"}, {"a", "b"}) == 1.0
    assert jaccard({"a"}, {"b"}) == 0.0
    assert jaccard({"a", "b"}, {"b", "c"}) == pytest.approx(1 / 3)
    assert jaccard(set(), set()) == 1.0
    assert jaccard(set(), {"a"}) == 0.0


# -- stage 1 ----------------------------------------------------------------------


def test_stage1_thresholds_inclusive():
    assert stage1_equivalent(1.0, 1.0)
    assert stage1_equivalent(17 / 20, 23 / 25)      # exactly (0.85, 0.92)
    assert not stage1_equivalent(0.86, 0.91)        # conjunction fails
    assert not stage1_equivalent(0.84, 1.0)
    assert not stage1_equivalent(1.0, 0.9199999)


def test_stage1_gate_collapses_identical_variants():
    tree = corpus_tree(["observation", "observation"])
    a, b = build_variants(tree, Query("topic1", now=1_700_000_100_000))
    decision = stage1_gate(a, b)
    assert decision.stage1_equivalent
    assert decision.stage2_show is None
    assert decision.report.jaccard_mem == 1.0
    assert decision.report.jaccard_tok == 1.0
    assert decision.report.ncd is None


def test_stage1_gate_opens_on_snippet_divergence():
    tree = corpus_tree(["snippet", "snippet", "observation"])
    a, b = build_variants(tree, Query("topic1 topic2 words", now=1_700_000_100_000))
    decision = stage1_gate(a, b)
    assert not decision.stage1_equivalent


# -- ncd --------------------------------------------------------------------------


def test_ncd_repeated_text_self_low():
    x = ("the quick brown fox jumps over the lazy dog. " * 50)[:2000]
    assert ncd(x, x) <= 0.2


def test_ncd_independent_random_pairs_high():
    rng = random.Random(42)
    alnum = string.ascii_letters + string.digits
    a = "".join(rng.choice(alnum) for _ in range(2000))
    b = "".join(rng.choice(alnum) for _ in range(2000))
    assert ncd(a, b) >= 0.85


def test_ncd_empty_inputs_rejected():
    with pytest.raises(ArgumentError):
        ncd("", "x")
    with pytest.raises(ArgumentError):
        ncd("x", b"")


def test_ncd_matches_standalone_script_to_1e12():
    corpus = json.loads((FIXTURES / "probe_corpus.json").read_text(encoding="utf-8"))
    out = subprocess.run([sys.executable, str(SCRIPT),
                          str(FIXTURES / "probe_corpus.json")],
                         capture_output=True, text=True, check=True)
    reference = {}
    for line in out.stdout.splitlines():
        pair_id, value = line.split()
        reference[pair_id] = float(value)
    assert len(reference) == 50
    for pair in corpus["pairs"]:
        engine_value = ncd(pair["a"], pair["b"])
        assert engine_value == pytest.approx(reference[pair["id"]], abs=1e-12)


def test_ncd_bounds_on_fixture_corpus():
    corpus = json.loads((FIXTURES / "probe_corpus.json").read_text(encoding="utf-8"))
    for pair in corpus["pairs"]:
        value = ncd(pair["a"], pair["b"])
        assert 0.0 <= value <= 1.1


# -- rouge-l -----------------------------------------------------------------------


def test_rouge_identical_and_disjoint():
    assert rouge_l("tokyo hotel search", "tokyo hotel search") == 1.0
    assert rouge_l("alpha beta", "gamma delta") == 0.0
    assert rouge_l("", "x") == 0.0


def test_rouge_lcs_f1_arithmetic():
    # LCS("a b c", "a c") = 2; P = 1.0, R = 2/3, F1 = 0.8
    assert rouge_l("a b c", "a c") == pytest.approx(0.8)
    assert rouge_l("a c", "a b c") == pytest.approx(0.8)  # beta=1 is symmetric


def test_rouge_subsequence_not_substring():
    assert rouge_l("a x b y c", "a b c") == pytest.approx(2 * (3 / 3) * (3 / 5) / (3 / 3 + 3 / 5))


# -- stage 2 -----------------------------------------------------------------------


def test_stage2_strict_inequality():
    assert not stage2_show_both(0.7, tau=0.7)
    assert stage2_show_both(0.71, tau=0.7)
    assert not stage2_show_both(0.699999, tau=0.7)


def test_stage2_identical_responses_single_path():
    text = ("Here is a summary of your travel budget with context. " * 12)[:600]
    assert ncd(text, text) < 0.7  # fixtures >= 500 bytes compress near-identically
    from ctxmem.probe import GateDecision, SimilarityReport
    gate = GateDecision(False, SimilarityReport(0.1, 0.1))
    gate = stage2_gate(gate, text, text)
    assert gate.stage2_show is False
    assert gate.report.ncd == pytest.approx(ncd(text, text))
    assert gate.report.rouge_l == 1.0


def test_stage2_divergent_responses_show_both():
    rng = random.Random(9)
    alnum = string.ascii_letters + " "
    a = "".join(rng.choice(alnum) for _ in range(1500))
    b = "".join(rng.choice(alnum) for _ in range(1500))
    from ctxmem.probe import GateDecision, SimilarityReport
    gate = stage2_gate(GateDecision(False, SimilarityReport(0.1, 0.1)), a, b)
    assert gate.stage2_show is True
    assert gate.report.ncd > 0.7


# -- calibration --------------------------------------------------------------------


def test_calibration_identical_pairs_zero_separation():
    pairs = [CalibrationPair(f"p{i}", "same text here", "same text here", i % 2 == 0)
             for i in range(6)]
    report = run_calibration(pairs)
    means = report["groupMeans"]["ncd"]
    assert means["substantive"] == pytest.approx(means["nonSubstantive"])
    assert report["metrics"]["jaccard"]["median"] == 1.0
    assert report["metrics"]["rougeL"]["sd"] == 0.0


def test_calibration_matches_hand_computed_means():
    pairs = [
        CalibrationPair("p0", "alpha beta gamma", "alpha beta gamma", False),
        CalibrationPair("p1", "alpha beta", "alpha beta delta", False),
        CalibrationPair("p2", "one two three", "four five six", True),
        CalibrationPair("p3", "seven eight", "nine ten eleven", True),
    ]
    report = run_calibration(pairs)
    jac = [1.0, 2 / 3, 0.0, 0.0]
    assert report["metrics"]["jaccard"]["mean"] == pytest.approx(sum(jac) / 4)
    # sorted [0, 0, 2/3, 1.0] -> median (0 + 2/3) / 2
    assert report["metrics"]["jaccard"]["median"] == pytest.approx(1 / 3)
    assert report["groupMeans"]["jaccard"]["substantive"] == 0.0
    assert report["groupMeans"]["jaccard"]["nonSubstantive"] == pytest.approx((1.0 + 2 / 3) / 2)
    assert report["counts"] == {"substantive": 2, "nonSubstantive": 2}


def test_calibration_empty_corpus_rejected():
    with pytest.raises(ArgumentError):
        run_calibration([])


def test_calibration_report_schema_and_roundtrip(tmp_path):
    pairs = load_calibration_corpus(FIXTURES / "probe_corpus.json")
    report = run_calibration(pairs)
    assert report["schema"] == "probe-report/1"
    assert report["gzipLevel"] == 6
    assert report["pairCount"] == 50
    assert len(report["pairs"]) == 50
    # constructed corpus separates: substantive pairs far apart in NCD
    assert report["groupMeans"]["ncd"]["substantive"] > \
        report["groupMeans"]["ncd"]["nonSubstantive"]
    path = tmp_path / "report.json"
    path.write_text(json.dumps(report, sort_keys=True), encoding="utf-8")
    assert json.loads(path.read_text(encoding="utf-8")) == \
        json.loads(json.dumps(report, sort_keys=True))


def test_funnel_counts_from_demo_log():
    from ctxmem.probe import funnel
    from ctxmem.store import SessionStore

    events = SessionStore.open(FIXTURES / "demo_session", "s_demo").read_events()
    # independent aggregation straight off the raw records
    queries = sum(1 for e in events if e.kind == "chat")
    triggered = sum(1 for e in events
                    if e.kind == "probe" and e.payload.get("stage2Show"))
    chosen_a = sum(1 for e in events
                   if e.kind == "preference" and e.payload["chosen"] == "A")
    stats = funnel(events)
    assert stats["queries"] == queries == 4
    assert stats["triggered"] == triggered == 1
    assert stats["chosenWithSnippet"] == chosen_a == 1
    assert stats["chosenWithoutSnippet"] == 0
    assert stats["triggered"] <= stats["queries"]
    assert stats["chosenWithSnippet"] + stats["chosenWithoutSnippet"] <= stats["triggered"]
