"""Analyzer adapter: mock determinism and rule oracles; remote client
behavior (clamping, repair retry, transport errors) over a fake
transport. No network anywhere."""

import json

import httpx
import pytest

from ctxmem.analyzer.base import RelevanceJudgment, clamp_judgments
from ctxmem.analyzer.mock import MockAnalyzer, item_token_set
from ctxmem.analyzer.prompts import MODULES, load_prompt
from ctxmem.analyzer.remote import RemoteAnalyzer
from ctxmem.errors import ArgumentError, ProviderError, ValidationError
from ctxmem.models import Provenance, Snapshot, SnapshotBranch, SnapshotMemory
from ctxmem.text import tokenize

from conftest import mk_item


# -- prompts ------------------------------------------------------------------


def test_all_prompt_assets_load():
    for module in MODULES:
        text = load_prompt(module)
        assert "Return ONLY valid JSON" in text or "Reference Formats" in text


def test_prompt_constraints_present():
    assert "max 24 chars" in load_prompt("content_analysis")
    assert "Return at most 5 items" in load_prompt("placement_evolution")
    assert "2-4 word name in Title Case" in load_prompt("group_naming")
    assert "1-8 groups" in load_prompt("reorganization")
    assert "max 200 characters" in load_prompt("context_understanding")
    assert "(((title(id))))" in load_prompt("conversational_chat")


# -- mock: content analysis ----------------------------------------------------


def test_mock_analysis_invariants_and_determinism():
    mock = MockAnalyzer()
    prov = Provenance("Chrome", "Booking.com - Tokyo Hotels")
    first = mock.analyze_content("budget for Japan trip budget", prov)
    second = mock.analyze_content("budget for Japan trip budget", prov)
    assert first == second
    assert len(first.title) <= 24
    assert 3 <= len(first.tags) <= 5
    assert first.tags[0] == "budget"  # highest frequency token


def test_mock_analysis_empty_input_rejected():
    with pytest.raises(ArgumentError):
        MockAnalyzer().analyze_content("", Provenance("App", "W"), image=None)


def test_mock_analysis_image_uses_provenance_tokens():
    mock = MockAnalyzer()
    result = mock.analyze_content(None, Provenance("Chrome", "Hakone ropeway timetable"),
                                  image=b"\x89PNG fake")
    assert "Hakone".casefold() in [t.casefold() for t in result.tags]
    assert result.content.startswith("Screen capture from Chrome")


def test_mock_analysis_pads_tags_to_three():
    mock = MockAnalyzer()
    result = mock.analyze_content("hello", Provenance("App", ""))
    assert len(result.tags) >= 3


# -- mock: relatedness ---------------------------------------------------------------


def jaccard_oracle(a: set, b: set) -> float:
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def oracle_item_tokens(item) -> set:
    """Independent restatement of the documented mock token universe."""
    from ctxmem.analyzer.mock import STOPWORDS
    text = " ".join(filter(None, [item.title, item.summary,
                                  item.raw_text or "", item.user_memo or ""]))
    return ({t for t in tokenize(text) if t not in STOPWORDS}
            | {t.casefold() for t in item.tags})


def test_mock_scores_equal_jaccard_oracle():
    mock = MockAnalyzer()
    new = mk_item(mid="new", title="tokyo budget", summary="trip spending",
                  tags=["budget", "travel"], sequence=10)
    existing = [
        mk_item(mid="e1", title="tokyo hotels", summary="hotel list",
                tags=["travel", "hotels"], sequence=1),
        mk_item(mid="e2", title="sourdough", summary="yeast fermentation",
                tags=["baking"], app="Oven", window="Recipes", sequence=2),
    ]
    judgments = mock.score_related(new, existing)
    by_id = {j.related_id: j.score for j in judgments}
    new_tokens = oracle_item_tokens(new)
    for item in existing:
        expected = jaccard_oracle(new_tokens, oracle_item_tokens(item))
        if expected > 0:
            assert by_id[item.id] == pytest.approx(expected)
        else:
            assert item.id not in by_id
    assert item_token_set(new) == new_tokens


def test_mock_unrelated_items_score_zero():
    mock = MockAnalyzer()
    new = mk_item(mid="new", title="sourdough starter", summary="yeast feeding",
                  tags=["baking", "bread", "yeast"], app="Oven", window="Recipes",
                  sequence=9)
    existing = [mk_item(mid="e1", sequence=1)]  # travel defaults
    assert mock.score_related(new, existing) == []


def test_mock_scores_empty_existing():
    assert MockAnalyzer().score_related(mk_item(), []) == []


def test_mock_truncates_to_top_five():
    mock = MockAnalyzer()
    new = mk_item(mid="new", sequence=99)
    existing = [mk_item(mid=f"e{i}", sequence=i,
                        title=f"Tokyo Hotels {i}") for i in range(1, 9)]
    judgments = mock.score_related(new, existing)
    assert len(judgments) <= 5
    scores = [j.score for j in judgments]
    assert scores == sorted(scores, reverse=True)
    assert all(0.0 <= s <= 1.0 for s in scores)


def test_clamp_judgments_normalizes():
    raw = [RelevanceJudgment("a", 1.7), RelevanceJudgment("b", -0.5),
           RelevanceJudgment("ghost", 0.9)] + \
          [RelevanceJudgment(f"x{i}", 0.1 * i) for i in range(6)]
    known = {"a", "b"} | {f"x{i}" for i in range(6)}
    out = clamp_judgments(raw, known)
    assert len(out) == 5
    assert all(0.0 <= j.score <= 1.0 for j in out)
    assert all(j.related_id in known for j in out)
    assert out[0].related_id == "a" and out[0].score == 1.0


# -- mock: naming / reorg / summary / chat ----------------------------------------------


def test_mock_group_name_rule():
    mock = MockAnalyzer()
    items = [mk_item(mid="a", title="tokyo hotel search", sequence=1),
             mk_item(mid="b", title="budget planning sheet", sequence=2)]
    named = mock.name_group(items)
    assert named.name == "Budget Planning"  # first two title tokens, newest item
    assert 2 <= len(named.name.split()) <= 4
    single = mock.name_group([mk_item(mid="c", title="hakone", sequence=3)])
    assert single.name == "Hakone Group"


def test_mock_reorg_groups_by_first_tag():
    mock = MockAnalyzer()
    memories = [mk_item(mid="m1", tags=["travel", "x"], sequence=1),
                mk_item(mid="m2", tags=["research"], sequence=2),
                mk_item(mid="m3", tags=["travel"], sequence=3),
                mk_item(mid="m4", tags=[], sequence=4)]
    plan = mock.plan_reorg("group these by project", memories, [])
    by_name = {g.name: g.memory_ids for g in plan.groups}
    assert by_name["Travel"] == ["m1", "m3"]
    assert by_name["Research"] == ["m2"]
    assert by_name["General"] == ["m4"]


def test_mock_summary_empty_snapshot_fixed_text():
    assert MockAnalyzer().summarize_context(Snapshot([], [], [])).summary == "No context yet."


def test_mock_summary_under_200_and_weights_snippets():
    memories = [SnapshotMemory(f"m{i}", f"title {i}", "c", "ctx", "observation", i)
                for i in range(4)]
    memories.append(SnapshotMemory("s1", "key insight note", "c", "ctx", "snippet", 9))
    snap = Snapshot([SnapshotBranch("b1", "Travel Planning", "s", [], memories)], [], [])
    summary = MockAnalyzer().summarize_context(snap).summary
    assert len(summary) <= 200
    assert "Travel Planning" in summary
    assert "key insight note" in summary


def test_mock_chat_echoes_exactly_mention_tags():
    mock = MockAnalyzer()
    block = ("Memory Context:\n"
             "- [MENTION|SNIPPET] id=mem_1\n"
             "  title: Trip Budget\n"
             "  context: ctx\n"
             "  summary: numbers\n"
             "  tags: travel\n"
             "  (reference as: (((Trip Budget(mem_1)))))\n"
             "- [OBSERVATION] id=mem_2\n"
             "  title: Hotel Page\n"
             "  context: ctx\n"
             "  summary: listing\n"
             "  tags: travel\n"
             "  (reference as: (((Hotel Page(mem_2)))))")
    response = mock.chat_complete("contract", [], block, "what fits my budget?")
    from ctxmem.retrieval import parse_references
    tags = parse_references(response)
    assert len(tags) == 1
    assert tags[0].ref_id == "mem_1"
    assert response == mock.chat_complete("contract", [], block, "what fits my budget?")


def test_mock_chat_empty_context_zero_tags():
    from ctxmem.retrieval import parse_references
    response = MockAnalyzer().chat_complete("contract", [], "", "hello")
    assert parse_references(response) == []


# -- remote client ------------------------------------------------------------------


def transport_with(replies):
    """Sequential canned chat-completion replies; records request bodies."""
    calls = []

    def handler(request: httpx.Request) -> httpx.Response:
        calls.append(json.loads(request.content))
        body = replies[min(len(calls) - 1, len(replies) - 1)]
        if isinstance(body, Exception):
            raise body
        return httpx.Response(200, json={
            "choices": [{"message": {"content": body}}]})

    return httpx.MockTransport(handler), calls


def remote(replies):
    transport, calls = transport_with(replies)
    client = RemoteAnalyzer(base_url="https://model.internal/v1", api_key="k",
                            model="m-analysis", chat_model="m-chat",
                            transport=transport)
    return client, calls


def test_remote_analyze_content_parses_valid_json():
    client, calls = remote([json.dumps({
        "title": "Tokyo Hotels", "content": "desc", "context": "ctx",
        "tags": ["a", "b", "c"]})])
    result = client.analyze_content("text", Provenance("Chrome", "W"))
    assert result.title == "Tokyo Hotels"
    assert calls[0]["model"] == "m-analysis"
    assert calls[0]["messages"][0]["content"] == load_prompt("content_analysis")


def test_remote_repair_retry_then_success():
    bad = json.dumps({"title": "x" * 30, "content": "d", "context": "c",
                      "tags": ["a", "b", "c"]})
    good = json.dumps({"title": "ok", "content": "d", "context": "c",
                       "tags": ["a", "b", "c"]})
    client, calls = remote([bad, good])
    result = client.analyze_content("text", Provenance("Chrome", "W"))
    assert result.title == "ok"
    assert len(calls) == 2
    assert "Return ONLY valid JSON" in calls[1]["messages"][-1]["content"]


def test_remote_repair_retry_then_hard_error():
    client, _ = remote(["not json at all", "still not json"])
    with pytest.raises(ValidationError):
        client.analyze_content("text", Provenance("Chrome", "W"))


def test_remote_transport_failure_is_retryable_error():
    transport = httpx.MockTransport(
        lambda request: (_ for _ in ()).throw(httpx.ConnectError("down")))
    client = RemoteAnalyzer(base_url="https://model.internal/v1", api_key="k",
                            model="m", transport=transport)
    with pytest.raises(ProviderError):
        client.analyze_content("text", Provenance("Chrome", "W"))


def test_remote_judgments_clamped_and_truncated():
    related = [{"id": f"e{i}", "score": 0.1 * i + 0.9} for i in range(7)]
    related.append({"id": "ghost", "score": 5.0})
    client, _ = remote([json.dumps({"related": related})])
    existing = [mk_item(mid=f"e{i}", sequence=i + 1) for i in range(7)]
    judgments = client.score_related(mk_item(mid="new", sequence=99), existing)
    assert len(judgments) == 5
    assert all(0.0 <= j.score <= 1.0 for j in judgments)
    assert all(j.related_id != "ghost" for j in judgments)


def test_remote_plan_validated_with_repair():
    bad_plan = json.dumps({"groups": [{"name": "A", "memoryIds": ["m1", "m1"]}]})
    good_plan = json.dumps({"groups": [{"name": "A", "memoryIds": ["m1"]}]})
    client, calls = remote([bad_plan, good_plan])
    plan = client.plan_reorg("group", [mk_item(mid="m1")], [])
    assert plan.groups[0].memory_ids == ["m1"]
    assert len(calls) == 2


def test_remote_chat_passthrough_and_model_choice():
    client, calls = remote(["free prose, no schema ((("])
    text = client.chat_complete("sys", [{"role": "user", "content": "earlier"}],
                                "CONTEXT", "question")
    assert text == "free prose, no schema ((("
    assert calls[0]["model"] == "m-chat"
    assert calls[0]["messages"][0]["role"] == "system"
    assert calls[0]["messages"][-1]["content"] == "CONTEXT\n\nquestion"


def test_remote_markdown_fence_tolerated():
    fenced = "```json\n" + json.dumps({"summary": "short"}) + "\n```"
    client, _ = remote([fenced])
    assert client.summarize_context(Snapshot([], [], [])).summary == "short"


def test_remote_invariant_violation_twice_is_validation_error():
    bad = json.dumps({"title": "x" * 30, "content": "d", "context": "c",
                      "tags": ["a", "b", "c"]})
    client, calls = remote([bad, bad])
    with pytest.raises(ValidationError) as err:
        client.analyze_content("text", Provenance("Chrome", "W"))
    assert "after repair retry" in str(err.value)
    assert len(calls) == 2  # exactly one repair attempt
