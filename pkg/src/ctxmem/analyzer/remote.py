"""Remote model client: HTTPS JSON chat-completions endpoint.

Configuration via environment:

    CTXMEM_API_BASE   e.g. https://api.openai.com/v1
    CTXMEM_API_KEY    bearer token
    CTXMEM_MODEL      analysis model id
    CTXMEM_CHAT_MODEL chat model id (defaults to CTXMEM_MODEL)

Every analysis capability sends its module prompt as the system message
and a JSON payload as the user message, then parses the strict-JSON reply.
Invariant-violating replies get exactly one structured repair retry before
a hard ValidationError. Transport failures raise ProviderError (retryable).
Request/response bodies are logged at DEBUG with the key redacted.
"""

from __future__ import annotations

import json
import logging
import os
from typing import Any

import httpx

from ..errors import ProviderError, ValidationError
from ..models import MemoryItem, Provenance, Snapshot
from .base import (
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
from .prompts import load_prompt

logger = logging.getLogger(__name__)

_REPAIR_NUDGE = ("Your previous reply was not valid for the required schema: {error}. "
                 "Return ONLY valid JSON matching the schema.")


def _item_payload(item: MemoryItem) -> dict:
    return {
        "id": item.id, "title": item.title, "content": item.summary,
        "context": item.context_sentence, "tags": item.tags, "type": item.source,
        "appName": item.provenance.app_name, "url": item.provenance.url,
    }


class RemoteAnalyzer(Analyzer):
    synchronous = False

    def __init__(self, base_url: str | None = None, api_key: str | None = None,
                 model: str | None = None, chat_model: str | None = None,
                 transport: httpx.BaseTransport | None = None, timeout: float = 60.0):
        self.base_url = (base_url or os.environ.get("CTXMEM_API_BASE", "")).rstrip("/")
        self.api_key = api_key or os.environ.get("CTXMEM_API_KEY", "")
        self.model = model or os.environ.get("CTXMEM_MODEL", "")
        self.chat_model = chat_model or os.environ.get("CTXMEM_CHAT_MODEL", self.model)
        if not self.base_url:
            raise ValidationError("remote analyzer needs CTXMEM_API_BASE")
        self._client = httpx.Client(transport=transport, timeout=timeout)

    # -- transport ---------------------------------------------------------

    def _complete(self, model: str, messages: list[dict]) -> str:
        body = {"model": model, "messages": messages}
        logger.debug("analyzer request: %s", json.dumps(body, ensure_ascii=False))
        try:
            resp = self._client.post(
                f"{self.base_url}/chat/completions",
                headers={"Authorization": f"Bearer {self.api_key}"},
                json=body,
            )
            resp.raise_for_status()
        except httpx.HTTPError as exc:
            raise ProviderError(f"analyzer transport failure: {exc}") from exc
        data = resp.json()
        logger.debug("analyzer response: %s", json.dumps(data, ensure_ascii=False))
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed completion envelope: {exc}") from exc

    def _structured(self, module: str, payload: Any, parse) -> Any:
        """system prompt + JSON payload -> parsed record, with one repair
        retry on schema violations."""
        prompt = load_prompt(module)
        user = json.dumps(payload, ensure_ascii=False)
        messages = [{"role": "system", "content": prompt},
                    {"role": "user", "content": user}]
        reply = self._complete(self.model, messages)
        try:
            return parse(_loads(reply))
        except (ValidationError, ValueError, KeyError, TypeError) as exc:
            messages.append({"role": "assistant", "content": reply})
            messages.append({"role": "user", "content": _REPAIR_NUDGE.format(error=exc)})
            reply = self._complete(self.model, messages)
            try:
                return parse(_loads(reply))
            except (ValidationError, ValueError, KeyError, TypeError) as exc2:
                raise ValidationError(f"{module} output invalid after repair retry: {exc2}") from exc2

    # -- capabilities ------------------------------------------------------

    def analyze_content(self, raw, provenance: Provenance, image=None) -> ContentAnalysis:
        require_content_input(raw, image)
        payload = {"input": raw or "(screenshot attached)",
                   "appName": provenance.app_name,
                   "windowTitle": provenance.window_title,
                   "url": provenance.url}

        def parse(doc: dict) -> ContentAnalysis:
            return ContentAnalysis(doc["title"], doc["content"], doc["context"],
                                   list(doc["tags"])).validate()

        return self._structured("content_analysis", payload, parse)

    def score_related(self, new_item: MemoryItem, existing: list[MemoryItem]) -> list[RelevanceJudgment]:
        if not existing:
            return []
        payload = {"newItem": _item_payload(new_item),
                   "existingItems": [_item_payload(m) for m in existing]}

        def parse(doc: dict) -> list[RelevanceJudgment]:
            raw = [RelevanceJudgment(entry["id"], float(entry["score"]),
                                     entry.get("suggestTags"), entry.get("suggestContext"))
                   for entry in doc.get("related", [])]
            return clamp_judgments(raw, {m.id for m in existing})

        return self._structured("placement_evolution", payload, parse)

    def name_group(self, items: list[MemoryItem]) -> GroupName:
        payload = {"items": [{"title": m.title, "content": m.summary, "tags": m.tags}
                             for m in items]}

        def parse(doc: dict) -> GroupName:
            name = str(doc["name"]).strip()
            if not name:
                raise ValidationError("empty group name")
            return GroupName(name, str(doc.get("summary", "")))

        return self._structured("group_naming", payload, parse)

    def plan_reorg(self, instruction: str, memories: list[MemoryItem], branches: list) -> ReorgPlan:
        payload = {
            "instruction": instruction,
            "memories": [{**_item_payload(m), "parentId": m.branch_id} for m in memories],
            "branches": [{"id": b.id, "name": b.name, "summary": b.summary,
                          "tags": b.tags, "parentId": b.parent_id} for b in branches],
        }
        known_m = {m.id for m in memories}
        known_b = {b.id for b in branches}

        def parse(doc: dict) -> ReorgPlan:
            plan = ReorgPlan([ReorgGroup(g["name"], list(g.get("memoryIds", [])),
                                         list(g.get("branchIds", [])))
                              for g in doc["groups"]])
            return plan.validate(known_m, known_b)

        return self._structured("reorganization", payload, parse)

    def summarize_context(self, snapshot: Snapshot) -> ContextSummary:
        def parse(doc: dict) -> ContextSummary:
            return ContextSummary(str(doc["summary"])).validate()

        return self._structured("context_understanding", snapshot.to_dict(), parse)

    def chat_complete(self, system_contract: str, history: list[dict],
                      context_block: str, user_message: str) -> str:
        content = user_message if not context_block else f"{context_block}\n\n{user_message}"
        messages = ([{"role": "system", "content": system_contract}]
                    + list(history)
                    + [{"role": "user", "content": content}])
        # prose channel: no schema to validate, reply passed through verbatim
        return self._complete(self.chat_model, messages)


def _loads(reply: str) -> dict:
    """Parse a strict-JSON reply, tolerating markdown code fences."""
    text = reply.strip()
    if text.startswith("```"):
        text = text.split("\n", 1)[1] if "\n" in text else ""
        if text.rstrip().endswith("```"):
            text = text.rstrip()[:-3]
    doc = json.loads(text)
    if not isinstance(doc, dict):
        raise ValidationError("reply is not a JSON object")
    return doc
