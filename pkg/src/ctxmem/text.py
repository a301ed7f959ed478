"""Tokenization shared by retrieval scoring and the probe metrics.

A token is a maximal run of Unicode letters/digits (underscore excluded),
case-folded. Retrieval uses set semantics; sequence order is kept for
LCS-based metrics.
"""

from __future__ import annotations

import re

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def token_sequence(text: str) -> list[str]:
    """Ordered tokens with multiplicity preserved."""
    return [t.casefold() for t in _TOKEN_RE.findall(text)]


def tokenize(text: str) -> set[str]:
    """Deduplicated token set; empty text yields the empty set."""
    return set(token_sequence(text))
