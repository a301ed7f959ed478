"""Prompt assets, keyed by module name.

The prompt text is part of the provider contract and ships verbatim as
package data; code never edits it inline.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

MODULES = (
    "content_analysis",
    "placement_evolution",
    "group_naming",
    "reorganization",
    "context_understanding",
    "conversational_chat",
)


@lru_cache(maxsize=None)
def load_prompt(module: str) -> str:
    if module not in MODULES:
        raise KeyError(f"unknown prompt module: {module!r}")
    ref = resources.files(__package__).joinpath("prompts", f"{module}.txt")
    return ref.read_text(encoding="utf-8")
