"""Analyzer adapter: provider contract, deterministic mock, remote client."""

from .base import (
    Analyzer,
    ContentAnalysis,
    ContextSummary,
    GroupName,
    RelevanceJudgment,
    ReorgGroup,
    ReorgPlan,
    clamp_judgments,
)
from .mock import MockAnalyzer
from .prompts import load_prompt

__all__ = [
    "Analyzer",
    "ContentAnalysis",
    "ContextSummary",
    "GroupName",
    "RelevanceJudgment",
    "ReorgGroup",
    "ReorgPlan",
    "MockAnalyzer",
    "clamp_judgments",
    "load_prompt",
]
