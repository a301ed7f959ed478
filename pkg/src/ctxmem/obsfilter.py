"""Two-stage redundancy control for passive screenshots.

Stage 1 runs before any analysis: a 256-bit block-mean perceptual hash of
the 16x16 grayscale downsample, compared by Hamming distance against
recently accepted hashes. Stage 2 runs after placement: the new
observation is hidden when its best analyzer relevance score against
recent visible observations/snippets crosses the threshold.

Hash definition (pinned so independent scripts reproduce it exactly):
  - luma = floor(0.299 R + 0.587 G + 0.114 B + 0.5), alpha ignored
  - exact area-average (box) resample onto a 16x16 grid, fractional pixel
    coverage included
  - bit[r*16+c] = 1 iff cell mean > median of the 256 cell means
    (ties are 0); bits packed MSB-first into 32 bytes, rendered as 64 hex
    chars.
"""

from __future__ import annotations

import io
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from PIL import Image, UnidentifiedImageError

from .analyzer.base import RelevanceJudgment
from .errors import ArgumentError, FormatError
from .models import MemoryItem
from .tree import MemoryTree

HASH_BITS = 256
GRID = 16


@dataclass(frozen=True)
class PerceptualHash:
    bits: bytes                      # 32 bytes, MSB-first
    source_memory_id: str | None = None

    def __post_init__(self):
        if len(self.bits) != HASH_BITS // 8:
            raise ArgumentError(f"hash must be {HASH_BITS} bits")

    def hex(self) -> str:
        return self.bits.hex()

    @classmethod
    def from_hex(cls, hex_str: str, source_memory_id: str | None = None) -> "PerceptualHash":
        return cls(bytes.fromhex(hex_str), source_memory_id)


@dataclass
class FilterDecision:
    stage: str                       # "dedup" | "autohide"
    outcome: str                     # "keep" | "discard" | "hide"
    min_hamming: int | None = None
    max_sigma: float | None = None
    matched_id: str | None = None

    def to_dict(self) -> dict:
        return {"stage": self.stage, "outcome": self.outcome,
                "evidence": {"minHamming": self.min_hamming,
                             "maxSigma": self.max_sigma,
                             "matchedId": self.matched_id}}


def _overlap_weights(n_pixels: int, n_cells: int) -> np.ndarray:
    """(n_cells, n_pixels) matrix of fractional pixel coverage per cell."""
    weights = np.zeros((n_cells, n_pixels), dtype=np.float64)
    for cell in range(n_cells):
        lo = cell * n_pixels / n_cells
        hi = (cell + 1) * n_pixels / n_cells
        for px in range(int(lo), min(int(np.ceil(hi)), n_pixels)):
            weights[cell, px] = min(hi, px + 1) - max(lo, px)
    return weights


def block_means(luma: np.ndarray) -> np.ndarray:
    """Exact 16x16 area-average of a float64 H x W luma image."""
    h, w = luma.shape
    wy = _overlap_weights(h, GRID)
    wx = _overlap_weights(w, GRID)
    sums = wy @ luma @ wx.T
    area = (h / GRID) * (w / GRID)
    return sums / area


def luma_image(image: Image.Image) -> np.ndarray:
    """BT.601 luma as float64, integer-rounded (floor(x + 0.5))."""
    if image.mode in ("L", "I;16", "I"):
        arr = np.asarray(image.convert("L"), dtype=np.float64)
        return arr
    rgb = np.asarray(image.convert("RGB"), dtype=np.float64)
    return np.floor(0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2] + 0.5)


def phash(image_bytes: bytes) -> PerceptualHash:
    """Perceptual hash of an encoded PNG/JPEG image."""
    try:
        image = Image.open(io.BytesIO(image_bytes))
        image.load()
    except (UnidentifiedImageError, OSError) as exc:
        raise FormatError(f"undecodable image: {exc}") from exc
    if image.width < GRID or image.height < GRID:
        raise ArgumentError(f"image must be at least {GRID}x{GRID} px")
    means = block_means(luma_image(image))
    median = float(np.median(means))
    bits = 0
    for value in means.reshape(-1):
        bits = (bits << 1) | (1 if value > median else 0)
    return PerceptualHash(bits.to_bytes(HASH_BITS // 8, "big"))


def hamming(h1: PerceptualHash, h2: PerceptualHash) -> int:
    """Number of differing bits, in [0, 256]."""
    x = int.from_bytes(h1.bits, "big") ^ int.from_bytes(h2.bits, "big")
    return x.bit_count()


@dataclass
class AcceptedHashRing:
    """Recently accepted observation hashes, oldest evicted first."""

    capacity: int = 500
    _ring: deque = field(default_factory=deque)

    def __post_init__(self):
        self._ring = deque(self._ring, maxlen=self.capacity)

    def add(self, h: PerceptualHash) -> None:
        self._ring.append(h)

    def __iter__(self):
        return iter(self._ring)

    def __len__(self):
        return len(self._ring)


def stage1_dedup(new_hash: PerceptualHash, accepted: AcceptedHashRing,
                 max_distance: int = 10) -> FilterDecision:
    """Discard a capture whose nearest accepted hash is within
    ``max_distance`` bits (inclusive)."""
    best: int | None = None
    matched: str | None = None
    for h in accepted:
        d = hamming(new_hash, h)
        if best is None or d < best:
            best, matched = d, h.source_memory_id
    if best is not None and best <= max_distance:
        return FilterDecision("dedup", "discard", min_hamming=best, matched_id=matched)
    return FilterDecision("dedup", "keep", min_hamming=best)


def stage2_autohide(tree: MemoryTree, new_memory_id: str,
                    judgments: list[RelevanceJudgment],
                    sigma: float = 0.65, window: int = 30) -> FilterDecision:
    """Hide a placed observation when its best relevance score against the
    ``window`` most recent visible observations/snippets reaches ``sigma``
    (inclusive). The memory stays in the tree and in retrieval."""
    new_memory = tree.memory(new_memory_id)
    if new_memory.source != "observation":
        raise ArgumentError("stage-2 autohide applies to observations only")
    eligible = [m for m in tree.memories.values()
                if m.source in ("observation", "snippet")
                and not m.archived and not m.hidden
                and m.sequence < new_memory.sequence]
    eligible.sort(key=lambda m: -m.sequence)
    window_ids = {m.id for m in eligible[:window]}
    max_sigma = 0.0
    matched: str | None = None
    for j in judgments:
        if j.related_id in window_ids and j.score > max_sigma:
            max_sigma, matched = j.score, j.related_id
    if matched is not None and max_sigma >= sigma:
        return FilterDecision("autohide", "hide", max_sigma=max_sigma, matched_id=matched)
    return FilterDecision("autohide", "keep", max_sigma=max_sigma if matched else None,
                          matched_id=matched)


def rebuild_ring(tree: MemoryTree, capacity: int = 500) -> AcceptedHashRing:
    """Reconstruct the accepted-hash ring from stored observations."""
    ring = AcceptedHashRing(capacity)
    observations = sorted((m for m in tree.memories.values()
                           if m.source == "observation" and m.perceptual_hash),
                          key=lambda m: m.sequence)
    for m in observations:
        ring.add(PerceptualHash.from_hex(m.perceptual_hash, m.id))
    return ring


def memory_phash(item: MemoryItem) -> PerceptualHash | None:
    if item.perceptual_hash is None:
        return None
    return PerceptualHash.from_hex(item.perceptual_hash, item.id)
