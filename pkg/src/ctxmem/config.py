"""Engine configuration: every threshold the pipeline uses, with defaults.

Values can be overridden by a JSON config file (dotted or nested keys)
and by environment variables (CTXMEM_DEDUP_HAMMING=12 etc.). Defaults are
the engine's calibrated operating points.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ValidationError

# dotted config key -> (attribute, type)
_KEYS = {
    "dedup.hamming": ("dedup_hamming", int),
    "dedup.ringSize": ("dedup_ring_size", int),
    "autohide.sigma": ("autohide_sigma", float),
    "autohide.window": ("autohide_window", int),
    "probe.jmem": ("probe_jmem", float),
    "probe.jtok": ("probe_jtok", float),
    "probe.tau": ("probe_tau", float),
    "probe.gzipLevel": ("gzip_level", int),
    "retrieval.slotLimit": ("slot_limit", int),
    "retrieval.repCount": ("rep_count", int),
    "retrieval.sourceBoost": ("source_boost", float),
    "links.strongThreshold": ("strong_link_threshold", float),
    "snapshot.recentLimit": ("snapshot_recent_limit", int),
}


@dataclass
class EngineConfig:
    dedup_hamming: int = 10          # stage-1 near-duplicate distance (inclusive)
    dedup_ring_size: int = 500       # accepted-hash ring length
    autohide_sigma: float = 0.65     # stage-2 hide threshold (inclusive)
    autohide_window: int = 30        # stage-2 looks at this many recent items
    probe_jmem: float = 0.85         # stage-1 gate, memory-id jaccard (inclusive)
    probe_jtok: float = 0.92         # stage-1 gate, token jaccard (inclusive)
    probe_tau: float = 0.7           # stage-2 gate, NCD (strict >)
    gzip_level: int = 6              # pinned compressor level for NCD
    slot_limit: int = 8              # context bundle size
    rep_count: int = 3               # representatives per explicit branch ref
    source_boost: float = 0.0        # optional additive boost for snippets
    strong_link_threshold: float = 0.8
    snapshot_recent_limit: int = 5

    @classmethod
    def load(cls, path: str | Path | None = None, env: dict | None = None) -> "EngineConfig":
        cfg = cls()
        if path is not None:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
            for dotted, value in _flatten(raw).items():
                if dotted not in _KEYS:
                    raise ValidationError(f"unknown config key: {dotted}")
                attr, typ = _KEYS[dotted]
                setattr(cfg, attr, typ(value))
        env = os.environ if env is None else env
        types = {attr: typ for attr, typ in _KEYS.values()}
        for f in fields(cls):
            var = "CTXMEM_" + f.name.upper()
            if var in env:
                setattr(cfg, f.name, types[f.name](env[var]))
        return cfg


def _flatten(raw: dict, prefix: str = "") -> dict:
    out: dict = {}
    for key, value in raw.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(_flatten(value, dotted + "."))
        else:
            out[dotted] = value
    return out
