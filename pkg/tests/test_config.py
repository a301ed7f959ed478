"""Config loading: defaults, JSON file (dotted or nested keys), env wins."""

import json

import pytest

from ctxmem.config import EngineConfig
from ctxmem.errors import ValidationError


def test_defaults_are_the_calibrated_operating_points():
    cfg = EngineConfig()
    assert cfg.dedup_hamming == 10
    assert cfg.autohide_sigma == 0.65
    assert cfg.probe_jmem == 0.85
    assert cfg.probe_jtok == 0.92
    assert cfg.probe_tau == 0.7
    assert cfg.slot_limit == 8
    assert cfg.rep_count == 3
    assert cfg.source_boost == 0.0
    assert cfg.gzip_level == 6


def test_file_overrides_dotted_and_nested(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({
        "dedup.hamming": 12,
        "retrieval": {"slotLimit": 4, "sourceBoost": 0.1},
        "probe": {"tau": 0.6},
    }))
    cfg = EngineConfig.load(path, env={})
    assert cfg.dedup_hamming == 12
    assert cfg.slot_limit == 4
    assert cfg.source_boost == 0.1
    assert cfg.probe_tau == 0.6
    assert cfg.autohide_sigma == 0.65  # untouched default


def test_env_overrides_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"dedup.hamming": 12}))
    cfg = EngineConfig.load(path, env={"CTXMEM_DEDUP_HAMMING": "7",
                                       "CTXMEM_PROBE_TAU": "0.9"})
    assert cfg.dedup_hamming == 7
    assert cfg.probe_tau == 0.9


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"dedup.hammming": 9}))
    with pytest.raises(ValidationError):
        EngineConfig.load(path, env={})
