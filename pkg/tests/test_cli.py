"""CLI subcommands as thin drivers: hash, replay (golden), score,
probe-calibrate, ingest."""

import json
import shutil
import subprocess
import sys

import pytest

from ctxmem.cli import main

from conftest import FIXTURES


def run_cli(args: list[str], capsys) -> str:
    code = main(args)
    out = capsys.readouterr().out
    assert code == 0, out
    return out


def test_hash_gray_is_all_zero(capsys, image_fixtures):
    out = run_cli(["hash", str(image_fixtures["dir"] / "gray.png")], capsys)
    assert out.strip() == "0" * 64


def test_hash_matches_committed_reference(capsys, image_fixtures):
    for name, expected in image_fixtures["hashes"].items():
        out = run_cli(["hash", str(image_fixtures["dir"] / name)], capsys)
        assert out.strip() == expected


def test_hash_bad_file_nonzero_exit(capsys, tmp_path):
    bad = tmp_path / "x.png"
    bad.write_bytes(b"nope")
    assert main(["hash", str(bad)]) == 1
    assert "message" in capsys.readouterr().err


def test_replay_demo_prints_golden(capsys):
    out = run_cli(["replay", "s_demo", "--data", str(FIXTURES / "demo_session")],
                  capsys)
    golden = (FIXTURES / "demo_golden_tree.json").read_text(encoding="utf-8")
    assert out == golden


def test_replay_via_subprocess_matches_golden():
    # fresh interpreter: guards against in-process state leaking into replay
    result = subprocess.run(
        [sys.executable, "-m", "ctxmem.cli", "replay", "s_demo",
         "--data", str(FIXTURES / "demo_session")],
        capture_output=True, text=True, check=True)
    golden = (FIXTURES / "demo_golden_tree.json").read_text(encoding="utf-8")
    assert result.stdout == golden


def test_score_totals_equal_component_sums(capsys):
    out = run_cli(["score", "--query", "tokyo hotels budget",
                   "--session", "s_demo", "--data", str(FIXTURES / "demo_session")],
                  capsys)
    lines = [l for l in out.splitlines() if l.strip()]
    assert lines
    for line in lines:
        total = float(line.split()[0])
        parts = dict(kv.split("=") for kv in line.split()[-3:])
        # components print at 6dp; three roundings can drift 1.5e-6
        assert total == pytest.approx(float(parts["overlap"])
                                      + float(parts["tagBoost"])
                                      + float(parts["recency"]), abs=2e-6)


def test_probe_calibrate_emits_report(capsys):
    out = run_cli(["probe-calibrate", str(FIXTURES / "probe_corpus.json")], capsys)
    report = json.loads(out)
    assert report["schema"] == "probe-report/1"
    assert report["pairCount"] == 50
    assert "pairs" not in report  # summary by default
    out = run_cli(["probe-calibrate", str(FIXTURES / "probe_corpus.json"), "--full"],
                  capsys)
    assert len(json.loads(out)["pairs"]) == 50


def test_ingest_directory_mixed_files(capsys, tmp_path, image_fixtures):
    src = tmp_path / "inbox"
    src.mkdir()
    (src / "notes.txt").write_text("Tokyo hotel pricing notes for the trip",
                                   encoding="utf-8")
    (src / "more.md").write_text("JR Pass cost analysis and rail coverage",
                                 encoding="utf-8")
    shutil.copy(image_fixtures["dir"] / "noise_a.png", src / "shot1.png")
    shutil.copy(image_fixtures["dir"] / "noise_a_tweak.png", src / "shot2.png")

    out = run_cli(["ingest", str(src), "--data", str(tmp_path / "data"),
                   "--session", "s_ing"], capsys)
    assert "notes.txt: snippet" in out
    assert "shot1.png: observation" in out
    assert "shot2.png: discarded" in out  # near-duplicate within hamming 10
    assert "session: s_ing" in out

    replayed = run_cli(["replay", "s_ing", "--data", str(tmp_path / "data")], capsys)
    doc = json.loads(replayed)
    assert len(doc["memories"]) == 3  # 2 snippets + 1 kept observation


def test_ingest_empty_dir_fails(capsys, tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["ingest", str(empty), "--data", str(tmp_path / "d")]) == 1
