from __future__ import annotations

import csv
import json

import pytest

from gpjscc import fixtures
from gpjscc.cli import EXIT_CONFIG, EXIT_NO_RESULT, EXIT_OK, main
from gpjscc.protomatrix import load_protomatrix


def run(capsys, *argv) -> tuple[int, str, str]:
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("name, want", [("ar3a", -5.918), ("bsp_opt3", -5.782)])
def test_channel_threshold(capsys, tmp_path, name, want):
    out_file = tmp_path / "th.json"
    code, out, _ = run(capsys, "channel-threshold", "--code", fixtures.path(name), "--p1", 0.04, "--out", out_file)
    assert code == EXIT_OK
    assert float(out) == pytest.approx(want, abs=0.02)
    assert len(out.strip().split(".")[1]) == 3
    rec = json.loads(out_file.read_text())
    assert rec["value"] == pytest.approx(want, abs=0.02)
    man = json.loads((tmp_path / "th.json.manifest.json").read_text())
    assert man["command"] == "channel-threshold" and man["output"] == "th.json"
    assert set(man) >= {"config_digest", "code_digests", "seed", "tool_version", "wall_clock_s"}


@pytest.mark.parametrize("name, want", [("bsp_opt2", 0.275), ("dp_chen26", 0.1156)])
def test_source_threshold(capsys, name, want):
    code, out, _ = run(capsys, "source-threshold", "--code", fixtures.path(name))
    assert code == EXIT_OK
    assert float(out) == pytest.approx(want, abs=0.005)


def test_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "channel-threshold", "--code", tmp_path / "nope.pm", "--p1", 0.04)
    assert code == EXIT_CONFIG
    assert "not found" in err


def test_bad_p1_and_config_key(capsys, tmp_path):
    assert run(capsys, "channel-threshold", "--code", fixtures.path("ar3a"), "--p1", 0.7)[0] == EXIT_CONFIG
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"stepp": 0.01}))
    code, _, err = run(capsys, "channel-threshold", "--code", fixtures.path("ar3a"), "--p1", 0.04, "--config", cfg)
    assert code == EXIT_CONFIG and "stepp" in err


def test_no_threshold_in_range(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"scan_start": -9.0, "limit": -8.0}))
    code, _, _ = run(capsys, "channel-threshold", "--code", fixtures.path("ar3a"), "--p1", 0.04, "--config", cfg)
    assert code == EXIT_NO_RESULT


def test_parse_error_upstream(capsys, tmp_path):
    pm = tmp_path / "bad.pm"
    pm.write_text("1 2 0 0\n1 1\n")
    assert run(capsys, "source-threshold", "--code", pm)[0] == EXIT_CONFIG


def test_chart_csv(capsys):
    code, out, _ = run(capsys, "chart", "--code", fixtures.path("bsp_opt1"), "--p1", 0.24, "--points", 11)
    assert code == EXIT_OK
    rows = list(csv.reader(out.strip().splitlines()))
    assert len(rows) > 11


def test_simulate_desk_two_points(capsys, tmp_path):
    cfg = tmp_path / "sim.json"
    cfg.write_text(json.dumps({"max_frames": 200, "min_frames_for_error_stop": 100, "batch": 100}))
    out_file = tmp_path / "sweep.csv"
    code, _, _ = run(
        capsys, "simulate", "--code", fixtures.path("ar3a"), "--config", cfg,
        "--es-n0", -7.0, "--es-n0", 0.0, "--seed", 1, "--out", out_file,
    )
    assert code == EXIT_OK
    rows = list(csv.DictReader(out_file.read_text().splitlines()))
    assert len(rows) == 2
    assert float(rows[1]["fer"]) <= float(rows[0]["fer"])
    man = json.loads((tmp_path / "sweep.csv.manifest.json").read_text())
    assert man["seed"] == 1 and len(man["points"]) == 2
    assert "pinned_source_positions" in man


def test_simulate_bad_key(capsys, tmp_path):
    cfg = tmp_path / "sim.json"
    cfg.write_text(json.dumps({"frames_max": 10}))
    code, _, err = run(capsys, "simulate", "--code", fixtures.path("ar3a"), "--config", cfg)
    assert code == EXIT_CONFIG and "frames_max" in err


DE_CFG = {"k": 1, "backend": "de", "generations": 3, "population": 8, "p1_bar": 0.1, "es_n0_bar": 0.0}


def test_optimize_header_and_resume(capsys, tmp_path):
    cfg = tmp_path / "opt.json"
    cfg.write_text(json.dumps(DE_CFG))
    best = tmp_path / "best.pm"
    code, _, _ = run(capsys, "optimize", "--config", cfg, "--out", best, "--seed", 3)
    assert code == EXIT_OK
    text = best.read_text()
    assert "source threshold" in text and "channel threshold" in text and "backend = de" in text
    assert load_protomatrix(best).n_r == 2
    log = tmp_path / "best.pm.jsonl"
    lines = log.read_text().splitlines()
    assert any(json.loads(x).get("event") == "generation" for x in lines)

    # truncate mid-run and resume; the result must match the uninterrupted run
    log.write_text("\n".join(lines[:2]) + "\n")
    best2 = tmp_path / "best2.pm"
    log2 = tmp_path / "resumed.jsonl"
    log2.write_text(log.read_text())
    code, _, _ = run(capsys, "optimize", "--config", cfg, "--out", best2, "--log", log2, "--resume", "--seed", 3)
    assert code == EXIT_OK
    assert best2.read_text() == text
    assert json.loads(log2.read_text().splitlines()[-1]) == json.loads(lines[-1])


def test_optimize_exhaustion_exit_code(capsys, tmp_path):
    cfg = tmp_path / "opt.json"
    cfg.write_text(json.dumps({**DE_CFG, "es_n0_bar": -12.0}))
    code, _, err = run(capsys, "optimize", "--config", cfg, "--out", tmp_path / "b.pm", "--seed", 0)
    assert code == EXIT_NO_RESULT
    assert "internal error" not in err


def test_optimize_bad_config(capsys, tmp_path):
    cfg = tmp_path / "opt.json"
    cfg.write_text(json.dumps({"kk": 1}))
    assert run(capsys, "optimize", "--config", cfg, "--out", tmp_path / "b.pm")[0] == EXIT_CONFIG
