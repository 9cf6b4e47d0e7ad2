from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gpjscc import fixtures
from gpjscc.codec import DecodeResult, build_encoder
from gpjscc.lifting import peg_lift
from gpjscc.sim import PointReport, SimConfig, frame_batch, run_point, run_sweep

COUNTERS = [
    "frames",
    "source_errors",
    "source_total",
    "tx_errors",
    "tx_total",
    "frame_errors",
    "source_error_frames",
    "tx_error_frames",
    "iterations",
]


def counters(p: PointReport) -> dict:
    return {k: getattr(p, k) for k in COUNTERS}


@pytest.fixture(scope="module")
def small():
    code = peg_lift(fixtures.load("ar3a"), 16, seed=0, girth=False)
    return code, build_encoder(code)


def test_defaults():
    c = SimConfig()
    assert (c.i_max, c.max_frames, c.min_error_frames, c.min_frames_for_error_stop) == (200, 100_000, 50, 5000)
    with pytest.raises(ValueError):
        SimConfig(max_frames=0)
    with pytest.raises(ValueError):
        SimConfig(p1=0.5)


def test_noiseless(ar3a_z200):
    code, enc = ar3a_z200
    rep = run_point(SimConfig(max_frames=5000, batch=500), code, enc, 30.0)
    assert rep.frames == 5000
    assert rep.sser == rep.tber == rep.fer == 0.0


def test_stop_rule_with_failing_decoder(small):
    code, enc = small

    def always_wrong(llrs, i_max):
        f = np.atleast_2d(llrs).shape[0]
        return DecodeResult(np.ones((f, code.n_cols), dtype=np.uint8), np.zeros(f, bool), np.full(f, i_max))

    rep = run_point(SimConfig(), code, enc, 0.0, decoder=always_wrong)
    assert rep.frames == 5000
    assert rep.frame_errors >= 50
    assert rep.stop_reason == "error_frames"


def test_max_frames_rule(small):
    code, enc = small
    rep = run_point(SimConfig(max_frames=250, batch=100), code, enc, 5.0)
    assert rep.frames == 250
    assert rep.stop_reason == "max_frames"


def test_empty_sweep(small):
    code, enc = small
    rep = run_sweep(SimConfig(es_n0_db=()), code, enc)
    assert rep.points == []
    assert rep.to_csv().strip() == "es_n0_db,frames,sser,tber,fer,avg_iters"


def test_two_point_sweep_monotone(small):
    code, enc = small
    cfg = SimConfig(es_n0_db=(-4.0, 2.0), max_frames=3000, min_frames_for_error_stop=200)
    rep = run_sweep(cfg, code, enc)
    lo, hi = rep.points
    assert lo.frame_errors >= 50
    assert hi.fer <= lo.fer
    lines = rep.to_csv().strip().splitlines()
    assert lines[0] == "es_n0_db,frames,sser,tber,fer,avg_iters"
    assert len(lines) == 3


def test_checkpoint_resume(tmp_path, small):
    code, enc = small
    ck = tmp_path / "ck.json"
    cfg1 = SimConfig(es_n0_db=(-2.0,), max_frames=300, seed=4)
    first = run_sweep(cfg1, code, enc, checkpoint=ck)
    cfg2 = SimConfig(es_n0_db=(-2.0, 0.0), max_frames=300, seed=4)

    def boom(llrs, i_max):
        raise AssertionError("resumed point must not be re-simulated")

    with pytest.raises(AssertionError):
        run_sweep(cfg2, code, enc, checkpoint=ck, decoder=boom)
    resumed = run_sweep(cfg2, code, enc, checkpoint=ck)
    fresh = run_sweep(cfg2, code, enc)
    assert counters(resumed.points[0]) == counters(first.points[0])
    assert [counters(p) for p in resumed.points] == [counters(p) for p in fresh.points]
    assert json.loads(ck.read_text())["seed"] == 4


def test_counter_invariants(small):
    code, enc = small
    rep = run_point(SimConfig(max_frames=400), code, enc, -3.0)
    assert rep.frame_errors >= rep.source_error_frames
    assert rep.frame_errors >= rep.tx_error_frames
    assert rep.source_total == rep.frames * int(enc.free_mask().sum())
    assert rep.tx_total == rep.frames * code.transmitted_idx.size


def test_noise_only_on_transmitted(small):
    code, _ = small
    src, noise = frame_batch(code, 0.04, 0, 0, 3)
    assert src.shape == (3, code.source_idx.size)
    assert noise.shape == (3, code.transmitted_idx.size)


def test_frame_streams_independent_of_batching(small):
    code, _ = small
    a_src, a_noise = frame_batch(code, 0.04, 9, 0, 10)
    b_src, b_noise = frame_batch(code, 0.04, 9, 4, 6)
    np.testing.assert_array_equal(a_src[4:], b_src)
    np.testing.assert_array_equal(a_noise[4:], b_noise)


@pytest.mark.slow
def test_waterfall_order_of_magnitude():
    code = peg_lift(fixtures.load("ar3a"), 400, seed=0, girth=False)
    enc = build_encoder(code)
    cfg = SimConfig(max_frames=20000, min_error_frames=50, min_frames_for_error_stop=2000, seed=0)
    rep = run_point(cfg, code, enc, -4.0)
    assert rep.frame_errors >= 50
    assert rep.sser < 1e-3


_TINY = {}


def _tiny():
    if not _TINY:
        code = peg_lift(fixtures.load("ar3a"), 8, seed=0, girth=False)
        _TINY["c"] = (code, build_encoder(code))
    return _TINY["c"]


@given(st.integers(2, 4), st.integers(1, 9), st.integers(0, 1000), st.floats(-3.0, 1.0))
def test_determinism_across_workers(workers, batch, seed, es):
    code, enc = _tiny()
    base = SimConfig(max_frames=24, seed=seed, batch=batch, workers=1, i_max=20)
    par = SimConfig(max_frames=24, seed=seed, batch=batch, workers=workers, i_max=20)
    assert counters(run_point(base, code, enc, es)) == counters(run_point(par, code, enc, es))
