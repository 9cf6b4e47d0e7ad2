from __future__ import annotations

import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gpjscc import fixtures
from gpjscc.errors import NoThresholdError
from gpjscc.exit import (
    channel_config,
    channel_threshold,
    chart_gap,
    export_exit_chart,
    j_bsc,
    j_fun,
    j_inv,
    pexit_iterate,
    sgp_inner_curve,
    sgp_outer_curve,
    source_config,
    source_threshold,
)
from gpjscc.exit.chart import inner_edge_mi, outer_edge_mi
from gpjscc.exit.jfunc import jbsc_var
from gpjscc.protomatrix import Protomatrix, es_n0_to_sigma, split_sub
from oracles import binary_entropy, j_bsc_monte_carlo, j_inv_bisect, j_quad

# -- J and J^-1 ---------------------------------------------------------------


def test_j_fun_examples():
    assert j_fun(0.0) == 0.0
    assert j_fun(100.0) >= 0.9999
    assert j_fun(2.0) == pytest.approx(j_quad(2.0), abs=1e-6)
    with pytest.raises(ValueError):
        j_fun(-0.1)


@pytest.mark.parametrize("sigma", [0.1, 0.5, 1.0, 3.0, 5.0, 8.0])
def test_j_fun_matches_quadrature(sigma):
    assert j_fun(sigma) == pytest.approx(j_quad(sigma), abs=1e-6)


def test_j_inv_examples():
    assert j_inv(0.0) == 0.0
    s = j_inv(0.5)
    assert j_fun(s) == pytest.approx(0.5, abs=1e-6)
    assert s == pytest.approx(j_inv_bisect(0.5), abs=1e-4)
    grid = np.linspace(0.0, 0.999, 100)
    assert np.max(np.abs(j_fun(j_inv(grid)) - grid)) < 1e-6
    for bad in (-0.1, 1.0, 1.5):
        with pytest.raises(ValueError):
            j_inv(bad)


def test_fit_model_close_to_exact():
    s = np.linspace(0.0, 9.0, 200)
    assert np.max(np.abs(j_fun(s, "fit") - j_fun(s))) < 1e-3


def test_j_fun_strictly_increasing():
    s = np.linspace(0.0, 10.0, 2001)
    assert np.all(np.diff(j_fun(s)) > 0)


# -- J_BSC ----------------------------------------------------------------------


def test_j_bsc_zero_mean_is_prior_information():
    for p in (0.04, 0.1, 0.3):
        assert j_bsc(0.0, p) == pytest.approx(1.0 - binary_entropy(p), abs=1e-9)


def test_j_bsc_saturation():
    for p in (0.01, 0.04, 0.2, 0.45):
        assert j_bsc(1e4, p) >= 0.9999


def test_j_bsc_monte_carlo():
    assert j_bsc(4.0, 0.04) == pytest.approx(j_bsc_monte_carlo(4.0, 0.04), abs=2e-3)


def test_j_bsc_table_matches_quadrature():
    mu = np.linspace(0.0, 60.0, 301)
    for p in (0.04, 0.25):
        assert np.max(np.abs(jbsc_var(2 * mu, p) - j_bsc(mu, p))) < 5e-6


def test_j_bsc_domain():
    with pytest.raises(ValueError):
        j_bsc(-1.0, 0.1)
    with pytest.raises(ValueError):
        j_bsc(1.0, 0.5)


@given(st.sampled_from([0.01, 0.04, 0.12, 0.25, 0.4]), st.floats(0.0, 200.0), st.floats(0.0, 50.0))
def test_j_bsc_monotone(p, mu, dmu):
    assert j_bsc(mu + dmu, p) >= j_bsc(mu, p) - 1e-12


# -- PEXIT iteration --------------------------------------------------------------


def test_pexit_threshold_edges(ar3a):
    assert pexit_iterate(ar3a, 0.04, es_n0_to_sigma(-5.918, 1.0))[0]
    assert not pexit_iterate(ar3a, 0.04, es_n0_to_sigma(-5.919, 1.0))[0]


def test_pexit_noiseless_converges_fast(ar3a):
    ok, iters, state = pexit_iterate(ar3a, 0.04, es_n0_to_sigma(30.0, 1.0))
    assert ok and iters <= 10
    assert np.all(state.i_app > 1 - 1e-6)


@st.composite
def gated_case(draw):
    m, n = draw(st.integers(2, 4)), draw(st.integers(3, 6))
    e = np.array(draw(st.lists(st.integers(0, 3), min_size=m * n, max_size=m * n))).reshape(m, n)
    n_r = draw(st.integers(1, n - 2))
    n_p = draw(st.integers(0, n - n_r - 1))
    return Protomatrix(e, n_r, n_p), draw(st.floats(-8.0, 6.0)), draw(st.integers(1, 60))


@given(gated_case(), st.sampled_from([0.04, 0.1]))
def test_psi_gating(case, p1):
    b, es, iters = case
    cfg = channel_config(max_iters=iters)
    _, _, s = pexit_iterate(b, p1, es_n0_to_sigma(es, b.rate), cfg)
    zero = b.entries == 0
    for mat in (s.i_ev, s.i_ac, s.i_ec, s.i_av):
        assert np.all(mat[zero] == 0.0)
        assert np.all((mat >= 0) & (mat <= 1))


# -- channel thresholds -------------------------------------------------------------


@pytest.mark.parametrize(
    "name,p1,expected,tol",
    [("bsp_opt1", 0.04, -6.102, 0.005), ("ar4ja", 0.20, 3.553, 0.01), ("ar3a", 0.08, -3.414, 0.01)],
)
def test_channel_threshold_examples(name, p1, expected, tol):
    res = channel_threshold(fixtures.load(name), p1)
    assert res.value == pytest.approx(expected, abs=tol)


def test_channel_scan_trace(ar3a):
    res = channel_threshold(ar3a, 0.04)
    flags = [c for _, c, _ in res.scan_points]
    assert flags[-1] and not any(flags[:-1])
    assert res.scan_points[-1][0] == res.value
    assert res.anomalies == []
    steps = np.diff([x for x, _, _ in res.scan_points])
    assert np.allclose(steps, 0.001, atol=1e-9)


def test_channel_bisect_agrees(ar3a):
    lin = channel_threshold(ar3a, 0.04).value
    bis = channel_threshold(ar3a, 0.04, channel_config(method="bisect")).value
    assert bis == pytest.approx(lin, abs=1e-9)


def test_channel_no_threshold(ar3a):
    with pytest.raises(NoThresholdError):
        channel_threshold(ar3a, 0.04, channel_config(scan_start=-8.0, limit=-7.0))


def test_channel_record(ar3a):
    rec = channel_threshold(ar3a, 0.04, channel_config(scan_start=-5.93)).to_record("ar3a", "p1", 0.04)
    assert set(rec) >= {"code_id", "p1", "value", "scan_points"}
    assert rec["value"] == pytest.approx(-5.918)


# -- source thresholds ----------------------------------------------------------------


def test_source_threshold_bp_opt1(bp_opt1):
    assert source_threshold(bp_opt1, 2).value == pytest.approx(0.25, abs=0.002)


def test_source_threshold_dp():
    assert source_threshold(fixtures.load("dp_chen26")).value == pytest.approx(0.1156, abs=0.002)


def test_source_threshold_ar4ja():
    assert source_threshold(fixtures.load("ar4ja")).value == pytest.approx(0.212, abs=0.002)


def test_source_threshold_bisect_agrees(bp_opt1):
    assert source_threshold(bp_opt1, 2, source_config(method="bisect")).value == pytest.approx(0.25, abs=1e-9)


def test_source_threshold_accepts_full_matrix(bp_opt1):
    a = source_threshold(fixtures.load("bsp_opt1"), cfg=source_config(method="bisect")).value
    b = source_threshold(bp_opt1, 2, source_config(method="bisect")).value
    assert a == b


def test_source_no_threshold(bp_opt1):
    with pytest.raises(NoThresholdError):
        source_threshold(bp_opt1, 2, source_config(scan_start=0.4, limit=0.3))


@given(
    st.lists(st.integers(0, 3), min_size=9, max_size=9),
    st.integers(1, 2),
    st.permutations([0, 1, 2]),
    st.booleans(),
)
def test_source_threshold_permutation_invariance(vals, n_r, rows, swap_src):
    bp = np.array(vals).reshape(3, 3)
    cfg = source_config(method="bisect", step=0.01, scan_start=0.49, limit=0.01)

    def th(a):
        try:
            return source_threshold(a, n_r, cfg).value
        except NoThresholdError:
            return None

    cols = list(range(3))
    if swap_src and n_r == 2:
        cols[0], cols[1] = 1, 0
    if not swap_src and n_r == 1:
        cols[1], cols[2] = 2, 1
    assert th(bp) == th(bp[list(rows)][:, cols])


# -- EXIT chart -----------------------------------------------------------------------


def test_inner_outer_at_full_information(bp_opt1):
    inner = inner_edge_mi(bp_opt1, 2, 0.1, 1.0)
    outer = outer_edge_mi(bp_opt1, 1.0)
    gated = bp_opt1 > 0
    assert np.all(inner[gated] > 1 - 1e-6)
    assert np.all(outer[gated] == pytest.approx(1.0, abs=1e-9))
    assert np.all(inner[~gated] == 0) and np.all(outer[~gated] == 0)


def test_outer_zero_input(bp_opt1):
    out = outer_edge_mi(bp_opt1, 0.0)
    for i in range(bp_opt1.shape[0]):
        if bp_opt1[i].sum() >= 2:
            assert np.all(out[i][bp_opt1[i] > 0] == pytest.approx(0.0, abs=1e-9))


@pytest.mark.parametrize("i_a", [0.0, 0.3, 0.8])
def test_inner_source_columns_by_hand(bp_opt1, i_a):
    got = inner_edge_mi(bp_opt1, 2, 0.05, i_a)
    v_a = j_inv(i_a, "fit") ** 2
    for j in range(2):
        deg = bp_opt1[:, j].sum()
        for i in np.flatnonzero(bp_opt1[:, j]):
            mu = (deg - 1) * v_a / 2
            assert got[i, j] == pytest.approx(j_bsc(mu, 0.05), abs=5e-6)


@given(
    st.lists(st.integers(0, 3), min_size=6, max_size=12).filter(lambda v: len(v) % 3 == 0 and sum(v) > 0),
    st.floats(0.0, 0.99),
)
def test_inner_without_source_columns_is_pure_j(vals, x):
    bp = np.array(vals).reshape(3, -1)
    got = sgp_inner_curve(bp, 0, 0.1, [x])[0]
    sa = float(j_inv(x, "fit"))
    deg = bp.sum(0)
    hand = sum(
        bp[i, j] * float(j_fun(math.sqrt(max(deg[j] - 1, 0)) * sa, "fit"))
        for i in range(bp.shape[0])
        for j in range(bp.shape[1])
    ) / bp.sum()
    assert got == pytest.approx(hand, abs=1e-12)


def test_bp_opt1_tangent_at_threshold(bp_opt1):
    gap = chart_gap(bp_opt1, 2, 0.25)
    assert gap.min() > 0
    assert gap.min() < 0.01


def test_dp_chart_crossing():
    bp = split_sub(fixtures.load("dp_chen26")).b_p
    assert chart_gap(bp, 8, 0.11).min() > 0
    assert chart_gap(bp, 8, 0.13).min() < 0


def test_outer_curve_independent_of_p1(bp_opt1):
    g = np.linspace(0, 1, 11)
    assert np.all(np.diff(sgp_outer_curve(bp_opt1, g)) >= 0)


def test_export_chart(bp_opt1):
    p1s = [0.05, 0.10, 0.15, 0.20, 0.25, 0.30]
    grid = np.linspace(0, 1, 21)
    text = export_exit_chart(bp_opt1, 2, p1s, grid)
    lines = text.strip().splitlines()
    assert lines[0] == "p1,i_a,inner,outer"
    assert len(lines) == 1 + 6 * 21
    outer = {}
    for ln in lines[1:]:
        p, x, _, o = ln.split(",")
        outer.setdefault(x, set()).add(o)
    assert all(len(v) == 1 for v in outer.values())
    assert export_exit_chart(bp_opt1, 2, [], grid).strip() == "p1,i_a,inner,outer"
    buf = io.StringIO()
    export_exit_chart(bp_opt1, 2, [0.1, 0.2], [0, 0.5, 1], out=buf)
    assert len(buf.getvalue().strip().splitlines()) == 1 + 2 * 3
