"""Exhaustive enumeration for the smallest search family."""
from __future__ import annotations

import math

import numpy as np

from ..exit.threshold import (
    ThresholdConfig,
    channel_config,
    channel_converges,
    channel_thresholds_batch,
    source_config,
    source_converges,
    source_thresholds_batch,
)
from .constraints import SearchConstraints, canonical_keys, check_constraints, rule_mask

__all__ = ["brute_force_bp", "brute_force_bt", "enumerate_matrices", "next_grid_above", "next_grid_below"]

_MAX_ENUM = 1 << 22


def enumerate_matrices(shape: tuple[int, int], e_max: int) -> np.ndarray:
    """All matrices of ``shape`` with entries in ``[0, e_max]``."""
    cells = shape[0] * shape[1]
    total = (e_max + 1) ** cells
    if total > _MAX_ENUM:
        raise ValueError(f"{total} candidates is too many for brute force")
    digits = np.arange(total)[:, None] // ((e_max + 1) ** np.arange(cells - 1, -1, -1)) % (e_max + 1)
    return digits.reshape(total, *shape).astype(np.int64)


def next_grid_above(x: float, step: float) -> float:
    """Smallest multiple of ``step`` strictly above ``x``."""
    return round((math.floor(x / step + 1e-9) + 1) * step, 10)


def next_grid_below(x: float, step: float) -> float:
    """Largest multiple of ``step`` strictly below ``x``."""
    return round((math.ceil(x / step - 1e-9) - 1) * step, 10)


def _dedupe(cands: np.ndarray, blocks, base: int) -> np.ndarray:
    if cands.shape[0] == 0:
        return cands
    keys = canonical_keys(cands, blocks, base)
    _, first = np.unique(keys, return_index=True)
    return cands[np.sort(first)]


def _chunks(n: int, size: int):
    for a in range(0, n, size):
        yield slice(a, min(n, a + size))


def brute_force_bp(
    c: SearchConstraints, cfg: ThresholdConfig | None = None, chunk: int = 4096
) -> list[tuple[np.ndarray, float]]:
    """Rank every admissible untransmitted block by source threshold.

    Candidates are filtered by the structural rules, deduplicated up to row
    order and within-block column order, screened by a single convergence
    test just above ``p1_bar``, and only then given a full threshold search.

    Returns:
        ``(b_p, p1_th)`` pairs with ``p1_th > p1_bar``, sorted by threshold
        (descending), ties in enumeration order.

    Raises:
        ValueError: for families larger than ``k = 1``.
    """
    if c.k != 1:
        raise ValueError("brute force is limited to the k = 1 family")
    cfg = cfg or source_config(method="bisect")
    allm = enumerate_matrices((c.m, c.n_bp), c.e_max)
    ok = np.logical_and.reduce(list(rule_mask(allm, c, "bp").values()))
    cands = _dedupe(allm[ok], [(0, c.n_r), (c.n_r, c.n_bp)], c.e_max + 1)
    probe = next_grid_above(c.p1_bar, cfg.step)
    start = 0.499 if cfg.scan_start is None else cfg.scan_start
    if probe > start:
        return []
    keep = np.zeros(cands.shape[0], dtype=bool)
    for s in _chunks(cands.shape[0], chunk):
        keep[s] = source_converges(cands[s], c.n_r, probe, cfg)
    cands = cands[keep]
    th = np.concatenate(
        [source_thresholds_batch(cands[s], c.n_r, cfg) for s in _chunks(cands.shape[0], chunk)]
    ) if cands.shape[0] else np.empty(0)
    order = np.argsort(-th, kind="stable")
    return [(cands[i], float(th[i])) for i in order if th[i] > c.p1_bar]


def brute_force_bt(
    b_p, c: SearchConstraints, cfg: ThresholdConfig | None = None, chunk: int = 2048
) -> list[tuple[np.ndarray, float]]:
    """Rank every admissible completion of ``b_p`` by channel threshold.

    Returns:
        ``(b_sp, es_n0_th)`` pairs with threshold below ``es_n0_bar`` at
        ``c.p1``, ascending.

    Raises:
        ValueError: for families larger than ``k = 1`` or a ``b_p`` failing
            the untransmitted-block rules.
    """
    if c.k != 1:
        raise ValueError("brute force is limited to the k = 1 family")
    bp = np.asarray(b_p, dtype=np.int64)
    rep = check_constraints(bp, c, "bp")
    if not rep:
        raise ValueError(f"b_p violates search rules: {rep.violations}")
    cfg = cfg or channel_config(method="bisect")
    bts = enumerate_matrices((c.m, c.n_t), c.e_max)
    full = np.concatenate([np.broadcast_to(bp, (bts.shape[0],) + bp.shape), bts], axis=2)
    ok = np.logical_and.reduce(list(rule_mask(full, c, "full").values()))
    full = full[ok]
    if full.shape[0]:
        keys = _paired_keys(full, c)
        _, first = np.unique(keys, return_index=True)
        full = full[np.sort(first)]
    probe = next_grid_below(c.es_n0_bar, cfg.step)
    keep = np.zeros(full.shape[0], dtype=bool)
    for s in _chunks(full.shape[0], chunk):
        keep[s] = channel_converges(full[s], c.n_r, c.n_p, c.p1, probe, cfg)
    full = full[keep]
    th = np.concatenate(
        [channel_thresholds_batch(full[s], c.n_r, c.n_p, c.p1, cfg) for s in _chunks(full.shape[0], chunk)]
    ) if full.shape[0] else np.empty(0)
    order = np.argsort(th, kind="stable")
    return [(full[i], float(th[i])) for i in order if th[i] < c.es_n0_bar]


def _paired_keys(full: np.ndarray, c: SearchConstraints) -> np.ndarray:
    """Keys invariant to row order and transmitted-column order of full matrices.

    Source-column order is kept fixed here because ``b_p`` is given.
    """
    blocks = [(i, i + 1) for i in range(c.n_bp)] + [(c.n_bp, c.n)]
    return canonical_keys(full, blocks, c.e_max + 1)
