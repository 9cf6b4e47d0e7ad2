"""Channel thresholds (PEXIT-JSCC) and source thresholds (SGP-EXIT)."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import NoThresholdError
from ..protomatrix import Protomatrix, code_rate, es_n0_to_sigma, source_entropy, split_sub
from .engine import ExitState, run_batch
from .jfunc import JModel, jbsc_table, j_inv

__all__ = [
    "ThresholdConfig",
    "ThresholdResult",
    "channel_config",
    "source_config",
    "shannon_limit_db",
    "pexit_iterate",
    "channel_threshold",
    "source_threshold",
    "channel_thresholds_batch",
    "source_thresholds_batch",
    "channel_converges",
    "source_converges",
]


@dataclass(frozen=True)
class ThresholdConfig:
    """Scan parameters.

    Attributes:
        step: scan increment (dB for channel scans, probability for source scans).
        max_iters: fixed-point iteration cap.
        tol: convergence tolerance on the APP deficit.
        scan_start: first scanned point; ``None`` selects a default.
        limit: last allowed point (ceiling in dB or floor in p1).
        method: ``"linear"`` reports the first converged grid point in scan
            order; ``"bisect"`` finds the same point assuming monotone
            convergence along the scan.
        chunk: number of grid points evaluated per batched call in linear mode.
        jmodel: ``J`` realization, ``"fit"`` or ``"exact"``.
    """

    step: float = 0.001
    max_iters: int = 200
    tol: float = 1e-6
    scan_start: float | None = None
    limit: float | None = None
    method: str = "linear"
    chunk: int = 512
    jmodel: str = "fit"

    def __post_init__(self) -> None:
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.method not in ("linear", "bisect"):
            raise ValueError("method must be 'linear' or 'bisect'")
        if self.chunk < 1:
            raise ValueError("chunk must be >= 1")


def channel_config(**kw) -> ThresholdConfig:
    """Defaults for Es/N0 scans: 0.001 dB steps, 200 iterations, tol 1e-6."""
    return ThresholdConfig(**kw)


def source_config(**kw) -> ThresholdConfig:
    """Defaults for p1 scans: start 0.499, step 0.001 downward, floor 0.001."""
    kw.setdefault("scan_start", 0.499)
    kw.setdefault("limit", 0.001)
    kw.setdefault("chunk", 64)
    return ThresholdConfig(**kw)


@dataclass
class ThresholdResult:
    """Outcome of a threshold scan.

    Attributes:
        value: first converged point in scan order.
        scan_points: ``(point, converged, iterations)`` for each evaluated point.
        anomalies: points past ``value`` in scan order that failed to converge.
    """

    value: float
    scan_points: list[tuple[float, bool, int]] = field(default_factory=list)
    anomalies: list[float] = field(default_factory=list)

    def to_record(self, code_id: str, key: str, key_value: float | None) -> dict:
        rec = {"code_id": code_id}
        if key_value is not None:
            rec[key] = key_value
        rec["value"] = round(self.value, 6)
        rec["scan_points"] = [[round(p, 6), bool(c), int(i)] for p, c, i in self.scan_points]
        return rec


# --------------------------------------------------------------------------
# helpers


def shannon_limit_db(p1: float, rate: float) -> float:
    """Smallest Es/N0 (dB) with ``R H(p1)`` below the BPSK-AWGN capacity."""
    need = rate * source_entropy(p1)
    if need >= 1.0:
        return math.inf
    s_llr = float(j_inv(need))
    sigma = 2.0 / s_llr
    return 10.0 * math.log10(1.0 / (2.0 * sigma * sigma * rate))


def _ch_var(n: int, n_r: int, n_p: int, sigmas: np.ndarray) -> np.ndarray:
    out = np.zeros((len(sigmas), n))
    out[:, n_r + n_p :] = (4.0 / np.asarray(sigmas, dtype=float) ** 2)[:, None]
    return out


def _tables(p1s: Sequence[float], n_r: int) -> np.ndarray | None:
    if n_r == 0:
        return None
    return np.stack([jbsc_table(p) for p in p1s])


def _grid(start: float, limit: float, step: float, up: bool) -> np.ndarray:
    span = (limit - start) if up else (start - limit)
    if span < 0:
        return np.empty(0)
    k = int(math.floor(span / step + 1e-9)) + 1
    pts = start + (1 if up else -1) * step * np.arange(k)
    digits = max(0, -int(math.floor(math.log10(step)))) + 3
    return np.round(pts, digits)


def _channel_eval(b: Protomatrix, p1: float, pts: np.ndarray, cfg: ThresholdConfig):
    sig = np.array([es_n0_to_sigma(x, code_rate(b)) for x in pts])
    tabs = _tables([p1] * len(pts), b.n_r)
    out = run_batch(
        b.entries, b.n_r, _ch_var(b.n, b.n_r, b.n_p, sig), tabs, cfg.jmodel, cfg.max_iters, cfg.tol
    )
    return out.converged, out.iterations


def _as_bp(b_p, n_r: int | None) -> tuple[np.ndarray, int]:
    if isinstance(b_p, Protomatrix):
        return np.asarray(split_sub(b_p).b_p), b_p.n_r
    if n_r is None:
        raise ValueError("n_r is required for a bare sub-protomatrix")
    a = np.asarray(b_p, dtype=np.int64)
    if a.ndim != 2 or np.any(a < 0) or not (0 <= n_r <= a.shape[1]):
        raise ValueError("invalid sub-protomatrix")
    return a, int(n_r)


def _source_eval(bp: np.ndarray, n_r: int, pts: np.ndarray, cfg: ThresholdConfig):
    n = bp.shape[1]
    out = run_batch(
        bp, n_r, np.zeros((len(pts), n)), _tables(pts, n_r), cfg.jmodel, cfg.max_iters, cfg.tol
    )
    return out.converged, out.iterations


def _scan(evaluate, grid: np.ndarray, cfg: ThresholdConfig, what: str) -> ThresholdResult:
    """First converged grid point, linear (chunked) or bisection."""
    if grid.size == 0:
        raise NoThresholdError(f"empty {what} scan range")
    trace: list[tuple[float, bool, int]] = []
    if cfg.method == "linear":
        for a in range(0, grid.size, cfg.chunk):
            pts = grid[a : a + cfg.chunk]
            conv, its = evaluate(pts)
            if conv.any():
                k = int(np.argmax(conv))
                trace += [(float(p), bool(c), int(i)) for p, c, i in zip(pts[: k + 1], conv, its)]
                bad = [float(p) for p, c in zip(pts[k:], conv[k:]) if not c]
                if bad:
                    warnings.warn(
                        f"non-monotone {what} convergence past {pts[k]}: {bad[:5]}",
                        RuntimeWarning,
                        stacklevel=3,
                    )
                return ThresholdResult(float(pts[k]), trace, bad)
            trace += [(float(p), False, int(i)) for p, i in zip(pts, its)]
        raise NoThresholdError(f"no {what} threshold found in range")

    lo, hi = -1, grid.size - 1
    conv, its = evaluate(grid[[hi]])
    trace.append((float(grid[hi]), bool(conv[0]), int(its[0])))
    if not conv[0]:
        raise NoThresholdError(f"no {what} threshold found in range")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        conv, its = evaluate(grid[[mid]])
        trace.append((float(grid[mid]), bool(conv[0]), int(its[0])))
        if conv[0]:
            hi = mid
        else:
            lo = mid
    trace.sort(key=lambda r: r[0])
    return ThresholdResult(float(grid[hi]), trace)


# --------------------------------------------------------------------------
# public operations


def pexit_iterate(
    b: Protomatrix, p1: float, sigma: float, cfg: ThresholdConfig | None = None
) -> tuple[bool, int, ExitState]:
    """Run the PEXIT-JSCC fixed point at one channel noise level.

    Returns:
        ``(converged, iterations, final_state)``.
    """
    cfg = cfg or channel_config()
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    out = run_batch(
        b.entries,
        b.n_r,
        _ch_var(b.n, b.n_r, b.n_p, np.array([sigma])),
        _tables([p1], b.n_r),
        cfg.jmodel,
        cfg.max_iters,
        cfg.tol,
        keep_state=True,
    )
    return bool(out.converged[0]), int(out.iterations[0]), out.states[0]


def channel_threshold(
    b: Protomatrix, p1: float, cfg: ThresholdConfig | None = None
) -> ThresholdResult:
    """Lowest Es/N0 on the scan grid at which PEXIT-JSCC converges.

    The default scan starts 1 dB below the Shannon limit (rounded down to the
    step) and stops at +10 dB.
    """
    cfg = cfg or channel_config()
    start = cfg.scan_start
    if start is None:
        lim = shannon_limit_db(p1, code_rate(b))
        start = math.floor((lim - 1.0) / cfg.step) * cfg.step
    ceiling = 10.0 if cfg.limit is None else cfg.limit
    grid = _grid(start, ceiling, cfg.step, up=True)
    return _scan(lambda pts: _channel_eval(b, p1, pts, cfg), grid, cfg, "channel")


def source_threshold(
    b_p, n_r: int | None = None, cfg: ThresholdConfig | None = None
) -> ThresholdResult:
    """Largest p1 on the downward scan grid at which SGP-EXIT converges.

    Args:
        b_p: untransmitted sub-protomatrix (source columns first), or a full
            :class:`Protomatrix` whose untransmitted block is used.
        n_r: number of source columns when ``b_p`` is a bare array.
        cfg: scan parameters; see :func:`source_config`.
    """
    cfg = cfg or source_config()
    bp, n_r = _as_bp(b_p, n_r)
    start = 0.499 if cfg.scan_start is None else cfg.scan_start
    floor = 0.001 if cfg.limit is None else cfg.limit
    if not (0.0 < floor <= start < 0.5):
        raise ValueError("source scan needs 0 < floor <= start < 0.5")
    grid = _grid(start, floor, cfg.step, up=False)
    return _scan(lambda pts: _source_eval(bp, n_r, pts, cfg), grid, cfg, "source")


def channel_converges(
    entries: np.ndarray, n_r: int, n_p: int, p1: float, es_n0_db, cfg: ThresholdConfig | None = None
) -> np.ndarray:
    """Convergence flags for a batch of full matrices at given Es/N0 values."""
    cfg = cfg or channel_config()
    e = np.asarray(entries, dtype=float)
    bsz, _, n = e.shape
    rate = n_r / (n - n_r - n_p)
    x = np.broadcast_to(np.asarray(es_n0_db, dtype=float), (bsz,))
    sig = np.array([es_n0_to_sigma(v, rate) for v in x])
    out = run_batch(
        e, n_r, _ch_var(n, n_r, n_p, sig), _tables([p1] * bsz, n_r), cfg.jmodel, cfg.max_iters, cfg.tol
    )
    return out.converged


def source_converges(
    entries: np.ndarray, n_r: int, p1, cfg: ThresholdConfig | None = None
) -> np.ndarray:
    """Convergence flags for a batch of sub-protomatrices at given p1 values."""
    cfg = cfg or source_config()
    e = np.asarray(entries, dtype=float)
    bsz, _, n = e.shape
    p = np.broadcast_to(np.asarray(p1, dtype=float), (bsz,))
    out = run_batch(e, n_r, np.zeros((bsz, n)), _tables(list(p), n_r), cfg.jmodel, cfg.max_iters, cfg.tol)
    return out.converged


def _batch_bisect(flags_at, grid: np.ndarray, bsz: int) -> np.ndarray:
    """Per-problem index of the first grid point flagged converged (-1: none)."""
    hi = np.full(bsz, grid.size - 1)
    ok = flags_at(hi, np.arange(bsz))
    lo = np.full(bsz, -1)
    idx = np.flatnonzero(ok)
    lo_i, hi_i = lo[idx], hi[idx]
    while True:
        open_ = hi_i - lo_i > 1
        if not open_.any():
            break
        sel = np.flatnonzero(open_)
        mid = (lo_i[sel] + hi_i[sel]) // 2
        f = flags_at(mid, idx[sel])
        hi_i[sel[f]] = mid[f]
        lo_i[sel[~f]] = mid[~f]
    res = np.full(bsz, -1)
    res[idx] = hi_i
    return res


def channel_thresholds_batch(
    entries: np.ndarray,
    n_r: int,
    n_p: int,
    p1: float,
    cfg: ThresholdConfig | None = None,
    start: float | None = None,
) -> np.ndarray:
    """Bisection channel thresholds for many same-shape matrices.

    Returns ``inf`` where no grid point up to the ceiling converges.
    """
    cfg = cfg or channel_config()
    e = np.asarray(entries, dtype=float)
    bsz, _, n = e.shape
    if bsz == 0:
        return np.empty(0)
    rate = n_r / (n - n_r - n_p)
    if start is None:
        start = cfg.scan_start
    if start is None:
        start = math.floor((shannon_limit_db(p1, rate) - 1.0) / cfg.step) * cfg.step
    grid = _grid(start, 10.0 if cfg.limit is None else cfg.limit, cfg.step, up=True)

    def flags_at(gi, which):
        return channel_converges(e[which], n_r, n_p, p1, grid[gi], cfg)

    k = _batch_bisect(flags_at, grid, bsz)
    return np.where(k >= 0, grid[np.maximum(k, 0)], np.inf)


def source_thresholds_batch(
    entries: np.ndarray, n_r: int, cfg: ThresholdConfig | None = None
) -> np.ndarray:
    """Bisection source thresholds for many same-shape sub-protomatrices.

    Returns ``0`` where no grid point converges.
    """
    cfg = cfg or source_config()
    e = np.asarray(entries, dtype=float)
    bsz = e.shape[0]
    if bsz == 0:
        return np.empty(0)
    start = 0.499 if cfg.scan_start is None else cfg.scan_start
    floor = 0.001 if cfg.limit is None else cfg.limit
    grid = _grid(start, floor, cfg.step, up=False)

    def flags_at(gi, which):
        return source_converges(e[which], n_r, grid[gi], cfg)

    k = _batch_bisect(flags_at, grid, bsz)
    return np.where(k >= 0, grid[np.maximum(k, 0)], 0.0)

