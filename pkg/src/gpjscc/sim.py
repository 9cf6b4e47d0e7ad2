"""Monte Carlo SSER/TBER/FER measurement over BI-AWGN with a Bernoulli source.

Frame ``k`` draws its source bits and channel noise from
``np.random.default_rng([seed, k])``, so counters depend only on the seed and
never on batching or worker count.
"""
from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .codec import BPDecoder, DecodeResult, Encoder, encode, init_llrs
from .lifting import LiftedCode
from .protomatrix import es_n0_to_sigma

__all__ = ["SimConfig", "PointReport", "SimReport", "run_point", "run_sweep", "frame_batch"]

CSV_HEADER = ["es_n0_db", "frames", "sser", "tber", "fer", "avg_iters"]


@dataclass(frozen=True)
class SimConfig:
    """Simulation protocol.

    Attributes:
        p1: source probability of a one.
        es_n0_db: operating points in dB.
        i_max: decoder iteration cap.
        max_frames: hard frame limit per point.
        min_error_frames: error-frame count that allows an early stop ...
        min_frames_for_error_stop: ... once at least this many frames ran.
        seed: master seed.
        batch: frames decoded per vectorized call; stop rules are checked
            between batches.
        workers: threads sharing each batch.
    """

    p1: float = 0.04
    es_n0_db: tuple[float, ...] = ()
    i_max: int = 200
    max_frames: int = 100_000
    min_error_frames: int = 50
    min_frames_for_error_stop: int = 5000
    seed: int = 0
    batch: int = 100
    workers: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "es_n0_db", tuple(float(x) for x in self.es_n0_db))
        for k in ("i_max", "max_frames", "min_error_frames", "min_frames_for_error_stop", "batch", "workers"):
            if getattr(self, k) < 1:
                raise ValueError(f"{k} must be positive")
        if not (0.0 < self.p1 < 1.0) or self.p1 == 0.5:
            raise ValueError("p1 must lie in (0, 1) and differ from 0.5")


@dataclass
class PointReport:
    """Counters for one operating point."""

    es_n0_db: float
    frames: int = 0
    source_errors: int = 0
    source_total: int = 0
    tx_errors: int = 0
    tx_total: int = 0
    frame_errors: int = 0
    source_error_frames: int = 0
    tx_error_frames: int = 0
    iterations: int = 0
    wall_s: float = 0.0
    stop_reason: str = ""

    @property
    def sser(self) -> float:
        return self.source_errors / self.source_total if self.source_total else 0.0

    @property
    def tber(self) -> float:
        return self.tx_errors / self.tx_total if self.tx_total else 0.0

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else 0.0

    @property
    def avg_iters(self) -> float:
        return self.iterations / self.frames if self.frames else 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(sser=self.sser, tber=self.tber, fer=self.fer, avg_iters=self.avg_iters)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PointReport":
        keys = cls.__dataclass_fields__.keys()
        return cls(**{k: v for k, v in d.items() if k in keys})


@dataclass
class SimReport:
    points: list[PointReport] = field(default_factory=list)
    seed: int = 0
    manifest: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for p in self.points:
            w.writerow(
                [f"{p.es_n0_db:.4f}", p.frames, f"{p.sser:.6e}", f"{p.tber:.6e}", f"{p.fer:.6e}", f"{p.avg_iters:.3f}"]
            )
        return buf.getvalue()


def frame_batch(code: LiftedCode, p1: float, seed: int, start: int, count: int):
    """Source bits and unit-variance noise for frames ``start .. start+count-1``."""
    ns, nt = code.source_idx.size, code.transmitted_idx.size
    src = np.empty((count, ns), dtype=np.uint8)
    noise = np.empty((count, nt))
    for i in range(count):
        g = np.random.default_rng([seed, start + i])
        src[i] = g.random(ns) < p1
        noise[i] = g.standard_normal(nt)
    return src, noise


Decoder = Callable[[np.ndarray, int], DecodeResult]


def _simulate(code, enc, decode: Decoder, p1, sigma, seed, start, count, i_max, keep_src):
    src, noise = frame_batch(code, p1, seed, start, count)
    v = encode(enc, src)
    x = 1.0 - 2.0 * v[:, code.transmitted_idx].astype(np.float64)
    y = x + sigma * noise
    res = decode(init_llrs(code, y, p1, sigma), i_max)
    bits = np.atleast_2d(res.bits)
    err = bits != v
    s_err = err[:, code.source_idx][:, keep_src]
    t_err = err[:, code.transmitted_idx]
    return (
        int(s_err.sum()),
        int(t_err.sum()),
        int(err.any(1).sum()),
        int(s_err.any(1).sum()),
        int(t_err.any(1).sum()),
        int(np.sum(res.iterations)),
    )


def run_point(
    cfg: SimConfig,
    code: LiftedCode,
    enc: Encoder,
    es_n0_db: float,
    decoder: Decoder | None = None,
) -> PointReport:
    """Simulate frames at one Es/N0 until a stop rule fires.

    Stops when ``max_frames`` frames ran, or when at least ``min_error_frames``
    frame errors were seen after at least ``min_frames_for_error_stop``
    frames. Rules are checked after each batch.

    Args:
        decoder: optional replacement decode callable ``(llrs, i_max)``.
    """
    if decoder is None:
        bp = BPDecoder(code.h)
        decoder = bp.decode
    sigma = es_n0_to_sigma(es_n0_db, code.rate)
    keep = enc.free_mask()
    n_free = int(keep.sum())
    rep = PointReport(es_n0_db=float(es_n0_db))
    t0 = time.perf_counter()
    pool = ThreadPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        while True:
            count = min(cfg.batch, cfg.max_frames - rep.frames)
            if pool is None:
                parts = [_simulate(code, enc, decoder, cfg.p1, sigma, cfg.seed, rep.frames, count, cfg.i_max, keep)]
            else:
                cuts = np.linspace(0, count, cfg.workers + 1).astype(int)
                futs = [
                    pool.submit(_simulate, code, enc, decoder, cfg.p1, sigma, cfg.seed, rep.frames + a, b - a, cfg.i_max, keep)
                    for a, b in zip(cuts[:-1], cuts[1:])
                    if b > a
                ]
                parts = [f.result() for f in futs]
            tot = np.sum(parts, axis=0)
            rep.source_errors += int(tot[0])
            rep.tx_errors += int(tot[1])
            rep.frame_errors += int(tot[2])
            rep.source_error_frames += int(tot[3])
            rep.tx_error_frames += int(tot[4])
            rep.iterations += int(tot[5])
            rep.frames += count
            rep.source_total += count * n_free
            rep.tx_total += count * code.transmitted_idx.size
            if rep.frames >= cfg.max_frames:
                rep.stop_reason = "max_frames"
                break
            if rep.frame_errors >= cfg.min_error_frames and rep.frames >= cfg.min_frames_for_error_stop:
                rep.stop_reason = "error_frames"
                break
    finally:
        if pool is not None:
            pool.shutdown()
    rep.wall_s = time.perf_counter() - t0
    return rep


def run_sweep(
    cfg: SimConfig,
    code: LiftedCode,
    enc: Encoder,
    checkpoint: str | Path | None = None,
    decoder: Decoder | None = None,
) -> SimReport:
    """Run every Es/N0 point in order.

    With ``checkpoint``, finished points are appended to a JSON file and
    reused on the next call with the same seed, so an interrupted sweep
    resumes where it stopped.
    """
    done: dict[float, PointReport] = {}
    ck = Path(checkpoint) if checkpoint else None
    if ck is not None and ck.exists():
        data = json.loads(ck.read_text())
        if data.get("seed") == cfg.seed and data.get("p1") == cfg.p1:
            done = {float(d["es_n0_db"]): PointReport.from_dict(d) for d in data["points"]}
    report = SimReport(seed=cfg.seed)
    for x in cfg.es_n0_db:
        if x in done:
            report.points.append(done[x])
            continue
        rep = run_point(cfg, code, enc, x, decoder)
        report.points.append(rep)
        done[x] = rep
        if ck is not None:
            ck.write_text(
                json.dumps({"seed": cfg.seed, "p1": cfg.p1, "points": [p.to_dict() for p in done.values()]})
            )
    return report
