"""Two-stage search: source threshold first, then channel threshold."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from ..errors import SearchExhaustedError
from .brute import brute_force_bp, brute_force_bt
from .constraints import SearchConstraints, check_constraints
from .de import DeParams, DeState, SearchResult, de_search

__all__ = ["FstctResult", "fstct"]


@dataclass
class FstctResult(SearchResult):
    """:class:`SearchResult` plus the ranked outputs of both stages."""

    stage1: list[tuple[np.ndarray, float]] = field(default_factory=list)
    stage2: list[tuple[np.ndarray, float, float]] = field(default_factory=list)
    backend: str = "brute"


def _brute(c: SearchConstraints, pool: int | None, log: Callable[[dict], None]) -> FstctResult:
    stage1 = brute_force_bp(c)
    log({"event": "stage1", "backend": "brute", "count": len(stage1),
         "top": [[m.tolist(), p] for m, p in stage1[:10]]})
    if not stage1:
        raise SearchExhaustedError("no candidate met benchmark: no untransmitted block beats p1_bar")
    todo = stage1 if pool is None else stage1[:pool]
    stage2: list[tuple[np.ndarray, float, float]] = []
    for bp, p in todo:
        for full, th in brute_force_bt(bp, c):
            stage2.append((full, th, p))
    stage2.sort(key=lambda r: (r[1], -r[2]))
    log({"event": "stage2", "backend": "brute", "count": len(stage2),
         "top": [[m.tolist(), th, p] for m, th, p in stage2[:10]]})
    if not stage2:
        # nearest miss: best completion of the top block regardless of the gate
        loose = replace(c, es_n0_bar=10.0)
        near = brute_force_bt(todo[0][0], loose)
        nearest = None if not near else {"matrix": near[0][0].tolist(), "es_n0_th": near[0][1]}
        raise SearchExhaustedError("no candidate met benchmark: no completion beats the channel benchmark", nearest)
    best, th, p = stage2[0]
    co = [m for m, t, _ in stage2 if t == th]
    return FstctResult(
        best=best,
        p1_th=p,
        es_n0_th=th,
        constraints=check_constraints(best, c, "full").violations,
        co_optimal=co,
        stage1=stage1,
        stage2=stage2,
        backend="brute",
    )


def _de(
    c: SearchConstraints,
    d: DeParams,
    log: Callable[[dict], None],
    resume: dict[str, DeState] | None,
) -> FstctResult:
    resume = resume or {}

    def hook(stage):
        return lambda st: log(st.to_record(stage))

    r1 = de_search("bp", c, d, on_generation=hook("bp"), resume=resume.get("bp"))
    log({"event": "stage1", "backend": "de", "best": r1.best.tolist(), "p1_th": r1.p1_th,
         "generation_found": r1.generation_found})
    if not r1.p1_th or r1.p1_th <= c.p1_bar:
        raise SearchExhaustedError(
            "no candidate met benchmark: source threshold gate", {"matrix": r1.best.tolist(), "p1_th": r1.p1_th}
        )
    r2 = de_search("bt", c, d, b_p=r1.best, on_generation=hook("bt"), resume=resume.get("bt"))
    log({"event": "stage2", "backend": "de", "best": r2.best.tolist(), "es_n0_th": r2.es_n0_th,
         "generation_found": r2.generation_found})
    if r2.es_n0_th is None or not r2.es_n0_th < c.es_n0_bar:
        raise SearchExhaustedError(
            "no candidate met benchmark: channel threshold gate",
            {"matrix": r2.best.tolist(), "es_n0_th": r2.es_n0_th},
        )
    return FstctResult(
        best=r2.best,
        p1_th=r1.p1_th,
        es_n0_th=r2.es_n0_th,
        constraints=r2.constraints,
        trace=r1.trace + r2.trace,
        generation_found=r2.generation_found,
        co_optimal=r2.co_optimal,
        stage1=[(r1.best, r1.p1_th)],
        stage2=[(r2.best, r2.es_n0_th, r1.p1_th)],
        backend="de",
    )


def fstct(
    c: SearchConstraints,
    d: DeParams | None = None,
    backend: str = "auto",
    stage2_pool: int | None = None,
    log: Callable[[dict], None] | None = None,
    resume: dict[str, DeState] | None = None,
) -> FstctResult:
    """Search for a full matrix meeting both benchmarks.

    Stage 1 ranks untransmitted blocks by source threshold (gate
    ``p1_th > p1_bar``); stage 2 completes them with transmitted columns and
    ranks full matrices by channel threshold at ``c.p1`` (gate
    ``threshold < es_n0_bar``).

    Args:
        c: constraints and benchmarks.
        d: DE parameters (DE backend only).
        backend: ``"brute"``, ``"de"`` or ``"auto"`` (brute for ``k = 1``).
        stage2_pool: with brute force, complete only the best this many
            stage-1 blocks (``None`` completes all of them).
        log: receives JSON-serializable progress records.
        resume: saved DE populations keyed by stage.

    Raises:
        SearchExhaustedError: when a stage produces no candidate; carries a
            nearest miss when one is available.
    """
    log = log or (lambda rec: None)
    if backend == "auto":
        backend = "brute" if c.k == 1 else "de"
    if backend == "brute":
        res = _brute(c, stage2_pool, log)
    elif backend == "de":
        res = _de(c, d or DeParams(), log, resume)
    else:
        raise ValueError("backend must be 'brute', 'de' or 'auto'")
    log({"event": "result", "backend": res.backend, **res.to_dict()})
    return res

