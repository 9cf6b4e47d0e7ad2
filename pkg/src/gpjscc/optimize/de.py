"""Differential evolution over integer protomatrices.

Case One (``stage="bp"``) maximizes the source threshold of the untransmitted
block. Case Two (``stage="bt"``) completes a fixed untransmitted block and
minimizes the channel threshold of the full matrix. A trial that fails the
structural rules scores 0 in Case One and ``+inf`` in Case Two, so it never
replaces its parent.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import SearchExhaustedError
from ..exit.threshold import (
    ThresholdConfig,
    channel_config,
    channel_converges,
    channel_thresholds_batch,
    source_config,
    source_converges,
    source_thresholds_batch,
)
from .brute import next_grid_above, next_grid_below
from .constraints import SearchConstraints, canonical_keys, check_constraints, rule_mask

__all__ = ["DeParams", "SearchResult", "de_search", "phi_round", "DeState"]


@dataclass(frozen=True)
class DeParams:
    """Generations ``G``, population ``S``, crossover probability ``p_c``."""

    generations: int = 800
    population: int = 800
    p_c: float = 0.88
    seed: int = 0
    max_init_tries: int = 200_000

    def __post_init__(self) -> None:
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if self.population < 4:
            raise ValueError("population must be >= 4: mutation needs three partners besides the target")
        if not (0.0 <= self.p_c <= 1.0):
            raise ValueError("p_c must lie in [0, 1]")


@dataclass
class SearchResult:
    """Best matrix of a search with its thresholds and provenance.

    Attributes:
        best: best matrix (untransmitted block for Case One, full matrix otherwise).
        p1_th: source threshold of the untransmitted block.
        es_n0_th: channel threshold of the full matrix (``None`` for Case One).
        constraints: violated-rule list of the best matrix (empty when clean).
        trace: per-generation summary records.
        generation_found: generation at which ``best`` first appeared.
        co_optimal: all distinct matrices sharing the best score.
    """

    best: np.ndarray
    p1_th: float | None
    es_n0_th: float | None
    constraints: list[str] = field(default_factory=list)
    trace: list[dict] = field(default_factory=list)
    generation_found: int = 0
    co_optimal: list[np.ndarray] = field(default_factory=list)
    history: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "best": self.best.tolist(),
            "p1_th": self.p1_th,
            "es_n0_th": self.es_n0_th,
            "constraints": self.constraints,
            "generation_found": self.generation_found,
            "co_optimal": [m.tolist() for m in self.co_optimal],
        }


@dataclass
class DeState:
    """Population snapshot at a generation boundary (for resuming)."""

    generation: int
    population: np.ndarray
    fitness: np.ndarray
    found: np.ndarray

    def to_record(self, stage: str) -> dict:
        fit = [None if not np.isfinite(f) else float(f) for f in self.fitness]
        return {
            "event": "generation",
            "stage": stage,
            "g": self.generation,
            "population": self.population.tolist(),
            "fitness": fit,
            "found": self.found.tolist(),
        }

    @classmethod
    def from_record(cls, rec: dict, case_one: bool) -> "DeState":
        bad = 0.0 if case_one else np.inf
        fit = np.array([bad if f is None else f for f in rec["fitness"]], dtype=float)
        return cls(int(rec["g"]), np.array(rec["population"], dtype=np.int64), fit, np.array(rec["found"]))


def phi_round(x: np.ndarray, e_max: int) -> np.ndarray:
    """Nearest integer to ``|x|`` (halves round up), clamped to ``[0, e_max]``."""
    return np.clip(np.floor(np.abs(x) + 0.5), 0, e_max).astype(np.int64)


class _Scorer:
    """Fitness with a cache keyed by canonical form.

    Fitness is stored as a "higher is better" score: ``p1_th`` for Case One
    and ``-es_n0_th`` for Case Two.
    """

    def __init__(self, stage: str, c: SearchConstraints, b_p, cfg: ThresholdConfig):
        self.stage, self.c, self.cfg = stage, c, cfg
        self.b_p = None if b_p is None else np.asarray(b_p, dtype=np.int64)
        self.cache: dict[int, float] = {}
        if stage == "bp":
            self.blocks = [(0, c.n_r), (c.n_r, c.n_bp)]
        else:
            self.blocks = [(i, i + 1) for i in range(c.n_bp)] + [(c.n_bp, c.n)]

    def full(self, cand: np.ndarray) -> np.ndarray:
        if self.stage == "bp":
            return cand
        bp = np.broadcast_to(self.b_p, (cand.shape[0],) + self.b_p.shape)
        return np.concatenate([bp, cand], axis=2)

    def admissible(self, cand: np.ndarray) -> np.ndarray:
        st = "bp" if self.stage == "bp" else "full"
        return np.logical_and.reduce(list(rule_mask(self.full(cand), self.c, st).values()))

    def keys(self, cand: np.ndarray) -> np.ndarray:
        return canonical_keys(self.full(cand), self.blocks, self.c.e_max + 1)

    def exact(self, cand: np.ndarray) -> np.ndarray:
        """Scores of admissible candidates (cached)."""
        out = np.empty(cand.shape[0])
        if cand.shape[0] == 0:
            return out
        keys = self.keys(cand)
        todo = [i for i, k in enumerate(keys) if int(k) not in self.cache]
        if todo:
            sub = self.full(cand[todo])
            if self.stage == "bp":
                th = source_thresholds_batch(sub, self.c.n_r, self.cfg)
                sc = th
            else:
                th = channel_thresholds_batch(sub, self.c.n_r, self.c.n_p, self.c.p1, self.cfg)
                sc = -th
            for i, s in zip(todo, sc):
                self.cache[int(keys[i])] = float(s)
        for i, k in enumerate(keys):
            out[i] = self.cache[int(k)]
        return out

    def beats(self, cand: np.ndarray, parent_score: np.ndarray) -> np.ndarray:
        """Which admissible candidates strictly beat their parent's score.

        One batched convergence test at the next grid point past the parent
        screens out most candidates before any threshold search.
        """
        n = cand.shape[0]
        win = np.zeros(n, dtype=bool)
        if n == 0:
            return win
        keys = self.keys(cand)
        known = np.array([int(k) in self.cache for k in keys])
        for i in np.flatnonzero(known):
            win[i] = self.cache[int(keys[i])] > parent_score[i] + 1e-12
        rest = np.flatnonzero(~known)
        if rest.size == 0:
            return win
        step = self.cfg.step
        sub = self.full(cand[rest])
        if self.stage == "bp":
            probe = np.array([next_grid_above(max(s, 0.0), step) for s in parent_score[rest]])
            start = 0.499 if self.cfg.scan_start is None else self.cfg.scan_start
            ok = probe <= start + 1e-12
            conv = np.zeros(rest.size, dtype=bool)
            if ok.any():
                conv[ok] = source_converges(sub[ok], self.c.n_r, probe[ok], self.cfg)
        else:
            ceiling = 10.0 if self.cfg.limit is None else self.cfg.limit
            probe = np.array(
                [next_grid_below(-p, step) if np.isfinite(p) else ceiling for p in parent_score[rest]]
            )
            conv = channel_converges(sub, self.c.n_r, self.c.n_p, self.c.p1, probe, self.cfg)
        hit = rest[conv]
        if hit.size:
            sc = self.exact(cand[hit])
            win[hit] = sc > parent_score[hit] + 1e-12
        return win


def _random_admissible(scorer: _Scorer, shape, rng: np.random.Generator, e_max: int, tries: int) -> np.ndarray:
    for _ in range(max(1, tries // 64)):
        cand = rng.integers(0, e_max + 1, size=(64,) + shape)
        ok = scorer.admissible(cand)
        if ok.any():
            return cand[int(np.argmax(ok))]
    raise SearchExhaustedError("no admissible candidate found for the initial population")


def de_search(
    stage: str,
    c: SearchConstraints,
    d: DeParams,
    b_p=None,
    cfg: ThresholdConfig | None = None,
    on_generation: Callable[[DeState], None] | None = None,
    resume: DeState | None = None,
    keep_history: bool = False,
) -> SearchResult:
    """Run exactly ``d.generations`` generations of integer DE.

    Each slot ``s`` draws from its own stream ``default_rng([seed, g, s])``:
    three distinct partners ``r1, r2, r3`` different from ``s``, the mutant
    ``phi_round(B_r1 + 0.5 (B_r2 - B_r3))`` and a binomial crossover with
    probability ``p_c`` per entry. A trial replaces its parent only when its
    score is strictly better.

    Args:
        stage: ``"bp"`` (Case One) or ``"bt"`` (Case Two, requires ``b_p``).
        c: constraints and benchmarks.
        d: DE parameters.
        b_p: fixed untransmitted block for Case Two.
        cfg: threshold scan parameters (bisection is used).
        on_generation: callback after every generation (for logging).
        resume: continue from a saved generation.
        keep_history: store the ``(G + 1, S)`` score history.

    Raises:
        SearchExhaustedError: when no structurally admissible starting
            candidate can be drawn.
    """
    if stage not in ("bp", "bt"):
        raise ValueError("stage must be 'bp' or 'bt'")
    if stage == "bt":
        if b_p is None:
            raise ValueError("Case Two needs a fixed b_p")
        rep = check_constraints(b_p, c, "bp")
        if not rep:
            raise ValueError(f"b_p violates search rules: {rep.violations}")
    case_one = stage == "bp"
    if cfg is None:
        cfg = source_config(method="bisect") if case_one else channel_config(method="bisect")
    scorer = _Scorer(stage, c, b_p, cfg)
    shape = (c.m, c.n_bp) if case_one else (c.m, c.n_t)
    S = d.population

    if resume is not None:
        g0 = resume.generation
        pop = resume.population.copy()
        fit = resume.fitness.copy() if case_one else -resume.fitness.copy()
        found = resume.found.copy()
    else:
        g0 = 0
        pop = np.stack(
            [
                _random_admissible(scorer, shape, np.random.default_rng([d.seed, 0, s, 1]), c.e_max, d.max_init_tries)
                for s in range(S)
            ]
        )
        fit = scorer.exact(pop)
        found = np.zeros(S, dtype=np.int64)
    hist = [fit.copy()] if keep_history else None
    trace: list[dict] = []

    def _state(g):
        return DeState(g, pop.copy(), fit.copy() if case_one else -fit, found.copy())

    for g in range(g0 + 1, d.generations + 1):
        trial = np.empty_like(pop)
        for s in range(S):
            rng = np.random.default_rng([d.seed, g, s])
            others = np.delete(np.arange(S), s)
            r1, r2, r3 = rng.choice(others, size=3, replace=False)
            mut = phi_round(pop[r1] + 0.5 * (pop[r2] - pop[r3]), c.e_max)
            cross = rng.random(shape) < d.p_c
            trial[s] = np.where(cross, mut, pop[s])
        adm = scorer.admissible(trial)
        win = np.zeros(S, dtype=bool)
        idx = np.flatnonzero(adm)
        win[idx] = scorer.beats(trial[idx], fit[idx])
        if win.any():
            pop[win] = trial[win]
            fit[win] = scorer.exact(trial[win])
            found[win] = g
        if hist is not None:
            hist.append(fit.copy())
        b = int(np.argmax(fit))
        rec = {"g": g, "best": float(fit[b]) if case_one else float(-fit[b]), "replaced": int(win.sum())}
        trace.append(rec)
        if on_generation is not None:
            on_generation(_state(g))

    b = int(np.argmax(fit))
    best_score = fit[b]
    keys = scorer.keys(pop)
    co, seen = [], set()
    for i in np.flatnonzero(np.isclose(fit, best_score, atol=1e-12)):
        if int(keys[i]) not in seen:
            seen.add(int(keys[i]))
            co.append(pop[i].copy())
    best = scorer.full(pop[b][None])[0]
    if case_one:
        p1_th, es = float(best_score), None
        viol = check_constraints(best, c, "bp").violations
    else:
        p1_th = float(source_thresholds_batch(best[None, :, : c.n_bp], c.n_r)[0])
        es = float(-best_score)
        viol = check_constraints(best, c, "full").violations
    return SearchResult(
        best=best,
        p1_th=p1_th,
        es_n0_th=es,
        constraints=viol,
        trace=trace,
        generation_found=int(found[b]),
        co_optimal=[scorer.full(m[None])[0] for m in co],
        history=np.array(hist) if hist is not None else None,
    )

