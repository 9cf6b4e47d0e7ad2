"""Structural search rules, canonical forms and vectorized rule filters."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SearchConstraints",
    "ConstraintReport",
    "check_constraints",
    "rule_mask",
    "canonical_keys",
]

RULES = {
    "i": "entry exceeds e_max",
    "iii": "check-node degree below minimum",
    "iv": "too many degree-2 variable nodes",
    "v-deg1": "too many degree-1 variable nodes",
    "v-punct": "punctured column is not among the highest-degree columns",
    "vi": "variable-node degree exceeds d_max",
    "empty": "variable node without edges",
}


@dataclass(frozen=True)
class SearchConstraints:
    """Search family and benchmark gates.

    The family parameter ``k`` fixes ``m = k + 2``, ``n = 2k + 3``,
    ``n_r = k + 1`` and ``n_p = 1``.

    Attributes:
        k: family parameter.
        e_max: largest allowed entry.
        min_cn_degree: smallest allowed row sum of the full matrix.
        max_deg2: most degree-2 columns allowed (default ``k``).
        max_deg1: most degree-1 columns allowed.
        d_max: largest column degree (default 8 for k=1, 11 for k=2, else
            ``3 (k + 2)``).
        p1_bar: source-threshold benchmark (strictly exceeded).
        es_n0_bar: channel-threshold benchmark in dB (strictly undercut).
        p1: source probability used for channel thresholds.
    """

    k: int = 1
    e_max: int = 3
    min_cn_degree: int = 3
    max_deg2: int | None = None
    max_deg1: int = 1
    d_max: int | None = None
    p1_bar: float = 0.228
    es_n0_bar: float = -5.918
    p1: float = 0.04
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.e_max < 0 or self.min_cn_degree < 0 or self.max_deg1 < 0:
            raise ValueError("constraint counts must be non-negative")
        if self.max_deg2 is None:
            object.__setattr__(self, "max_deg2", self.k)
        if self.d_max is None:
            object.__setattr__(self, "d_max", {1: 8, 2: 11}.get(self.k, 3 * (self.k + 2)))
        if self.max_deg2 < 0 or self.d_max < 0:
            raise ValueError("constraint counts must be non-negative")

    @property
    def m(self) -> int:
        return self.k + 2

    @property
    def n(self) -> int:
        return 2 * self.k + 3

    @property
    def n_r(self) -> int:
        return self.k + 1

    @property
    def n_p(self) -> int:
        return 1

    @property
    def n_bp(self) -> int:
        return self.n_r + self.n_p

    @property
    def n_t(self) -> int:
        return self.n - self.n_bp


@dataclass
class ConstraintReport:
    passed: bool
    violations: list[str]

    def __bool__(self) -> bool:
        return self.passed


def rule_mask(b: np.ndarray, c: SearchConstraints, stage: str) -> dict[str, np.ndarray]:
    """Per-rule pass flags for a ``(B, m, cols)`` batch."""
    b = np.asarray(b)
    deg = b.sum(1)
    out = {
        "i": (b <= c.e_max).all((1, 2)),
        "iv": (deg == 2).sum(1) <= c.max_deg2,
        "v-deg1": (deg == 1).sum(1) <= c.max_deg1,
        "vi": (deg <= c.d_max).all(1),
        "empty": (deg > 0).all(1),
    }
    if stage == "full":
        out["iii"] = (b.sum(2) >= c.min_cn_degree).all(1)
        p0 = c.n_r
        punct = deg[:, p0 : p0 + c.n_p]
        # every punctured column must reach the n_p-th largest degree (ties allowed)
        kth = -np.sort(-deg, axis=1)[:, c.n_p - 1]
        out["v-punct"] = (punct >= kth[:, None]).all(1)
    return out


def check_constraints(b, c: SearchConstraints, stage: str = "full") -> ConstraintReport:
    """Evaluate rules (i), (iii)-(vi) on one candidate.

    Args:
        b: ``m x (n_r + n_p)`` for ``stage="bp"`` or ``m x n`` for ``"full"``.
        stage: ``"bp"`` (untransmitted block only) or ``"full"``.

    The check-node degree rule and the punctured-column rule need the whole
    matrix and are applied at the full stage only.

    Raises:
        ValueError: on a shape that does not match the stage.
    """
    if stage not in ("bp", "full"):
        raise ValueError("stage must be 'bp' or 'full'")
    a = np.asarray(b, dtype=np.int64)
    want = (c.m, c.n_bp) if stage == "bp" else (c.m, c.n)
    if a.shape != want:
        raise ValueError(f"expected shape {want} for stage {stage!r}, got {a.shape}")
    if (a < 0).any():
        return ConstraintReport(False, ["negative entry"])
    flags = rule_mask(a[None], c, stage)
    bad = [f"{k}: {RULES[k]}" for k, v in flags.items() if not v[0]]
    return ConstraintReport(not bad, bad)


def _block_perms(blocks: list[tuple[int, int]]) -> list[np.ndarray]:
    """All column permutations acting within each ``(start, stop)`` block."""
    per = [list(itertools.permutations(range(a, b))) for a, b in blocks]
    return [np.array(sum((list(p) for p in combo), [])) for combo in itertools.product(*per)]


def canonical_keys(b: np.ndarray, blocks: list[tuple[int, int]], base: int) -> np.ndarray:
    """Integer key per matrix, invariant to row order and within-block column order.

    Args:
        b: ``(B, m, cols)`` batch with entries in ``[0, base)``.
        blocks: column ranges whose internal order is irrelevant; must cover
            all columns.
        base: radix for the encoding (``e_max + 1``).
    """
    b = np.asarray(b, dtype=np.int64)
    bsz, m, cols = b.shape
    if cols * np.log2(base) * m > 62:
        raise ValueError("matrix too large for integer canonical keys")
    weights = base ** np.arange(cols - 1, -1, -1)
    rbase = base**cols
    best = None
    for perm in _block_perms(blocks):
        rows = (b[:, :, perm] * weights).sum(2)
        rows = -np.sort(-rows, axis=1)
        key = np.zeros(bsz, dtype=np.int64)
        for i in range(m):
            key = key * rbase + rows[:, i]
        best = key if best is None else np.minimum(best, key)
    return best
