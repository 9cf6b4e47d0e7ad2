"""Protomatrix data model, role partitions, rates and source statistics.

Columns are ordered as ``n_r`` source variable nodes, then ``n_p`` punctured
variable nodes, then the transmitted variable nodes.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError

__all__ = [
    "Protomatrix",
    "SourceModel",
    "SubSplit",
    "parse_protomatrix",
    "load_protomatrix",
    "format_protomatrix",
    "code_rate",
    "source_entropy",
    "es_n0_to_sigma",
    "sigma_to_es_n0",
    "split_sub",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.int64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Protomatrix:
    """Integer base matrix with JSCC column roles.

    Attributes:
        entries: ``m x n`` edge multiplicities.
        n_r: number of source columns (leftmost).
        n_p: number of punctured columns following the source block.
    """

    entries: np.ndarray
    n_r: int
    n_p: int
    name: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        e = np.asarray(self.entries)
        if e.ndim != 2:
            raise ParseError("protomatrix must be two-dimensional")
        if e.size and not np.all(np.equal(np.mod(e, 1), 0)):
            raise ParseError("protomatrix entries must be integers")
        e = _frozen(e)
        object.__setattr__(self, "entries", e)
        m, n = e.shape
        if m < 1 or n < 1:
            raise ParseError("protomatrix needs m >= 1 and n >= 1")
        if np.any(e < 0):
            raise ParseError("negative entry in protomatrix")
        if self.n_r < 1 or self.n_p < 0:
            raise ParseError("need n_r >= 1 and n_p >= 0")
        if self.n_r + self.n_p >= n:
            raise ParseError("no transmitted columns: n_r + n_p must be < n")

    @property
    def m(self) -> int:
        return int(self.entries.shape[0])

    @property
    def n(self) -> int:
        return int(self.entries.shape[1])

    @property
    def n_t(self) -> int:
        """Number of transmitted columns."""
        return self.n - self.n_r - self.n_p

    @property
    def rate(self) -> float:
        return code_rate(self)

    def roles(self) -> np.ndarray:
        """Per-column role codes: 0 source, 1 punctured, 2 transmitted."""
        r = np.full(self.n, 2, dtype=np.int8)
        r[: self.n_r] = 0
        r[self.n_r : self.n_r + self.n_p] = 1
        return r

    def digest(self) -> str:
        """Short content hash, stable across processes."""
        return hashlib.sha256(format_protomatrix(self).encode()).hexdigest()[:16]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Protomatrix):
            return NotImplemented
        return (
            self.n_r == other.n_r
            and self.n_p == other.n_p
            and self.entries.shape == other.entries.shape
            and bool(np.array_equal(self.entries, other.entries))
        )

    def __hash__(self) -> int:
        return hash((self.n_r, self.n_p, self.entries.shape, self.entries.tobytes()))


@dataclass(frozen=True)
class SourceModel:
    """Bernoulli source with ``P(1) = p1``."""

    p1: float

    def __post_init__(self) -> None:
        if not (0.0 < self.p1 < 1.0) or self.p1 == 0.5:
            raise ValueError("p1 must lie in (0, 1) and differ from 0.5")

    @property
    def llr_s(self) -> float:
        """Prior LLR ln((1 - p1) / p1)."""
        return math.log((1.0 - self.p1) / self.p1)

    @property
    def entropy(self) -> float:
        return source_entropy(self.p1)


@dataclass(frozen=True)
class SubSplit:
    """Untransmitted (``b_p``) and transmitted (``b_t``) column blocks."""

    b_p: np.ndarray
    b_t: np.ndarray
    n_r: int
    n_p: int

    def join(self) -> np.ndarray:
        return np.hstack([self.b_p, self.b_t])


def parse_protomatrix(text: str, name: str = "") -> Protomatrix:
    """Parse the plain-text protomatrix format.

    Line 1 holds ``m n n_r n_p``; the next ``m`` non-empty lines hold ``n``
    integers each. ``#`` starts a comment anywhere on a line.
    """
    rows: list[list[str]] = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append(line.split())
    if not rows:
        raise ParseError("empty protomatrix file")
    head = rows[0]
    if len(head) != 4:
        raise ParseError("header must be 'm n n_r n_p'")
    try:
        m, n, n_r, n_p = (int(t) for t in head)
    except ValueError as exc:
        raise ParseError(f"non-integer header: {head}") from exc
    body = rows[1:]
    if len(body) != m:
        raise ParseError(f"expected {m} rows, found {len(body)}")
    vals = []
    for k, r in enumerate(body):
        if len(r) != n:
            raise ParseError(f"row {k + 1} has {len(r)} entries, expected {n}")
        try:
            vals.append([int(t) for t in r])
        except ValueError as exc:
            raise ParseError(f"non-integer entry in row {k + 1}") from exc
    return Protomatrix(np.array(vals, dtype=np.int64).reshape(m, n), n_r, n_p, name=name)


def load_protomatrix(path: str | Path) -> Protomatrix:
    """Read a protomatrix file; the stem becomes the name."""
    p = Path(path)
    return parse_protomatrix(p.read_text(), name=p.stem)


def format_protomatrix(b: Protomatrix, comments: list[str] | None = None) -> str:
    """Serialize to the plain-text format (round-trips with the parser)."""
    lines = [f"# {c}" for c in (comments or [])]
    lines.append(f"{b.m} {b.n} {b.n_r} {b.n_p}")
    lines += [" ".join(str(int(v)) for v in row) for row in b.entries]
    return "\n".join(lines) + "\n"


def code_rate(b: Protomatrix) -> float:
    """Symbol code rate ``n_r / (n - n_r - n_p)``."""
    return b.n_r / b.n_t


def source_entropy(p1: float) -> float:
    """Binary entropy in bits per symbol."""
    if not (0.0 < p1 < 1.0) or p1 == 0.5:
        raise ValueError("p1 must lie in (0, 1) and differ from 0.5")
    return float(-p1 * math.log2(p1) - (1.0 - p1) * math.log2(1.0 - p1))


def es_n0_to_sigma(es_n0_db: float, rate: float) -> float:
    """Noise standard deviation for ``Es/N0 = 10 log10(1 / (2 sigma^2 R))``."""
    if rate <= 0:
        raise ValueError("rate must be positive")
    return math.sqrt(1.0 / (2.0 * rate * 10.0 ** (es_n0_db / 10.0)))


def sigma_to_es_n0(sigma: float, rate: float) -> float:
    """Inverse of :func:`es_n0_to_sigma`."""
    if rate <= 0 or sigma <= 0:
        raise ValueError("rate and sigma must be positive")
    return 10.0 * math.log10(1.0 / (2.0 * sigma * sigma * rate))


def split_sub(b: Protomatrix) -> SubSplit:
    """Split into the untransmitted block and the transmitted block."""
    k = b.n_r + b.n_p
    return SubSplit(_frozen(b.entries[:, :k]), _frozen(b.entries[:, k:]), b.n_r, b.n_p)
