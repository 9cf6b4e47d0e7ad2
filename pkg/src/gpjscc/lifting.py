"""Progressive-edge-growth lifting of protomatrices.

Every protograph edge of multiplicity ``e`` between row block ``r`` and column
block ``c`` is realized as ``e * z`` lifted edges. Each lifted variable node of
block ``c`` receives ``e[r, c]`` distinct check nodes of block ``r``, and each
check node of block ``r`` receives ``e[r, c]`` variable nodes of block ``c``.
Within those type constraints edges are placed greedily by PEG: a new edge goes
to an eligible check node that is as far as possible from the variable node in
the current graph.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .protomatrix import Protomatrix

__all__ = [
    "LiftedCode",
    "peg_lift",
    "measure_girth",
    "write_alist",
    "read_alist",
    "save_lifted",
    "load_lifted",
]

ROLE_NAMES = ("source", "punctured", "transmitted")


@dataclass(frozen=True, eq=False)
class LiftedCode:
    """Binary parity-check matrix with per-column roles.

    Attributes:
        h: ``(m z) x (n z)`` CSR matrix with 0/1 entries.
        z: lifting factor.
        roles: per-column role codes, 0 source, 1 punctured, 2 transmitted.
        girth: shortest Tanner-graph cycle (``inf`` when acyclic).
        seed: RNG seed used by the lifter.
    """

    h: sp.csr_matrix
    z: int
    roles: np.ndarray
    girth: float
    seed: int = 0
    base: Protomatrix | None = field(default=None, compare=False)

    @property
    def n_rows(self) -> int:
        return int(self.h.shape[0])

    @property
    def n_cols(self) -> int:
        return int(self.h.shape[1])

    @cached_property
    def source_idx(self) -> np.ndarray:
        return np.flatnonzero(self.roles == 0)

    @cached_property
    def punctured_idx(self) -> np.ndarray:
        return np.flatnonzero(self.roles == 1)

    @cached_property
    def transmitted_idx(self) -> np.ndarray:
        return np.flatnonzero(self.roles == 2)

    @property
    def rate(self) -> float:
        return self.source_idx.size / self.transmitted_idx.size

    def syndrome(self, v: np.ndarray) -> np.ndarray:
        """``H v^T mod 2`` for one word or a ``(F, N)`` batch."""
        v = np.asarray(v, dtype=np.int64)
        s = self.h @ v.T
        return (np.asarray(s) % 2).T.astype(np.uint8)


def peg_lift(b: Protomatrix, z: int, seed: int = 0, girth: bool = True) -> LiftedCode:
    """Lift ``b`` by a factor ``z`` with progressive edge growth.

    Candidate check nodes for an edge of type ``(r, c)`` are the nodes of row
    block ``r`` with spare capacity for column block ``c`` that are not yet
    adjacent to the variable node. Among the candidates farthest from the
    variable node, ties are broken by lowest current degree, then by most
    remaining capacity for the column block, then by a seeded RNG draw. If a
    variable node is blocked (every check node with spare capacity is already
    its neighbour), an earlier edge of the same type is rewired to free a
    slot.

    Args:
        b: protomatrix.
        z: lifting factor, at least the largest entry of ``b``.
        seed: RNG seed; identical inputs give bit-identical matrices.
        girth: compute the girth of the result (skip for speed).

    Raises:
        ValueError: if ``z < 1`` or ``z < max(b.entries)``.
    """
    e = np.asarray(b.entries, dtype=np.int64)
    if z < 1:
        raise ValueError("z must be >= 1")
    if e.size and z < int(e.max()):
        raise ValueError(f"z={z} cannot host parallel edges of multiplicity {int(e.max())}")
    rng = np.random.default_rng(seed)
    m, n = e.shape
    n_cn, n_vn = m * z, n * z
    vdeg = e.sum(0)
    cdeg = e.sum(1)
    dv, dc = max(int(vdeg.max()), 1), max(int(cdeg.max()), 1)
    vn_adj = np.full((n_vn, dv), -1, dtype=np.int64)
    cn_adj = np.full((n_cn, dc), -1, dtype=np.int64)
    vn_fill = np.zeros(n_vn, dtype=np.int64)
    cn_fill = np.zeros(n_cn, dtype=np.int64)
    cap = np.repeat(e, z, axis=0)  # cap[u, c]: free slots of CN u for column block c

    def add(v: int, u: int) -> None:
        vn_adj[v, vn_fill[v]] = u
        vn_fill[v] += 1
        cn_adj[u, cn_fill[u]] = v
        cn_fill[u] += 1

    def remove(v: int, u: int) -> None:
        row = vn_adj[v, : vn_fill[v]]
        k = int(np.flatnonzero(row == u)[0])
        row[k] = row[-1]
        vn_adj[v, vn_fill[v] - 1] = -1
        vn_fill[v] -= 1
        col = cn_adj[u, : cn_fill[u]]
        k = int(np.flatnonzero(col == v)[0])
        col[k] = col[-1]
        cn_adj[u, cn_fill[u] - 1] = -1
        cn_fill[u] -= 1

    def farthest(v: int, cand: np.ndarray) -> np.ndarray:
        """Subset of ``cand`` (bool over CNs) at maximal distance from ``v``."""
        if vn_fill[v] == 0:
            return cand
        reached = np.zeros(n_cn, dtype=bool)
        seen = np.zeros(n_vn, dtype=bool)
        seen[v] = True
        frontier = np.array([v])
        while True:
            cns = vn_adj[frontier].ravel()
            cns = cns[cns >= 0]
            cns = np.unique(cns[~reached[cns]])
            if cns.size == 0:
                return cand & ~reached
            nxt = reached.copy()
            nxt[cns] = True
            if not (cand & ~nxt).any():
                return cand & ~reached
            reached = nxt
            vns = cn_adj[cns].ravel()
            vns = vns[vns >= 0]
            vns = np.unique(vns[~seen[vns]])
            seen[vns] = True
            frontier = vns

    def repair(v: int, c: int, r: int) -> int:
        """Free a CN of block ``r`` not adjacent to ``v`` by rewiring."""
        lo, hi = r * z, (r + 1) * z
        nbrs = set(vn_adj[v, : vn_fill[v]].tolist())
        full = [u for u in range(lo, hi) if cap[u, c] > 0]  # all adjacent to v
        others = [u for u in range(lo, hi) if u not in nbrs]
        for u_star in full:
            for u2 in others:
                for v2 in cn_adj[u2, : cn_fill[u2]].tolist():
                    if v2 // z != c or v2 == v:
                        continue
                    if u_star in vn_adj[v2, : vn_fill[v2]]:
                        continue
                    remove(v2, u2)
                    add(v2, u_star)
                    cap[u_star, c] -= 1
                    cap[u2, c] += 1
                    return u2
        raise RuntimeError("PEG lifting could not place an edge")

    order = np.argsort(np.repeat(vdeg, z), kind="stable")
    for v in order.tolist():
        c = v // z
        types = [r for r in range(m) for _ in range(int(e[r, c]))]
        for r in types:
            lo, hi = r * z, (r + 1) * z
            cand = np.zeros(n_cn, dtype=bool)
            cand[lo:hi] = cap[lo:hi, c] > 0
            cand[vn_adj[v, : vn_fill[v]]] = False
            if not cand.any():
                u = repair(v, c, r)
            else:
                pool = np.flatnonzero(farthest(v, cand))
                deg = cn_fill[pool]
                pool = pool[deg == deg.min()]
                room = cap[pool, c]
                pool = pool[room == room.max()]
                u = int(pool[rng.integers(pool.size)]) if pool.size > 1 else int(pool[0])
            add(v, u)
            cap[u, c] -= 1

    rows = np.concatenate([np.full(vn_fill[v], v) for v in range(n_vn)]) if n_vn else np.empty(0)
    cols = np.concatenate([vn_adj[v, : vn_fill[v]] for v in range(n_vn)]) if n_vn else np.empty(0)
    h = sp.csr_matrix(
        (np.ones(rows.size, dtype=np.uint8), (cols.astype(np.int64), rows.astype(np.int64))),
        shape=(n_cn, n_vn),
    )
    h.sort_indices()
    roles = np.repeat(b.roles(), z)
    code = LiftedCode(h, z, roles, np.inf, seed, b)
    if girth:
        object.__setattr__(code, "girth", measure_girth(code))
    return code


def _girth_of(h: sp.csr_matrix) -> float:
    """Shortest cycle length of the bipartite graph with biadjacency ``h``."""
    h = sp.csr_matrix(h)
    m, n = h.shape
    hc = h.tocsc()
    # nodes 0..n-1 are VNs, n..n+m-1 CNs
    adj = [(hc.indices[hc.indptr[j] : hc.indptr[j + 1]] + n).tolist() for j in range(n)]
    adj += [h.indices[h.indptr[i] : h.indptr[i + 1]].tolist() for i in range(m)]
    best = np.inf
    for root in range(n):
        dist = {root: 0}
        parent = {root: -1}
        q = deque([root])
        while q:
            x = q.popleft()
            d = dist[x]
            if 2 * d + 1 >= best:
                break
            for y in adj[x]:
                if y == parent[x]:
                    continue
                if y in dist:
                    best = min(best, d + dist[y] + 1)
                else:
                    dist[y] = d + 1
                    parent[y] = x
                    q.append(y)
    return float(best)


def measure_girth(code: LiftedCode | sp.spmatrix | np.ndarray) -> float:
    """Length of the shortest Tanner-graph cycle, ``inf`` if acyclic."""
    h = code.h if isinstance(code, LiftedCode) else code
    return _girth_of(sp.csr_matrix(h))


# --------------------------------------------------------------------------
# serialization


def write_alist(h: sp.spmatrix) -> str:
    """Sparse alist text (MacKay format, column-major first)."""
    h = sp.csr_matrix(h)
    m, n = h.shape
    hc = h.tocsc()
    cdeg = np.diff(hc.indptr)
    rdeg = np.diff(h.indptr)
    lines = [f"{n} {m}", f"{int(cdeg.max(initial=0))} {int(rdeg.max(initial=0))}"]
    lines.append(" ".join(map(str, cdeg)))
    lines.append(" ".join(map(str, rdeg)))
    for j in range(n):
        lines.append(" ".join(str(i + 1) for i in sorted(hc.indices[hc.indptr[j] : hc.indptr[j + 1]])))
    for i in range(m):
        lines.append(" ".join(str(j + 1) for j in sorted(h.indices[h.indptr[i] : h.indptr[i + 1]])))
    return "\n".join(lines) + "\n"


def read_alist(text: str) -> sp.csr_matrix:
    tok = text.split("\n")
    n, m = map(int, tok[0].split())
    rows, cols = [], []
    for j in range(n):
        for t in tok[4 + j].split():
            if int(t) > 0:
                rows.append(int(t) - 1)
                cols.append(j)
    h = sp.csr_matrix((np.ones(len(rows), dtype=np.uint8), (rows, cols)), shape=(m, n))
    h.sort_indices()
    return h


def save_lifted(code: LiftedCode, stem: str | Path) -> tuple[Path, Path]:
    """Write ``<stem>.alist`` and the ``<stem>.json`` sidecar."""
    stem = Path(stem)
    a, j = stem.with_suffix(".alist"), stem.with_suffix(".json")
    a.write_text(write_alist(code.h))
    meta = {
        "z": code.z,
        "roles": [ROLE_NAMES[r] for r in code.roles.tolist()],
        "girth": None if not np.isfinite(code.girth) else int(code.girth),
        "seed": code.seed,
    }
    j.write_text(json.dumps(meta))
    return a, j


def load_lifted(stem: str | Path) -> LiftedCode:
    stem = Path(stem)
    h = read_alist(stem.with_suffix(".alist").read_text())
    meta = json.loads(stem.with_suffix(".json").read_text())
    roles = np.array([ROLE_NAMES.index(r) for r in meta["roles"]], dtype=np.int8)
    g = np.inf if meta["girth"] is None else float(meta["girth"])
    return LiftedCode(h, int(meta["z"]), roles, g, int(meta["seed"]))
