"""Dense GF(2) elimination on bit-packed rows."""
from __future__ import annotations

import numpy as np

__all__ = ["pack_rows", "rref", "column_bits", "rank"]


def pack_rows(a: np.ndarray) -> np.ndarray:
    """Pack a 0/1 matrix into ``uint64`` words, bit ``j % 64`` of word ``j // 64``."""
    a = np.asarray(a, dtype=np.uint8) & 1
    m, n = a.shape
    w = max(1, -(-n // 64))
    pad = np.zeros((m, w * 64), dtype=np.uint8)
    pad[:, :n] = a
    return np.packbits(pad, axis=1, bitorder="little").view("<u8").reshape(m, w).copy()


def column_bits(packed: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Extract columns ``cols`` of a packed matrix as a dense 0/1 array."""
    cols = np.asarray(cols, dtype=np.int64)
    words = packed[:, cols // 64]
    shifts = (cols % 64).astype(np.uint64)
    return ((words >> shifts) & np.uint64(1)).astype(np.uint8)


def rref(a: np.ndarray, order: np.ndarray | None = None) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(2).

    Columns are visited in ``order`` (default natural order) and each takes a
    pivot when possible, so earlier columns in ``order`` are preferred as
    pivots.

    Args:
        a: dense 0/1 matrix of shape ``(m, n)``.
        order: permutation of ``range(n)``.

    Returns:
        ``(packed, pivots)``: the reduced matrix, packed and in the *original*
        column order, and the pivot columns in the order they were chosen
        (row ``k`` of the result holds the pivot ``pivots[k]``).
    """
    a = np.asarray(a, dtype=np.uint8)
    m, n = a.shape
    order = np.arange(n) if order is None else np.asarray(order, dtype=np.int64)
    perm = a[:, order]
    p = pack_rows(perm)
    r = 0
    piv: list[int] = []
    for c in range(n):
        if r == m:
            break
        w = c // 64
        mask = np.uint64(1) << np.uint64(c % 64)
        hit = (p[r:, w] & mask) != 0
        if not hit.any():
            continue
        k = r + int(np.argmax(hit))
        if k != r:
            p[[r, k]] = p[[k, r]]
        rows = np.flatnonzero((p[:, w] & mask) != 0)
        rows = rows[rows != r]
        if rows.size:
            p[rows, w:] ^= p[r, w:]
        piv.append(int(order[c]))
        r += 1
    # undo the column permutation
    dense = np.unpackbits(p.view(np.uint8), axis=1, bitorder="little")[:, :n]
    out = np.zeros_like(dense)
    out[:, order] = dense
    return pack_rows(out), piv


def rank(a: np.ndarray) -> int:
    """Rank over GF(2)."""
    return len(rref(a)[1])
