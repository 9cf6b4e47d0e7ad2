"""Source-driven GF(2) encoder and sum-product BP decoder.

The encoder fixes the source positions of the codeword to the source bits and
solves ``H v^T = 0`` for the remaining positions. When the non-source block of
``H`` is singular (this happens for every lift of some protographs, e.g. when a
row block has only even multiplicities outside the source columns), a few
source positions are *pinned*: they become computed positions instead of free
inputs. Pinned positions are reported by the encoder and excluded from source
error counting. ``strict=True`` refuses such lifts instead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import UnencodableError
from .gf2 import column_bits, rref
from .lifting import LiftedCode

__all__ = [
    "Encoder",
    "DecodeResult",
    "BPDecoder",
    "build_encoder",
    "encode",
    "init_llrs",
    "bp_decode",
    "LLR_CLAMP",
]

LLR_CLAMP = 50.0
_TINY = 1e-12


@dataclass(frozen=True, eq=False)
class Encoder:
    """Factorized solve of ``H v^T = 0`` given the free source bits.

    Attributes:
        code: the lifted code.
        pivot_cols: codeword positions computed from the free source bits.
        coeff: ``(len(pivot_cols), len(free_src))`` 0/1 matrix with
            ``v[pivot_cols] = coeff @ v[free_src] mod 2``.
        free_src: source positions copied from the input.
        pinned_src: source positions overwritten by the solve.
        rank: GF(2) rank of ``H``.
    """

    code: LiftedCode
    pivot_cols: np.ndarray
    coeff: np.ndarray
    free_src: np.ndarray
    pinned_src: np.ndarray
    rank: int

    @property
    def n_source(self) -> int:
        return int(self.code.source_idx.size)

    def free_mask(self) -> np.ndarray:
        """Boolean mask over the ``n_r z`` source inputs that are kept."""
        pos = np.searchsorted(self.code.source_idx, self.free_src)
        mask = np.zeros(self.n_source, dtype=bool)
        mask[pos] = True
        return mask


def build_encoder(code: LiftedCode, strict: bool = False) -> Encoder:
    """Eliminate ``H`` with non-source columns preferred as pivots.

    Pivots are taken from punctured and transmitted columns first and from
    source columns (last to first) only when the non-source block is rank
    deficient. Free non-source columns are set to zero.

    Args:
        code: lifted code.
        strict: require an invertible square non-source block.

    Raises:
        UnencodableError: in strict mode, if the non-source block is not
            square and invertible.
    """
    h = code.h.toarray().astype(np.uint8)
    n = h.shape[1]
    src = code.source_idx
    non_src = np.flatnonzero(code.roles != 0)
    order = np.concatenate([non_src, src[::-1]])
    packed, piv = rref(h, order)
    piv_arr = np.array(piv, dtype=np.int64)
    is_src = np.zeros(n, dtype=bool)
    is_src[src] = True
    n_ns_piv = int((~is_src[piv_arr]).sum()) if piv_arr.size else 0
    if strict and (non_src.size != h.shape[0] or n_ns_piv != non_src.size):
        raise UnencodableError("unencodable lift: non-source block is singular")
    pinned = np.sort(piv_arr[is_src[piv_arr]]) if piv_arr.size else np.empty(0, np.int64)
    free_src = np.setdiff1d(src, pinned)
    coeff = column_bits(packed[: len(piv)], free_src)
    return Encoder(code, piv_arr, coeff, free_src, pinned, len(piv))


def encode(enc: Encoder, source_bits: np.ndarray) -> np.ndarray:
    """Codeword(s) for one source vector or a ``(F, n_r z)`` batch.

    Pinned source positions take the values required by the parity checks.
    """
    s = np.asarray(source_bits)
    single = s.ndim == 1
    s2 = np.atleast_2d(s).astype(np.uint8)
    if s2.shape[1] != enc.n_source:
        raise ValueError(f"expected {enc.n_source} source bits, got {s2.shape[1]}")
    f = s2.shape[0]
    v = np.zeros((f, enc.code.n_cols), dtype=np.uint8)
    v[:, enc.code.source_idx] = s2
    if enc.pivot_cols.size:
        free = v[:, enc.free_src].astype(np.float64)
        par = free @ enc.coeff.T.astype(np.float64)
        v[:, enc.pivot_cols] = (np.rint(par).astype(np.int64) & 1).astype(np.uint8)
    return v[0] if single else v


def init_llrs(code: LiftedCode, received: np.ndarray, p1: float, sigma: float) -> np.ndarray:
    """Initial decoder LLRs.

    Source positions get ``ln((1 - p1) / p1)``, punctured positions 0 and
    transmitted positions ``2 y / sigma^2`` (BPSK maps 0 to +1, 1 to -1).

    Args:
        received: channel outputs for the transmitted positions, shape
            ``(n_t z,)`` or ``(F, n_t z)``.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if not (0.0 < p1 < 1.0):
        raise ValueError("p1 must lie in (0, 1)")
    y = np.asarray(received, dtype=float)
    single = y.ndim == 1
    y2 = np.atleast_2d(y)
    if y2.shape[1] != code.transmitted_idx.size:
        raise ValueError("received length does not match the transmitted positions")
    out = np.zeros((y2.shape[0], code.n_cols))
    out[:, code.source_idx] = math.log((1.0 - p1) / p1)
    out[:, code.transmitted_idx] = 2.0 * y2 / (sigma * sigma)
    return out[0] if single else out


@dataclass
class DecodeResult:
    """Hard decisions with convergence flags.

    For a batch input, ``bits`` is ``(F, N)`` and the other fields are arrays.
    """

    bits: np.ndarray
    converged: bool | np.ndarray
    iterations: int | np.ndarray


def _phi(x: np.ndarray) -> np.ndarray:
    """``-log(tanh(x / 2))``, its own inverse on ``x > 0``."""
    x = np.clip(x, _TINY, LLR_CLAMP)
    return -np.log(np.tanh(0.5 * x))


class BPDecoder:
    """Flooding sum-product decoder bound to one parity-check matrix."""

    def __init__(self, h: sp.spmatrix):
        h = sp.csr_matrix(h)
        h.sort_indices()
        self.h = h
        m, n = h.shape
        self.cn = np.repeat(np.arange(m), np.diff(h.indptr))
        self.vn = h.indices.astype(np.int64)
        ne = self.vn.size
        ones = np.ones(ne)
        self.s_vn = sp.csr_matrix((ones, (self.vn, np.arange(ne))), shape=(n, ne))
        self.s_cn = sp.csr_matrix((ones, (self.cn, np.arange(ne))), shape=(m, ne))

    def decode(self, llrs: np.ndarray, i_max: int = 200, trace: list | None = None) -> DecodeResult:
        """Decode one LLR vector or a ``(F, N)`` batch.

        The check update is the tanh rule evaluated in the ``phi`` domain
        (``phi(x) = -log tanh(x / 2)``), with messages clamped to
        ``[-50, 50]``. Decoding of a frame stops at the first iteration whose
        hard decision has zero syndrome.

        Args:
            llrs: initial LLRs.
            i_max: iteration cap, at least 1.
            trace: optional list receiving the mean ``|APP|`` per iteration
                (over frames still running).
        """
        if i_max < 1:
            raise ValueError("i_max must be >= 1")
        L = np.asarray(llrs, dtype=float)
        single = L.ndim == 1
        L2 = np.atleast_2d(L)
        f, n = L2.shape
        if n != self.h.shape[1]:
            raise ValueError("LLR length does not match the code")
        bits = np.zeros((f, n), dtype=np.uint8)
        conv = np.zeros(f, dtype=bool)
        iters = np.full(f, i_max, dtype=np.int64)

        active = np.arange(f)
        lt = np.clip(L2.T, -LLR_CLAMP, LLR_CLAMP)  # (N, F)
        r = np.zeros((self.vn.size, f))
        for it in range(1, i_max + 1):
            col = self.s_vn @ r
            q = np.clip(lt[self.vn] + col[self.vn] - r, -LLR_CLAMP, LLR_CLAMP)
            mag = _phi(np.abs(q))
            neg = (q < 0).astype(np.float64)
            tot = self.s_cn @ mag
            par = np.rint(self.s_cn @ neg).astype(np.int64) & 1
            sign = 1.0 - 2.0 * ((par[self.cn] + neg.astype(np.int64)) & 1)
            r = sign * _phi(np.maximum(tot[self.cn] - mag, _TINY))
            app = lt + self.s_vn @ r
            hard = (app < 0).astype(np.uint8)
            if trace is not None:
                trace.append(float(np.abs(app).mean()))
            synd = np.rint(self.h @ hard.astype(np.float64)).astype(np.int64) & 1
            ok = ~synd.any(axis=0)
            bits[active] = hard.T
            if ok.any():
                conv[active[ok]] = True
                iters[active[ok]] = it
                keep = ~ok
                active = active[keep]
                if active.size == 0:
                    break
                lt, r = lt[:, keep], r[:, keep]
        if single:
            return DecodeResult(bits[0], bool(conv[0]), int(iters[0]))
        return DecodeResult(bits, conv, iters)


@lru_cache(maxsize=8)
def _decoder_for(code: LiftedCode) -> BPDecoder:
    return BPDecoder(code.h)


def bp_decode(code: LiftedCode, llrs: np.ndarray, i_max: int = 200) -> DecodeResult:
    """Sum-product decoding with early stopping on a zero syndrome."""
    return _decoder_for(code).decode(llrs, i_max)
