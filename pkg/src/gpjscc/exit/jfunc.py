"""Mutual-information transfer functions.

Two realizations of ``J`` are provided:

* ``"exact"``: quadrature of the consistent-Gaussian LLR integral, tabulated on
  a dense grid in the LLR standard deviation and interpolated in the log of
  ``1 - J`` (monotone, and accurate deep into saturation).
* ``"fit"``: the piecewise closed-form fit of ten Brink, Kramer and Ashikhmin
  (2004), which threshold tables in the protograph literature are computed with.

Both expose a *variance-domain* interface (``j_var(v) = J(sqrt(v))`` and
``inv_var(I) = J^-1(I)^2``) because every EXIT update sums squared ``J^-1``
terms. The biased-source function ``J_BSC`` is always evaluated by quadrature
and cached per ``p1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

__all__ = [
    "softplus_expectation",
    "j_fun",
    "j_inv",
    "j_bsc",
    "JModel",
    "get_jmodel",
    "jbsc_table",
    "jbsc_var",
    "jbsc_var_rows",
    "bi_awgn_capacity",
]

# Trapezoid nodes on the standardized Gaussian, truncated at 10 sigma.
_T = np.linspace(-10.0, 10.0, 1001)
_W = np.exp(-0.5 * _T**2)
_W /= _W.sum()
_LN2 = math.log(2.0)

SIGMA_MAX = 20.0  # 1 - J(20) ~ 1e-22, treated as saturated beyond
_EXACT_H = 1e-3
_BSC_H = 1e-2


def softplus_expectation(mean, var) -> np.ndarray:
    """``E[log2(1 + exp(-X))]`` for ``X ~ N(mean, var)``, elementwise."""
    mean = np.asarray(mean, dtype=float)
    sd = np.sqrt(np.maximum(np.asarray(var, dtype=float), 0.0))
    mean, sd = np.broadcast_arrays(mean, sd)
    out = np.empty(mean.shape)
    flat_m, flat_s, flat_o = mean.ravel(), sd.ravel(), out.reshape(-1)
    step = 4096
    for a in range(0, flat_m.size, step):
        x = flat_m[a : a + step, None] + flat_s[a : a + step, None] * _T
        flat_o[a : a + step] = (np.logaddexp(0.0, -x) * _W).sum(-1) / _LN2
    return out


# --------------------------------------------------------------------------
# exact J table


@lru_cache(maxsize=1)
def _exact_table() -> tuple[np.ndarray, np.ndarray]:
    s = np.linspace(0.0, SIGMA_MAX, int(round(SIGMA_MAX / _EXACT_H)) + 1)
    v = s * s
    logc = np.log(softplus_expectation(v / 2.0, v))
    logc[0] = 0.0
    # strict monotonicity for inverse interpolation
    logc = np.minimum.accumulate(logc - np.arange(logc.size) * 1e-15)
    return s, logc


def _j_exact_sigma(s: np.ndarray) -> np.ndarray:
    grid, logc = _exact_table()
    s = np.asarray(s, dtype=float)
    out = 1.0 - np.exp(np.interp(s, grid, logc))
    return np.where(s >= SIGMA_MAX, 1.0, out)


def _j_inv_exact_sigma(i: np.ndarray) -> np.ndarray:
    grid, logc = _exact_table()
    i = np.clip(np.asarray(i, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore"):
        t = np.log(np.maximum(1.0 - i, 1e-300))
    return np.interp(-t, -logc, grid)


# --------------------------------------------------------------------------
# closed-form fit

_S_STAR = 1.6363
_I_STAR = 0.3646


def _j_fit_sigma(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    lo = -0.0421061 * s**3 + 0.209252 * s**2 - 0.00640081 * s
    sc = np.minimum(s, 10.0)
    hi = 1.0 - np.exp(0.00181491 * sc**3 - 0.142675 * sc**2 - 0.0822054 * sc + 0.0549608)
    # the low branch dips below zero for s < 0.031
    return np.clip(np.where(s <= _S_STAR, lo, np.where(s < 10.0, hi, 1.0)), 0.0, 1.0)


def _j_inv_fit_sigma(i: np.ndarray) -> np.ndarray:
    i = np.clip(np.asarray(i, dtype=float), 0.0, 1.0)
    lo = 1.09542 * i**2 + 0.214217 * i + 2.33727 * np.sqrt(i)
    hi = -0.706692 * np.log(0.386013 * np.maximum(1.0 - i, 1e-300)) + 1.75017 * i
    return np.where(i <= _I_STAR, lo, hi)


@dataclass(frozen=True)
class JModel:
    """A ``J`` realization in the variance domain."""

    name: str
    sigma_fn: Callable[[np.ndarray], np.ndarray]
    inv_sigma_fn: Callable[[np.ndarray], np.ndarray]

    def j_var(self, v: np.ndarray) -> np.ndarray:
        """``J(sqrt(v))`` with negative inputs clamped to zero."""
        return self.sigma_fn(np.sqrt(np.maximum(v, 0.0)))

    def inv_var(self, i: np.ndarray) -> np.ndarray:
        """``J^-1(I)^2``."""
        s = self.inv_sigma_fn(i)
        return s * s


_MODELS = {
    "exact": JModel("exact", _j_exact_sigma, _j_inv_exact_sigma),
    "fit": JModel("fit", _j_fit_sigma, _j_inv_fit_sigma),
}


def get_jmodel(name: str | JModel = "fit") -> JModel:
    """Look up a realization by name (``"fit"`` or ``"exact"``)."""
    if isinstance(name, JModel):
        return name
    try:
        return _MODELS[name]
    except KeyError:
        raise ValueError(f"unknown J model {name!r}; choose from {sorted(_MODELS)}") from None


def j_fun(sigma, model: str | JModel = "exact"):
    """MI between an equiprobable bit and a consistent Gaussian LLR.

    Args:
        sigma: LLR standard deviation (mean ``sigma**2 / 2``), non-negative.
        model: ``"exact"`` (default) or ``"fit"``.
    """
    s = np.asarray(sigma, dtype=float)
    if np.any(s < 0) or np.any(np.isnan(s)):
        raise ValueError("sigma must be non-negative")
    out = get_jmodel(model).sigma_fn(s)
    return float(out) if out.ndim == 0 else out


def j_inv(mi, model: str | JModel = "exact"):
    """Inverse of :func:`j_fun` on ``[0, 1)``."""
    i = np.asarray(mi, dtype=float)
    if np.any(i < 0) or np.any(i >= 1) or np.any(np.isnan(i)):
        raise ValueError("mi must lie in [0, 1)")
    out = get_jmodel(model).inv_sigma_fn(i)
    return float(out) if out.ndim == 0 else out


def bi_awgn_capacity(sigma: float) -> float:
    """Capacity of the BPSK-input AWGN channel in bits per use."""
    if sigma <= 0:
        return 1.0
    return float(_j_exact_sigma(np.asarray(2.0 / sigma)))


# --------------------------------------------------------------------------
# J_BSC


def _bsc_complement(v: np.ndarray, p1: float) -> np.ndarray:
    """``1 - J_BSC`` for LLR variance ``v`` (mean ``v / 2``)."""
    llr = math.log((1.0 - p1) / p1)
    return (1.0 - p1) * softplus_expectation(v / 2.0 + llr, v) + p1 * softplus_expectation(
        v / 2.0 - llr, v
    )


@lru_cache(maxsize=1024)
def _jbsc_table_cached(p1: float) -> np.ndarray:
    s = np.linspace(0.0, SIGMA_MAX, int(round(SIGMA_MAX / _BSC_H)) + 1)
    t = np.log(np.maximum(_bsc_complement(s * s, p1), 1e-300))
    t.setflags(write=False)
    return t


def _check_p1(p1: float) -> float:
    p1 = float(p1)
    if not (0.0 < p1 < 1.0) or p1 == 0.5:
        raise ValueError("p1 must lie in (0, 1) and differ from 0.5")
    return round(p1, 12)


def jbsc_table(p1: float) -> np.ndarray:
    """Log of ``1 - J_BSC`` on the uniform grid ``sigma = 0, 0.01, ..., 20``."""
    return _jbsc_table_cached(_check_p1(p1))


_BSC_GRID_N = int(round(SIGMA_MAX / _BSC_H)) + 1


def jbsc_var(v, p1: float) -> np.ndarray:
    """``J_BSC`` as a function of the accumulated LLR variance ``v``."""
    t = jbsc_table(p1)
    s = np.sqrt(np.maximum(np.asarray(v, dtype=float), 0.0))
    x = np.minimum(s / _BSC_H, _BSC_GRID_N - 1)
    out = 1.0 - np.exp(np.interp(x, np.arange(_BSC_GRID_N, dtype=float), t))
    return np.where(s >= SIGMA_MAX, 1.0, out)


def jbsc_var_rows(v: np.ndarray, tables: np.ndarray) -> np.ndarray:
    """Batched :func:`jbsc_var` with one table per leading index of ``v``.

    Args:
        v: array of shape ``(B, ...)``.
        tables: array of shape ``(B, K)`` from :func:`jbsc_table`.
    """
    b = v.shape[0]
    flat = np.sqrt(np.maximum(v.reshape(b, -1), 0.0))
    x = np.minimum(flat / _BSC_H, _BSC_GRID_N - 1 - 1e-9)
    i = x.astype(np.int64)
    f = x - i
    rows = np.arange(b)[:, None]
    lc = tables[rows, i] * (1.0 - f) + tables[rows, i + 1] * f
    out = 1.0 - np.exp(lc)
    out = np.where(flat >= SIGMA_MAX, 1.0, out)
    return out.reshape(v.shape)


def j_bsc(mu, p1: float):
    """MI delivered to a source bit by a message of mean LLR magnitude ``mu``.

    The observation is a two-component Gaussian mixture: with probability
    ``p1`` it is ``N(mu - L, 2 mu)`` and otherwise ``N(mu + L, 2 mu)``, where
    ``L = ln((1 - p1) / p1)`` is the source prior. Computed by quadrature
    (not the cached table) and clamped to ``[0, 1]``. ``j_bsc(0, p1)`` is
    ``1 - H(p1)``, the information carried by the prior alone, so the bare
    message contributes nothing.

    Args:
        mu: non-negative mean (half the LLR variance).
        p1: probability of a one.
    """
    m = np.asarray(mu, dtype=float)
    if np.any(m < 0) or np.any(np.isnan(m)):
        raise ValueError("mu must be non-negative")
    p1 = _check_p1(p1)
    out = np.clip(1.0 - _bsc_complement(2.0 * m, p1), 0.0, 1.0)
    return float(out) if out.ndim == 0 else out
