"""Reference computations written independently of the package internals."""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate


def j_quad(sigma: float) -> float:
    """Consistent-Gaussian MI by adaptive quadrature."""
    if sigma == 0:
        return 0.0
    mu, s2 = sigma**2 / 2, sigma**2

    def f(x):
        return math.exp(-((x - mu) ** 2) / (2 * s2)) / math.sqrt(2 * math.pi * s2) * math.log2(1 + math.exp(-x))

    val, _ = integrate.quad(f, mu - 40 * sigma, mu + 40 * sigma, limit=400, epsabs=1e-13, epsrel=1e-12)
    return 1.0 - val


def j_inv_bisect(mi: float, lo: float = 0.0, hi: float = 50.0) -> float:
    """Bisection inverse of :func:`j_quad`."""
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if j_quad(mid) < mi:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def j_bsc_monte_carlo(mu: float, p1: float, n: int = 10_000_000, seed: int = 12345) -> float:
    """Mixture MI by sampling the sign-aligned posterior LLR."""
    rng = np.random.default_rng(seed)
    L = math.log((1 - p1) / p1)
    ones = rng.random(n) < p1
    msg = rng.normal(mu, math.sqrt(2 * mu), n)
    post = msg + np.where(ones, -L, L)
    return 1.0 - float(np.mean(np.logaddexp(0.0, -post)) / math.log(2))


def gf2_rank(a) -> int:
    """Rank over GF(2) using Python integers as bit rows."""
    rows = [int("".join(str(int(x)) for x in r), 2) for r in np.asarray(a)]
    rank = 0
    while rows:
        piv = rows.pop()
        if piv == 0:
            continue
        rank += 1
        top = piv.bit_length() - 1
        rows = [r ^ piv if (r >> top) & 1 else r for r in rows]
    return rank


def syndrome(h, v) -> np.ndarray:
    """Parity checks of ``v`` by an explicit loop over the nonzeros of ``h``."""
    coo = h.tocoo()
    out = np.zeros(h.shape[0], dtype=np.int64)
    for r, c in zip(coo.row, coo.col):
        out[r] ^= int(v[c])
    return out


def binary_entropy(p: float) -> float:
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def wilson(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    p = k / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return mid - half, mid + half
