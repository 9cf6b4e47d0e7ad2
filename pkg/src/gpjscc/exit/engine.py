"""Batched protograph EXIT fixed-point iteration.

One engine serves both threshold algorithms. A batch holds ``B`` independent
problems sharing a shape ``(m, n)`` and a source-column count ``n_r``; each
problem has its own entries, per-column channel variance and ``J_BSC`` table,
so a batch can be a scan over operating points or a set of search candidates.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jfunc import JModel, get_jmodel, jbsc_var_rows

__all__ = ["ExitState", "BatchOutcome", "run_batch"]


@dataclass
class ExitState:
    """Per-edge mutual information after the final iteration.

    Attributes:
        i_ev: VN-to-CN extrinsic MI.
        i_ac: CN a-priori MI (equal to ``i_ev``).
        i_ec: CN-to-VN extrinsic MI.
        i_av: VN a-priori MI (equal to ``i_ec``).
        i_app: per-column APP MI.
    """

    i_ev: np.ndarray
    i_ac: np.ndarray
    i_ec: np.ndarray
    i_av: np.ndarray
    i_app: np.ndarray


@dataclass
class BatchOutcome:
    converged: np.ndarray
    iterations: np.ndarray
    states: list[ExitState] | None = None


def _step(e, psi, i_av, n_r, ch, tabs, jm: JModel):
    """One VN, CN and APP update in the MI domain."""
    v_in = jm.inv_var(i_av)
    ext = (e * v_in).sum(1, keepdims=True) - v_in
    i_ev = np.empty_like(e)
    if n_r:
        i_ev[..., :n_r] = jbsc_var_rows(ext[..., :n_r], tabs)
    i_ev[..., n_r:] = jm.j_var(ext[..., n_r:] + ch[:, None, n_r:])
    i_ev = np.where(psi, i_ev, 0.0)

    v_c = jm.inv_var(1.0 - i_ev)
    row = (e * v_c).sum(2, keepdims=True)
    i_ec = np.where(psi, 1.0 - jm.j_var(row - v_c), 0.0)

    tot = (e * jm.inv_var(i_ec)).sum(1)
    app = np.empty(tot.shape)
    if n_r:
        app[:, :n_r] = jbsc_var_rows(tot[:, :n_r], tabs)
    app[:, n_r:] = jm.j_var(tot[:, n_r:] + ch[:, n_r:])
    return i_ev, i_ec, app


def run_batch(
    entries: np.ndarray,
    n_r: int,
    ch_var: np.ndarray,
    tables: np.ndarray | None,
    jmodel: str | JModel = "fit",
    max_iters: int = 200,
    tol: float = 1e-6,
    keep_state: bool = False,
) -> BatchOutcome:
    """Iterate until ``sum_j (1 - I_APP(j)) < tol`` or ``max_iters``.

    Args:
        entries: ``(B, m, n)`` multiplicities (or ``(m, n)``, broadcast).
        n_r: number of leading source columns (``J_BSC`` branch).
        ch_var: ``(B, n)`` channel LLR variance per column, ``4 / sigma^2``
            on transmitted columns and zero elsewhere.
        tables: ``(B, K)`` ``J_BSC`` tables, required when ``n_r > 0``.
        jmodel: ``J`` realization.
        max_iters: iteration cap.
        tol: convergence tolerance on the APP deficit.
        keep_state: return the final :class:`ExitState` of every problem.
    """
    jm = get_jmodel(jmodel)
    ch_var = np.atleast_2d(np.asarray(ch_var, dtype=float))
    e_all = np.asarray(entries, dtype=float)
    if e_all.ndim == 2:
        e_all = np.broadcast_to(e_all, (ch_var.shape[0],) + e_all.shape)
    bsz, m, n = e_all.shape
    if ch_var.shape != (bsz, n):
        raise ValueError("ch_var must have shape (B, n)")
    if n_r and (tables is None or tables.shape[0] != bsz):
        raise ValueError("one J_BSC table per problem is required")
    if tables is None:
        tables = np.zeros((bsz, 2))

    converged = np.zeros(bsz, dtype=bool)
    iterations = np.full(bsz, max_iters, dtype=np.int64)
    if keep_state:
        s_ev = np.zeros((bsz, m, n))
        s_ec = np.zeros((bsz, m, n))
        s_app = np.zeros((bsz, n))

    active = np.arange(bsz)
    e = e_all
    psi = e > 0
    ch, tabs = ch_var, tables
    i_av = np.zeros((bsz, m, n))
    for t in range(1, max_iters + 1):
        i_ev, i_ec, app = _step(e, psi, i_av, n_r, ch, tabs, jm)
        done = (1.0 - app).sum(1) < tol
        if keep_state:
            s_ev[active], s_ec[active], s_app[active] = i_ev, i_ec, app
        i_av = i_ec
        if done.any():
            converged[active[done]] = True
            iterations[active[done]] = t
            keep = ~done
            active = active[keep]
            if active.size == 0:
                break
            e, psi, ch, tabs, i_av = e[keep], psi[keep], ch[keep], tabs[keep], i_av[keep]

    states = None
    if keep_state:
        states = [
            ExitState(s_ev[b], s_ev[b].copy(), s_ec[b], s_ec[b].copy(), s_app[b])
            for b in range(bsz)
        ]
    return BatchOutcome(converged, iterations, states)
