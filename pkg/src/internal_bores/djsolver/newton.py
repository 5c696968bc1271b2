"""Damped Newton iteration with a colored complex-step Jacobian."""
from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..params import FrontConfig
from .grid import BoreState, Grid
from .residual import (DegeneracyError, check_monotone, n_slots, pack,
                       pin_weights, residual_vector, state_from_vector, unpack)

log = logging.getLogger(__name__)

_H = 1e-30
_MW = 7  # slot window: every row touches |dm| <= 3


class NonConvergenceError(RuntimeError):
    def __init__(self, msg, residual_norm, last_iterate):
        super().__init__(msg)
        self.residual_norm = residual_norm
        self.last_iterate = last_iterate


def jacobian(x, cfg: FrontConfig, grid: Grid | None = None) -> sp.csc_matrix:
    """Sparse Jacobian of ``residual_vector`` at ``x``.

    Unknown (j, m) gets color (j mod 3) * 7 + (m mod 7); each colored
    complex-step evaluation recovers one entry per row.  delta and the pin
    row are filled analytically.
    """
    g = grid or Grid.from_config(cfg)
    nq, ns = cfg.nq, n_slots(cfg)
    N = nq * ns
    jj, mm = np.divmod(np.arange(N), ns)
    color = (jj % 3) * _MW + (mm % _MW)
    rows_all, cols_all, vals_all = [], [], []
    xc = x.astype(complex)
    for c in range(3 * _MW):
        sel = color == c
        if not np.any(sel):
            continue
        xp = xc.copy()
        xp[:-1][sel] += 1j * _H
        d = residual_vector(xp, cfg, g)[:-1].imag / _H
        cj, cm = divmod(c, _MW)
        dj = (cj - jj) % 3
        dj = np.where(dj == 2, -1, dj)
        dm = (cm - mm) % _MW
        dm = np.where(dm > 3, dm - _MW, dm)
        tj, tm = jj + dj, mm + dm
        ok = (tj >= 0) & (tj < nq) & (tm >= 0) & (tm < ns) & (d != 0.0)
        rows_all.append(np.flatnonzero(ok))
        cols_all.append(tj[ok] * ns + tm[ok])
        vals_all.append(d[ok])
    # delta column: +1 on dynamic rows (interior columns, slot n2-1)
    dyn = np.arange(1, nq - 1) * ns + (cfg.np2 - 1)
    rows_all.append(dyn)
    cols_all.append(np.full(dyn.size, N))
    vals_all.append(np.ones(dyn.size))
    # pin row
    j0, w0, j1, w1 = pin_weights(g)
    m_eta = cfg.np2 - 1
    rows_all.append(np.array([N, N]))
    cols_all.append(np.array([j0 * ns + m_eta, j1 * ns + m_eta]))
    vals_all.append(np.array([w0, w1]))
    J = sp.coo_matrix((np.concatenate(vals_all),
                       (np.concatenate(rows_all), np.concatenate(cols_all))),
                      shape=(N + 1, N + 1))
    return J.tocsc()


def newton_solve(initial: BoreState, cfg: FrontConfig | None = None, fluids=None,
                 callback=None) -> BoreState:
    """Solve the discrete system from ``initial``.

    Returns a state with max-norm residual <= ``cfg.newton_tol``.  Raises
    NonConvergenceError (carrying the final norm and iterate) when the
    iteration budget is spent, and DegeneracyError if an iterate loses
    monotonicity in p and no damping can restore it.
    """
    cfg = cfg or initial.config()
    if fluids is not None and fluids != cfg.fluids:
        raise ValueError("fluids disagree with the configuration")
    g = Grid.from_config(cfg)
    x = pack(initial).astype(float)
    H1, H2, _ = unpack(x, cfg)
    check_monotone(H1, H2, g)
    R = residual_vector(x, cfg, g)
    norm = float(np.max(np.abs(R)))
    it = 0
    while norm > cfg.newton_tol:
        if it >= cfg.max_newton_iters:
            raise NonConvergenceError(
                f"Newton did not converge in {it} iterations (|R| = {norm:.3e})",
                norm, state_from_vector(x, cfg))
        J = jacobian(x, cfg, g)
        try:
            dx = splu(J).solve(-R)
        except RuntimeError as exc:  # singular factorization
            raise NonConvergenceError(f"singular Jacobian: {exc}", norm,
                                      state_from_vector(x, cfg)) from exc
        if not np.all(np.isfinite(dx)):
            raise NonConvergenceError("non-finite Newton step", norm,
                                      state_from_vector(x, cfg))
        t = 1.0
        accepted = False
        last_exc = None
        while t >= 1.0 / 64:
            xt = x + t * dx
            H1, H2, _ = unpack(xt, cfg)
            try:
                check_monotone(H1, H2, g)
            except DegeneracyError as exc:
                last_exc = exc
                t *= 0.5
                continue
            Rt = residual_vector(xt, cfg, g)
            nt = float(np.max(np.abs(Rt)))
            if np.isfinite(nt) and (nt < (1 - 1e-4 * t) * norm or nt <= cfg.newton_tol):
                accepted = True
                break
            t *= 0.5
        it += 1
        if not accepted:
            if last_exc is not None and t < 1.0 / 64:
                H1, H2, _ = unpack(x + dx, cfg)
                try:
                    check_monotone(H1, H2, g)
                except DegeneracyError as exc:
                    raise exc
            raise NonConvergenceError(
                f"line search failed at iteration {it} (|R| = {norm:.3e})",
                norm, state_from_vector(x, cfg))
        x, R, norm = xt, Rt, nt
        log.debug("newton it=%d |R|=%.3e step=%.3g", it, norm, t)
        if callback is not None:
            callback(it, norm)
    out = state_from_vector(x, cfg)
    out.newton_iterations = it  # type: ignore[attr-defined]
    out.residual_norm = norm  # type: ignore[attr-defined]
    return out
