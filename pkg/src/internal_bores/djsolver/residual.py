"""Discrete residual of the internal-front system in height-function form.

Unknown layout, per q column ``j`` (slot index ``m``):

    m = 0 .. n2-2          H2[j, 1 .. n2-1]   (last one is the interface)
    m = n2-1 .. n2+n1-3    H1[j, 0 .. n1-2]   (first one is the interface)

followed by a single scalar ``delta`` (Bernoulli correction).  Residual
rows use the same (j, m) slots plus one trailing pin row, so every row
depends only on unknowns with |dj| <= 1 and |dm| <= 3.
"""
from __future__ import annotations

import numpy as np

from ..params import FrontConfig, conjugate_downstream
from .grid import BoreState, Grid, downstream_columns, upstream_columns

DEGENERACY_TOL = 1e-8


class DegeneracyError(RuntimeError):
    """Loss of monotone structure: some H_p is zero or has the wrong sign."""

    def __init__(self, msg, layer=None, j=None, k=None, q=None, p=None):
        super().__init__(msg)
        self.layer, self.j, self.k, self.q, self.p = layer, j, k, q, p


def n_slots(cfg: FrontConfig) -> int:
    return (cfg.np2 - 1) + (cfg.np1 - 1)


def pack(state: BoreState) -> np.ndarray:
    X = np.concatenate([state.H2[:, 1:], state.H1[:, :-1]], axis=1)
    return np.concatenate([X.ravel(), [state.delta]])


def unpack(x, cfg: FrontConfig):
    """Full H1, H2 arrays (walls included) and delta from an unknown vector."""
    n1, n2 = cfg.np1, cfg.np2
    X = x[:-1].reshape(cfg.nq, n_slots(cfg))
    dtype = x.dtype
    H2 = np.empty((cfg.nq, n2), dtype)
    H1 = np.empty((cfg.nq, n1), dtype)
    H2[:, 0] = cfg.h2
    H2[:, 1:] = X[:, : n2 - 1]
    H1[:, :-1] = X[:, n2 - 1:]
    H1[:, -1] = -cfg.lam
    return H1, H2, x[-1]


def state_from_vector(x, cfg: FrontConfig) -> BoreState:
    H1, H2, d = unpack(np.asarray(x, float), cfg)
    return BoreState(H1, H2, cfg.lam, cfg.fluids, cfg.L, float(d), cfg.stretch,
                     cfg.pstretch)


def interior_operator(H, dq: float, dp: float, gq=None, gqq=None, gp=None, gpp=None):
    """Quasilinear height equation on interior nodes, central differences.

    (1 + H_q^2) H_pp - 2 H_q H_p H_qp + H_p^2 H_qq

    ``dq`` and ``dp`` are the uniform spacings of the computational
    coordinates.  Optional metric arrays (full length) map them to q and p:
    ``gq = dq/dxi``, ``gqq = d2q/dxi2`` and likewise ``gp``, ``gpp``.
    """
    Hx = (H[2:, 1:-1] - H[:-2, 1:-1]) / (2 * dq)
    Hs = (H[1:-1, 2:] - H[1:-1, :-2]) / (2 * dp)
    Hxx = (H[2:, 1:-1] - 2 * H[1:-1, 1:-1] + H[:-2, 1:-1]) / dq**2
    Hss = (H[1:-1, 2:] - 2 * H[1:-1, 1:-1] + H[1:-1, :-2]) / dp**2
    Hxs = (H[2:, 2:] - H[2:, :-2] - H[:-2, 2:] + H[:-2, :-2]) / (4 * dq * dp)
    if gq is None:
        Hq, Hqq, Hxs_q = Hx, Hxx, Hxs
    else:
        g1 = gq[1:-1, None]
        Hq = Hx / g1
        Hqq = (Hxx - gqq[1:-1, None] * Hq) / g1**2
        Hxs_q = Hxs / g1
    if gp is None:
        Hp, Hpp, Hqp = Hs, Hss, Hxs_q
    else:
        e1 = gp[None, 1:-1]
        Hp = Hs / e1
        Hpp = (Hss - gpp[None, 1:-1] * Hp) / e1**2
        Hqp = Hxs_q / e1
    return (1 + Hq**2) * Hpp - 2 * Hq * Hp * Hqp + Hp**2 * Hqq


def _one_sided(h0, h1, h2):
    """Weights of the 3-point derivative at x0 from offsets h1, h2 (exact on quadratics)."""
    w1 = h2 / (h1 * (h2 - h1))
    w2 = -h1 / (h2 * (h2 - h1))
    return -(w1 + w2), w1, w2


def interface_slopes(H1, H2, grid: Grid):
    """One-sided second-order H_p of each layer at the interface."""
    a = _one_sided(0.0, grid.p1[1] - grid.p1[0], grid.p1[2] - grid.p1[0])
    b = _one_sided(0.0, grid.p2[-2] - grid.p2[-1], grid.p2[-3] - grid.p2[-1])
    H1p = a[0] * H1[:, 0] + a[1] * H1[:, 1] + a[2] * H1[:, 2]
    H2p = b[0] * H2[:, -1] + b[1] * H2[:, -2] + b[2] * H2[:, -3]
    return H1p, H2p


def dynamic_row(eta_q, eta, H1p, H2p, cfg: FrontConfig, delta=0.0):
    f = cfg.fluids
    kin = (1 + eta_q**2) * (H2p**-2 - H1p**-2)
    if f.boussinesq:
        return kin - 8 * f.rho1 * eta + delta
    return kin + 2 * (f.rho2 - f.rho1) / cfg.froude_sq * eta - (f.rho2 - f.rho1) + delta


def pin_target(cfg: FrontConfig) -> float:
    return 0.5 * (conjugate_downstream(cfg.fluids) - cfg.lam)


def pin_weights(grid: Grid):
    """Linear-interpolation weights (j0, w0, j1, w1) for eta at q = 0."""
    q = grid.q
    j1 = int(np.searchsorted(q, 0.0))
    j1 = min(max(j1, 1), q.size - 1)
    j0 = j1 - 1
    t = (0.0 - q[j0]) / (q[j1] - q[j0])
    return j0, 1.0 - t, j1, t


def check_monotone(H1, H2, grid: Grid, tol: float = DEGENERACY_TOL):
    """Raise DegeneracyError unless H_p < 0 (bounded away from 0) on every cell."""
    for name, H, p in (("lower", H1, grid.p1), ("upper", H2, grid.p2)):
        Hp = np.real(np.diff(H, axis=1)) / np.diff(p)[None, :]
        bad = Hp > -tol
        if np.any(bad):
            j, k = np.argwhere(bad)[0]
            raise DegeneracyError(
                f"H_p = {Hp[j, k]:.3e} in {name} layer at node (j={j}, k={k}), "
                f"q={grid.q[j]:.6g}, p={p[k]:.6g}",
                layer=name, j=int(j), k=int(k), q=float(grid.q[j]), p=float(p[k]))


def residual_blocks(H1, H2, delta, cfg: FrontConfig, grid: Grid | None = None):
    """Residual pieces keyed by row type, shaped like their node sets."""
    g = grid or Grid.from_config(cfg)
    dxi = g.dxi
    up1, up2 = upstream_columns(cfg, g)
    dn1, dn2 = downstream_columns(cfg, g)
    H1p, H2p = interface_slopes(H1, H2, g)
    eta = H1[:, 0]
    eta_q = (eta[2:] - eta[:-2]) / (2 * dxi * g.gq[1:-1])
    j0, w0, j1, w1 = pin_weights(g)
    return {
        # interior rows carry a dp^2 factor so all rows measure height errors
        "interior1": (g.ds1 * g.g1[None, 1:-1])**2 * interior_operator(
            H1, dxi, g.ds1, g.gq, g.gqq, g.g1, g.g1s),
        "interior2": (g.ds2 * g.g2[None, 1:-1])**2 * interior_operator(
            H2, dxi, g.ds2, g.gq, g.gqq, g.g2, g.g2s),
        "dynamic": dynamic_row(eta_q, eta[1:-1], H1p[1:-1], H2p[1:-1], cfg, delta),
        "continuity": H1[:, 0] - H2[:, -1],
        "upstream1": H1[0, :-1] - up1[:-1],
        "upstream2": H2[0, 1:] - up2[1:],
        "downstream1": H1[-1, :-1] - dn1[:-1],
        "downstream2": H2[-1, 1:] - dn2[1:],
        "pin": np.array([w0 * eta[j0] + w1 * eta[j1] - pin_target(cfg)]),
    }


def residual_vector(x, cfg: FrontConfig, grid: Grid | None = None):
    """Residual in slot layout (see module docstring).  Complex-step safe."""
    g = grid or Grid.from_config(cfg)
    H1, H2, delta = unpack(x, cfg)
    b = residual_blocks(H1, H2, delta, cfg, g)
    n1, n2, nq = cfg.np1, cfg.np2, cfg.nq
    R = np.empty((nq, n_slots(cfg)), dtype=x.dtype)
    # upper layer rows, k = 1 .. n2-2
    R[1:-1, : n2 - 2] = b["interior2"]
    R[0, : n2 - 2] = b["upstream2"][:-1]
    R[-1, : n2 - 2] = b["downstream2"][:-1]
    # continuity
    R[:, n2 - 2] = b["continuity"]
    # interface: dynamic on interior columns, clamp at the ends
    R[1:-1, n2 - 1] = b["dynamic"]
    R[0, n2 - 1] = b["upstream1"][0]
    R[-1, n2 - 1] = b["downstream1"][0]
    # lower layer rows, k = 1 .. n1-2
    R[1:-1, n2:] = b["interior1"]
    R[0, n2:] = b["upstream1"][1:]
    R[-1, n2:] = b["downstream1"][1:]
    return np.concatenate([R.ravel(), b["pin"]])


def assemble_residual(state: BoreState, cfg: FrontConfig | None = None, fluids=None,
                      check: bool = True) -> np.ndarray:
    """Residual of ``state``; raises DegeneracyError if H_p degenerates."""
    cfg = cfg or state.config()
    if fluids is not None and fluids != cfg.fluids:
        raise ValueError("fluids disagree with the configuration")
    g = Grid.from_config(cfg)
    if state.H1.shape != (cfg.nq, cfg.np1) or state.H2.shape != (cfg.nq, cfg.np2):
        raise ValueError("state shape does not match the grid")
    if check:
        check_monotone(state.H1, state.H2, g)
    return residual_vector(pack(state), cfg, g)
