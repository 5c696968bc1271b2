"""Grids and discrete height-function states in Dubreil-Jacotin variables.

Layer 1 (lower) uses ``p1 = k * dp1`` for ``k = 0 .. np1-1`` so index 0 is
the interface and the last index is the bed.  Layer 2 (upper) uses
``p2 = -P2 + k * dp2`` so index 0 is the lid and the last index is the
interface.  Arrays are stored per node index, i.e. in normalized stream
coordinates, which lets a state be reused as an initial guess at another
upstream depth.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..params import FluidPair, FrontConfig, conjugate_downstream

SCHEMA = "internal_bores.borestate"
SCHEMA_VERSION = 1


def q_nodes(L: float, nq: int, stretch: float = 0.0):
    """Horizontal nodes and the metric q'(xi), q''(xi) of the sinh stretching."""
    xi = np.linspace(-1.0, 1.0, nq)
    if stretch == 0.0:
        return L * xi, np.full(nq, L), np.zeros(nq)
    s = np.sinh(stretch)
    q = L * np.sinh(stretch * xi) / s
    q[nq // 2] = 0.0 if nq % 2 else q[nq // 2]
    gq = L * stretch * np.cosh(stretch * xi) / s
    gqq = L * stretch**2 * np.sinh(stretch * xi) / s
    return q, gq, gqq


def p_nodes(n: int, stretch: float = 0.0):
    """Map s in [0, 1] -> t in [0, 1] clustered at s = 0, with t'(s), t''(s)."""
    s = np.linspace(0.0, 1.0, n)
    if stretch == 0.0:
        return s, np.ones(n), np.zeros(n)
    b = stretch
    sh = np.sinh(b)
    return np.sinh(b * s) / sh, b * np.cosh(b * s) / sh, b * b * np.sinh(b * s) / sh


@dataclass(frozen=True)
class Grid:
    q: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    gq: np.ndarray
    gqq: np.ndarray
    dxi: float
    g1: np.ndarray = None   # dp1/ds and d2p1/ds2 per node
    g1s: np.ndarray = None
    g2: np.ndarray = None
    g2s: np.ndarray = None
    ds1: float = 1.0
    ds2: float = 1.0

    @classmethod
    def from_config(cls, cfg: FrontConfig) -> "Grid":
        P1 = cfg.lam * np.sqrt(cfg.fluids.rho1)
        P2 = cfg.h2 * np.sqrt(cfg.fluids.rho2)
        q, gq, gqq = q_nodes(cfg.L, cfg.nq, cfg.stretch)
        t1, d1, e1 = p_nodes(cfg.np1, cfg.pstretch)
        t2, d2, e2 = p_nodes(cfg.np2, cfg.pstretch)
        # lower layer: interface at index 0; upper layer: interface at last index
        p1 = P1 * t1
        p2 = -P2 * t2[::-1]
        p1[0] = 0.0
        p1[-1] = P1
        p2[-1] = 0.0
        p2[0] = -P2
        return cls(q, p1, p2, gq, gqq, 2.0 / (cfg.nq - 1),
                   P1 * d1, P1 * e1, P2 * d2[::-1], -P2 * e2[::-1],
                   1.0 / (cfg.np1 - 1), 1.0 / (cfg.np2 - 1))

    @property
    def dq(self) -> float:
        """Smallest horizontal spacing."""
        return float(np.min(np.diff(self.q)))

    @property
    def dp1(self) -> float:
        """Smallest stream-coordinate spacing, lower layer."""
        return float(np.min(np.diff(self.p1)))

    @property
    def dp2(self) -> float:
        return float(np.min(np.diff(self.p2)))


def upstream_heights(cfg: FrontConfig, grid: Grid):
    """Uniform upstream flow, H_i = -p / sqrt(rho_i), on every column."""
    f = cfg.fluids
    H1 = np.broadcast_to(-grid.p1 / np.sqrt(f.rho1), (grid.q.size, grid.p1.size)).copy()
    H2 = np.broadcast_to(-grid.p2 / np.sqrt(f.rho2), (grid.q.size, grid.p2.size)).copy()
    return H1, H2


def downstream_columns(cfg: FrontConfig, grid: Grid):
    """Height profiles of the downstream conjugate flow (one column per layer)."""
    f = cfg.fluids
    Hd = conjugate_downstream(f)
    lam = cfg.lam
    h1 = (Hd - lam) - grid.p1 * Hd / (lam * np.sqrt(f.rho1))
    h2 = (Hd - lam) - grid.p2 * (1.0 - Hd) / ((1.0 - lam) * np.sqrt(f.rho2))
    h1[-1] = -lam
    h2[0] = 1.0 - lam
    return h1, h2


def upstream_columns(cfg: FrontConfig, grid: Grid):
    f = cfg.fluids
    h1 = -grid.p1 / np.sqrt(f.rho1)
    h2 = -grid.p2 / np.sqrt(f.rho2)
    h1[-1] = -cfg.lam
    h2[0] = 1.0 - cfg.lam
    return h1, h2


@dataclass
class BoreState:
    """Height functions of both layers plus the Bernoulli correction ``delta``."""

    H1: np.ndarray
    H2: np.ndarray
    lam: float
    fluids: FluidPair
    L: float
    delta: float = 0.0
    stretch: float = 0.0
    pstretch: float = 0.0
    newton_iterations: int = 0
    residual_norm: float = float("nan")

    @property
    def eta(self) -> np.ndarray:
        return self.H1[:, 0]

    @property
    def nq(self) -> int:
        return self.H1.shape[0]

    @property
    def q(self) -> np.ndarray:
        return q_nodes(self.L, self.H1.shape[0], self.stretch)[0]

    def config(self, base: FrontConfig | None = None) -> FrontConfig:
        if base is None:
            return FrontConfig(self.lam, self.fluids, self.L, self.H1.shape[0],
                               self.H1.shape[1], self.H2.shape[1], stretch=self.stretch,
                               pstretch=self.pstretch)
        return FrontConfig(self.lam, self.fluids, self.L, self.H1.shape[0],
                           self.H1.shape[1], self.H2.shape[1], base.newton_tol,
                           base.max_newton_iters, self.stretch, self.pstretch)

    def grid(self) -> Grid:
        return Grid.from_config(self.config())

    def copy(self) -> "BoreState":
        return BoreState(self.H1.copy(), self.H2.copy(), self.lam, self.fluids,
                         self.L, self.delta, self.stretch, self.pstretch,
                         self.newton_iterations, self.residual_norm)

    # -- serialization -------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "version": SCHEMA_VERSION,
            "fluids": {"rho1": self.fluids.rho1, "rho2": self.fluids.rho2,
                       "boussinesq": self.fluids.boussinesq},
            "grid": {"lam": self.lam, "L": self.L, "stretch": self.stretch,
                     "pstretch": self.pstretch,
                     "nq": int(self.H1.shape[0]),
                     "np1": int(self.H1.shape[1]), "np2": int(self.H2.shape[1])},
            "delta": self.delta,
            "H1": [float(v) for v in self.H1.ravel()],
            "H2": [float(v) for v in self.H2.ravel()],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoreState":
        if d.get("schema") != SCHEMA:
            raise ValueError("not a bore-state document")
        if d.get("version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported state version {d.get('version')}")
        f = d["fluids"]
        g = d["grid"]
        fluids = FluidPair(float(f["rho1"]), float(f["rho2"]), bool(f["boussinesq"]))
        H1 = np.asarray(d["H1"], float).reshape(g["nq"], g["np1"])
        H2 = np.asarray(d["H2"], float).reshape(g["nq"], g["np2"])
        return cls(H1, H2, float(g["lam"]), fluids, float(g["L"]),
                   float(d.get("delta", 0.0)), float(g.get("stretch", 0.0)),
                   float(g.get("pstretch", 0.0)))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "BoreState":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def trivial_state(cfg: FrontConfig) -> BoreState:
    """Upstream laminar flow used on every column, flat interface."""
    H1, H2 = upstream_heights(cfg, Grid.from_config(cfg))
    H1[:, -1] = -cfg.lam
    H2[:, 0] = cfg.h2
    return BoreState(H1, H2, cfg.lam, cfg.fluids, cfg.L, stretch=cfg.stretch,
                     pstretch=cfg.pstretch)


def tanh_seed(cfg: FrontConfig, width: float = 2.0) -> BoreState:
    """Tanh-shaped interface joining the two far-field states, layers stretched linearly."""
    g = Grid.from_config(cfg)
    Hd = conjugate_downstream(cfg.fluids)
    eta = 0.5 * (Hd - cfg.lam) * (1.0 + np.tanh(g.q / width))
    s1 = g.p1 / g.p1[-1]
    s2 = (g.p2 - g.p2[0]) / (g.p2[-1] - g.p2[0])  # 0 at lid, 1 at interface
    H1 = eta[:, None] + (-cfg.lam - eta[:, None]) * s1[None, :]
    H2 = cfg.h2 + (eta[:, None] - cfg.h2) * s2[None, :]
    return BoreState(H1, H2, cfg.lam, cfg.fluids, cfg.L, stretch=cfg.stretch,
                     pstretch=cfg.pstretch)


def rescale_state(state: BoreState, cfg: FrontConfig) -> BoreState:
    """Move a state to another upstream depth and/or grid.

    Heights are shifted so the walls land on the new bed/lid; resampling is
    linear in q and in normalized stream coordinate.
    """
    nq0, n10 = state.H1.shape
    n20 = state.H2.shape[1]
    q0 = state.q
    q = q_nodes(cfg.L, cfg.nq, cfg.stretch)[0]

    def resample(H, ncols_new):
        s_old = np.linspace(0.0, 1.0, H.shape[1])
        s_new = np.linspace(0.0, 1.0, ncols_new)
        tmp = np.empty((H.shape[0], ncols_new))
        for j in range(H.shape[0]):
            tmp[j] = np.interp(s_new, s_old, H[j])
        out = np.empty((q.size, ncols_new))
        for k in range(ncols_new):
            out[:, k] = np.interp(q, q0, tmp[:, k])
        return out

    # map the old interface displacement relative to the walls onto the new channel
    Hd_old = conjugate_downstream(state.fluids) - state.lam
    Hd_new = conjugate_downstream(cfg.fluids) - cfg.lam
    scale = Hd_new / Hd_old if abs(Hd_old) > 1e-14 else 1.0
    eta = resample(state.H1[:, :1], 1)[:, 0] * scale
    # normalized vertical position inside each layer
    H1o = resample(state.H1, cfg.np1)
    H2o = resample(state.H2, cfg.np2)
    e_old = H1o[:, :1]
    t1 = (H1o - e_old) / (-state.lam - e_old)
    t2 = (H2o - (1 - state.lam)) / (H2o[:, -1:] - (1 - state.lam))
    H1 = eta[:, None] + (-cfg.lam - eta[:, None]) * t1
    H2 = cfg.h2 + (eta[:, None] - cfg.h2) * t2
    H1[:, 0] = eta
    H2[:, -1] = eta
    H1[:, -1] = -cfg.lam
    H2[:, 0] = cfg.h2
    return BoreState(H1, H2, cfg.lam, cfg.fluids, cfg.L, state.delta, cfg.stretch,
                     cfg.pstretch)
