"""Physical-space fields from a height-function state (inverse of the DJ map).

Each layer's H(q, p) is interpolated with a bicubic spline.  For a point
(x, y) the layer is chosen by comparing y with eta(x); the stream value p
with H(x, p) = y is bracketed on the p nodes (H decreases in p) and
refined by Newton's method.
Gradients follow from implicit differentiation of H(x, psi(x, y)) = y:

    psi_y = 1 / H_p,    psi_x = -H_q / H_p.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RectBivariateSpline

from ..params import FrontConfig, ParameterError
from .grid import BoreState, Grid


class DomainError(ParameterError):
    """Requested point lies outside the truncated channel."""


class _Layer:
    def __init__(self, q, p, H):
        self.p = p
        self.spl = RectBivariateSpline(q, p, H, kx=3, ky=3, s=0)

    def H(self, x, p, dx=0, dy=0):
        return self.spl.ev(x, p, dx=dx, dy=dy)

    def invert(self, x, y, newton: int = 4):
        """p with H(x, p) = y: bracket on the p nodes, then safeguarded Newton."""
        P = self.p
        n = P.size
        Hn = self.spl.ev(np.repeat(x[:, None], n, axis=1), np.broadcast_to(P, (x.size, n)))
        k = np.clip(np.count_nonzero(Hn > y[:, None], axis=1) - 1, 0, n - 2)
        i = np.arange(x.size)
        h0, h1 = Hn[i, k], Hn[i, k + 1]
        lo, hi = P[k], P[k + 1]
        t = np.clip((h0 - y) / np.where(h0 != h1, h0 - h1, 1.0), 0.0, 1.0)
        p = lo + t * (hi - lo)
        for _ in range(newton):
            f = self.H(x, p) - y
            d = self.H(x, p, dy=1)
            p = np.clip(p - f / np.where(d != 0, d, -1.0), lo, hi)
        return p


class BoreField:
    """Pointwise evaluator of psi, grad psi and the phase label of a bore.

    ``lower`` (heavier fluid) is the phase below the interface; it is the
    positive phase of ``u = -psi``.
    """

    def __init__(self, state: BoreState, cfg: FrontConfig | None = None):
        self.state = state
        self.cfg = cfg or state.config()
        g = Grid.from_config(self.cfg)
        self.grid = g
        self.fluids = self.cfg.fluids
        self.lam = self.cfg.lam
        self.L = self.cfg.L
        self._l1 = _Layer(g.q, g.p1, state.H1)
        self._l2 = _Layer(g.q, g.p2, state.H2)
        self._eta = RectBivariateSpline(g.q, g.p1[:4], state.H1[:, :4], kx=3, ky=3, s=0)

    def eta(self, x):
        x = np.asarray(x, float)
        return self._eta.ev(x, np.zeros_like(x))

    def eta_x(self, x):
        x = np.asarray(x, float)
        return self._eta.ev(x, np.zeros_like(x), dx=1)

    def _check(self, x, y):
        tol = 1e-12
        bad = ((np.abs(x) > self.L + tol) | (y < -self.lam - tol)
               | (y > 1.0 - self.lam + tol))
        if np.any(bad):
            i = np.argmax(bad.ravel())
            raise DomainError(f"point ({x.ravel()[i]:.6g}, {y.ravel()[i]:.6g}) is outside "
                              f"the channel |x| <= {self.L}, {-self.lam} <= y <= {1 - self.lam}")

    def lower(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return y <= self.eta(x)

    def evaluate(self, x, y):
        """(psi, psi_x, psi_y, lower) at the given points."""
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        self._check(x, y)
        x = np.clip(x, -self.L, self.L)
        y = np.clip(y, -self.lam, 1.0 - self.lam)
        low = self.lower(x, y)
        psi = np.empty(x.shape)
        px = np.empty(x.shape)
        py = np.empty(x.shape)
        for mask, layer in ((low, self._l1), (~low, self._l2)):
            if not np.any(mask):
                continue
            xm, ym = x[mask], y[mask]
            p = layer.invert(xm, ym)
            Hp = layer.H(xm, p, dy=1)
            Hq = layer.H(xm, p, dx=1)
            psi[mask] = p
            py[mask] = 1.0 / Hp
            px[mask] = -Hq / Hp
        return psi, px, py, low

    def __call__(self, x, y):
        return self.evaluate(x, y)[0]

    def gradient(self, x, y):
        _, px, py, _ = self.evaluate(x, y)
        return px, py

    def interface_speeds(self, x):
        """|grad psi_i|^2 of both layers on the interface, from one-sided data."""
        x = np.asarray(x, float)
        e = np.zeros_like(x)
        out = []
        for layer in (self._l1, self._l2):
            Hp = layer.H(x, e, dy=1)
            Hq = layer.H(x, e, dx=1)
            out.append((1.0 + Hq**2) / Hp**2)
        return out[0], out[1]

    def dynamic_residual(self, x):
        """Interface dynamic condition evaluated from the reconstructed gradients."""
        f = self.fluids
        s1, s2 = self.interface_speeds(x)
        eta = self.eta(x)
        d = self.state.delta
        if f.boussinesq:
            return s2 - s1 - 8 * f.rho1 * eta + d
        return s2 - s1 + 2 * (f.rho2 - f.rho1) / self.cfg.froude_sq * eta - (f.rho2 - f.rho1) + d


@dataclass
class PhysicalField:
    """Samples of psi, grad psi and the phase label on a structured (x, y) grid."""

    x: np.ndarray
    y: np.ndarray
    psi: np.ndarray
    psi_x: np.ndarray
    psi_y: np.ndarray
    lower: np.ndarray
    eta: np.ndarray


def reconstruct_physical(state: BoreState, cfg: FrontConfig | None = None, fluids=None,
                         x=None, y=None, nx: int = 201, ny: int = 101) -> PhysicalField:
    """Sample the physical fields of ``state`` on the tensor grid x by y.

    Defaults cover the whole truncated channel.  Points outside it raise
    DomainError.
    """
    cfg = cfg or state.config()
    if fluids is not None and fluids != cfg.fluids:
        raise ValueError("fluids disagree with the configuration")
    bf = BoreField(state, cfg)
    if x is None:
        x = np.linspace(-cfg.L, cfg.L, nx)
    if y is None:
        y = np.linspace(-cfg.lam, 1.0 - cfg.lam, ny)
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    X, Y = np.meshgrid(x, y, indexing="ij")
    psi, px, py, low = bf.evaluate(X, Y)
    return PhysicalField(x, y, psi, px, py, low, bf.eta(x))


def column_flow_force(state: BoreState, cfg: FrontConfig | None = None) -> np.ndarray:
    """Flow force of every q column, integrated in the stream coordinate.

    With dy = |H_p| dp and psi_y^2 - psi_x^2 = (1 - H_q^2) / H_p^2 the
    slice integral of ``params.flow_force`` becomes a smooth p integral per
    layer (Simpson).
    """
    from scipy.integrate import simpson

    from ..params import potential_weights

    cfg = cfg or state.config()
    g = Grid.from_config(cfg)
    total = np.zeros(g.q.size)
    for H, p, lower in ((state.H1, g.p1, True), (state.H2, g.p2, False)):
        Hq = np.gradient(H, g.q, axis=0, edge_order=2)
        Hp = np.gradient(H, p, axis=1, edge_order=2)
        f = (1.0 - Hq**2) / np.abs(Hp) - potential_weights(cfg.fluids, H, lower) * np.abs(Hp)
        total += simpson(f, x=p, axis=1)
    return 0.5 * total
