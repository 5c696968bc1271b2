"""Nondimensional parameters, conjugate flows and the flow force.

Units: channel height 1, upstream speed 1 in both layers.  The lower
(heavier) layer carries density ``rho1`` and upstream depth ``lam``; the
upper layer carries ``rho2`` and depth ``1 - lam``.  The pseudo stream
function equals ``lam*sqrt(rho1)`` on the bed, ``0`` on the interface and
``-(1-lam)*sqrt(rho2)`` on the lid.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import simpson


class ParameterError(ValueError):
    """Invalid physical or numerical parameters."""


@dataclass(frozen=True)
class FluidPair:
    rho1: float
    rho2: float
    boussinesq: bool = False

    def __post_init__(self):
        if not (self.rho1 > 0 and self.rho2 > 0):
            raise ParameterError("densities must be positive")
        if self.boussinesq and self.rho1 != self.rho2:
            raise ParameterError("Boussinesq pair needs rho1 == rho2")
        if not self.boussinesq and not self.rho2 < self.rho1:
            raise ParameterError("non-Boussinesq pair needs rho2 < rho1")

    @classmethod
    def boussinesq_pair(cls, rho: float = 1.0) -> "FluidPair":
        return cls(rho, rho, True)


def front_froude(fluids: FluidPair) -> float:
    """Squared Froude number F^2 at which fronts exist."""
    s1, s2 = np.sqrt(fluids.rho1), np.sqrt(fluids.rho2)
    if fluids.boussinesq:
        return 0.0
    return float((s1 - s2) / (s1 + s2))


def conjugate_downstream(fluids: FluidPair) -> float:
    """Downstream lower-layer thickness of a bore, sqrt(rho1)/(sqrt(rho1)+sqrt(rho2))."""
    s1, s2 = np.sqrt(fluids.rho1), np.sqrt(fluids.rho2)
    return float(s1 / (s1 + s2))


@dataclass(frozen=True)
class FrontConfig:
    """Geometry and solver controls for one truncated-strip bore computation.

    ``stretch`` clusters the horizontal nodes near q = 0 through
    q = L sinh(stretch * xi) / sinh(stretch) with xi uniform on [-1, 1];
    0 gives a uniform grid.  ``pstretch`` does the same for the stream
    coordinate of each layer, clustering nodes at the interface; it costs
    the exactness of laminar states (H linear in p is no longer reproduced
    to round-off), so it is off by default.
    """

    lam: float
    fluids: FluidPair
    L: float = 16.0
    nq: int = 321
    np1: int = 21
    np2: int = 21
    newton_tol: float = 1e-10
    max_newton_iters: int = 25
    stretch: float = 3.5
    pstretch: float = 0.0
    froude_sq: float = field(init=False)
    h2: float = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise ParameterError(f"lambda must lie in (0, 1), got {self.lam}")
        if self.L <= 0:
            raise ParameterError("L must be positive")
        if min(self.nq, self.np1, self.np2) < 3:
            raise ParameterError("grid counts must be >= 3")
        if self.newton_tol <= 0:
            raise ParameterError("newton_tol must be positive")
        if self.stretch < 0 or self.pstretch < 0:
            raise ParameterError("stretch factors must be >= 0")
        object.__setattr__(self, "froude_sq", front_froude(self.fluids))
        object.__setattr__(self, "h2", 1.0 - self.lam)

    def with_lambda(self, lam: float) -> "FrontConfig":
        return replace(self, lam=lam)


# ---------------------------------------------------------------------------
# flow force

def potential_weights(fluids: FluidPair, y, lower):
    """Hydrostatic part of the flow-force integrand, per unit density label.

    Non-Boussinesq: rho_i (2 y / F^2 - 1).  Boussinesq: the average-density
    part is dropped and the remainder tends to +4 rho1 y (lower layer) and
    -4 rho1 y (upper layer).
    """
    y = np.asarray(y, dtype=float)
    lower = np.asarray(lower, dtype=bool)
    if fluids.boussinesq:
        return np.where(lower, 4.0 * fluids.rho1 * y, -4.0 * fluids.rho1 * y)
    F2 = front_froude(fluids)
    rho = np.where(lower, fluids.rho1, fluids.rho2)
    return rho * (2.0 * y / F2 - 1.0)


def upstream_flow_force(fluids: FluidPair, lam: float) -> float:
    """Closed-form flow force S0(lam) of the uniform upstream state."""
    h2 = 1.0 - lam
    r1, r2 = fluids.rho1, fluids.rho2
    if fluids.boussinesq:
        return 0.5 * r1 + r1 * (lam**2 + h2**2)
    F2 = front_froude(fluids)
    return r1 * (lam + lam**2 / (2 * F2)) + r2 * (h2 - h2**2 / (2 * F2))


def layered_flow_force(fluids: FluidPair, lam: float, H: float) -> float:
    """Closed-form flow force of the laminar state with lower thickness H."""
    h2 = 1.0 - lam
    a1 = lam / H * np.sqrt(fluids.rho1)
    a2 = h2 / (1.0 - H) * np.sqrt(fluids.rho2)
    yi = H - lam
    kin = 0.5 * (a1**2 * H + a2**2 * (1.0 - H))
    if fluids.boussinesq:
        # -(1/2) int 4 rho1 y (chi1 - chi2) dy
        lower = 0.5 * (yi**2 - lam**2)
        upper = 0.5 * (h2**2 - yi**2)
        return kin - 2.0 * fluids.rho1 * (lower - upper)
    F2 = front_froude(fluids)

    def pot(rho, a, b):
        # (1/2) int_a^b rho (2y/F2 - 1) dy
        return 0.5 * rho * ((b**2 - a**2) / F2 - (b - a))

    return kin - pot(fluids.rho1, -lam, yi) - pot(fluids.rho2, yi, h2)


def flow_force(y, psi_y, psi_x, lower, fluids: FluidPair, lam: float,
               tol: float = 1e-9) -> float:
    """Flow force of a vertical slice by composite quadrature.

    ``y`` must span the channel [-lam, 1 - lam] and be sorted.  ``lower``
    labels samples in the lower layer.  Phase jumps inside a grid cell are
    not located; supply the interface height as a node, labelled lower, for
    exact results.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size < 2 or np.any(np.diff(y) <= 0):
        raise ParameterError("slice ordinates must be strictly increasing")
    if abs(y[0] + lam) > tol or abs(y[-1] - (1.0 - lam)) > tol:
        raise ParameterError("slice must span the full channel [-lam, 1-lam]")
    lower = np.asarray(lower, dtype=bool)
    kin = np.asarray(psi_y) ** 2 - np.asarray(psi_x) ** 2
    total = 0.0
    for is_lower in (True, False):
        idx = np.flatnonzero(lower == is_lower)
        if idx.size == 0:
            continue
        lo, hi = idx[0], idx[-1] + 1
        k = kin[lo:hi]
        if not is_lower and lo > 0 and idx.size >= 2:
            # share the interface node (the last lower one); its velocity is
            # the lower layer's, so extrapolate the upper kinetic term there
            lo -= 1
            k = np.concatenate([[k[0] + (k[0] - k[1]) * (y[lo] - y[lo + 1])
                                 / (y[lo + 1] - y[lo + 2])], k])
        ys = y[lo:hi]
        f = k - potential_weights(fluids, ys, np.full(ys.size, is_lower))
        if ys.size >= 2:
            total += _integrate(f, ys)
    return 0.5 * total


def _integrate(f, y):
    if y.size >= 3:
        return float(simpson(f, x=y))
    return float(np.trapezoid(f, y))


# ---------------------------------------------------------------------------
# conjugate flows

def conjugate_residuals(fluids: FluidPair, lam: float, H):
    """Flow-force mismatch and dynamic jump of the laminar state with lower depth H.

    Returns ``(S(H) - S0(lam), jump(H))``; a conjugate state zeroes both.
    """
    H = np.asarray(H, dtype=float)
    jump = _jump_only(fluids, lam, H)
    ff = np.vectorize(lambda h: layered_flow_force(fluids, lam, h))(H)
    return ff - upstream_flow_force(fluids, lam), jump


def conjugate_roots(fluids: FluidPair, lam: float, n: int = 20000,
                    tol: float = 1e-9) -> np.ndarray:
    """All H in (0, 1) solving both conjugate-flow equations, by brute force.

    The flow-force equation has only double roots (it is a perfect square in
    H), so sign changes are located on the jump condition and the flow-force
    mismatch is used as a filter.  ``n`` scan cells bracket the roots, which
    bisection then refines to round-off; roots closer than one cell merge.
    """
    H = np.linspace(0.0, 1.0, n + 2)[1:-1]
    jump = _jump_only(fluids, lam, H)
    roots = []
    idx = np.flatnonzero(np.sign(jump[:-1]) * np.sign(jump[1:]) <= 0)
    for i in idx:
        a, b = H[i], H[i + 1]
        fa = _jump_only(fluids, lam, a)
        if fa == 0.0:
            roots.append(a)
            continue
        for _ in range(200):
            m = 0.5 * (a + b)
            fm = _jump_only(fluids, lam, m)
            if np.sign(fm) == np.sign(fa):
                a, fa = m, fm
            else:
                b = m
            if b - a < 1e-15:
                break
        roots.append(0.5 * (a + b))
    roots = np.unique(np.round(roots, 13))
    keep = [r for r in roots
            if abs(conjugate_residuals(fluids, lam, r)[0]) < tol]
    if not keep:
        raise ArithmeticError("conjugate-flow root finder found no common root")
    return np.array(keep)


def _jump_only(fluids, lam, H):
    H = np.asarray(H, dtype=float)
    h2 = 1.0 - lam
    d1 = (lam / H) ** 2 * fluids.rho1
    d2 = (h2 / (1.0 - H)) ** 2 * fluids.rho2
    if fluids.boussinesq:
        return d2 - d1 - 8.0 * fluids.rho1 * (H - lam)
    F2 = front_froude(fluids)
    return d2 - d1 + 2.0 * (fluids.rho2 - fluids.rho1) / F2 * (H - lam) \
        - (fluids.rho2 - fluids.rho1)


@dataclass(frozen=True)
class ConjugateState:
    H_up: float
    H_down: float
    fluids: FluidPair

    @property
    def lam(self) -> float:
        return self.H_up

    def profile_up(self, y):
        return laminar_profile(self.fluids, self.lam, self.H_up, y)

    def profile_down(self, y):
        return laminar_profile(self.fluids, self.lam, self.H_down, y)


def laminar_profile(fluids: FluidPair, lam: float, H: float, y):
    """Piecewise-linear vertical stream-function profile with lower thickness H.

    Returns ``(psi, psi_y)`` at heights ``y`` in [-lam, 1-lam].  The bed and
    lid values are the upstream ones, so the fluxes match for any H.
    """
    y = np.asarray(y, dtype=float)
    yi = H - lam
    s1 = -lam / H * np.sqrt(fluids.rho1)
    s2 = -(1.0 - lam) / (1.0 - H) * np.sqrt(fluids.rho2)
    slope = np.where(y <= yi, s1, s2)
    return slope * (y - yi), slope


def conjugate_state(fluids: FluidPair, lam: float) -> ConjugateState:
    return ConjugateState(lam, conjugate_downstream(fluids), fluids)
