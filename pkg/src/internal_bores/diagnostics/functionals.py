"""Energy-type functionals of two-phase fields and their derivative identities.

Conventions: u = -psi, Omega^+ = {u >= 0} is the lighter phase.  The
energy density is |grad u|^2 - rho chi w with w = y (fronts) or y + Q
(gravity currents), so |grad u|^2 + rho w is continuous across a free
boundary.  All traces are evaluated on a decreasing radius sequence.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field as dc_field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .fields import PreconditionError, SampledField, as_sampled

__all__ = [
    "FunctionalTrace", "EnergyBoundResult", "geometric_radii", "functional_AB",
    "energy_bound_check", "weiss_M", "acf_phi", "gc_M", "blowup_sample",
    "oddson_check", "poincare_exponents", "Bump", "random_bumps",
    "variational_residual", "residual_convergence", "phase_parts",
]


def _fmt(v) -> str:
    if v is None or not math.isfinite(float(v)):
        return "nan" if v is None else repr(float(v))
    return f"{float(v):.17g}"


@dataclass
class FunctionalTrace:
    """A functional sampled on a strictly decreasing radius sequence."""

    name: str
    radii: np.ndarray
    values: np.ndarray
    derivative_estimates: np.ndarray
    identity: Optional[np.ndarray] = None
    identity_residual: Optional[np.ndarray] = None
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        self.radii = np.asarray(self.radii, float)
        self.values = np.asarray(self.values, float)
        if self.radii.size > 1 and np.any(np.diff(self.radii) >= 0):
            raise ValueError("radii must be strictly decreasing")

    def __len__(self):
        return self.radii.size

    def increments(self) -> np.ndarray:
        """values[k+1] - values[k], i.e. changes as the radius shrinks."""
        return np.diff(self.values)

    def violations(self, slack: float = 1e-6) -> np.ndarray:
        """Indices k where the trace rises by more than ``slack`` from r_k to r_{k+1}."""
        return np.nonzero(self.increments() > slack)[0]

    def to_csv(self, path) -> None:
        n = self.radii.size
        ident = self.identity_residual if self.identity_residual is not None else [None] * n
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "value", "derivative_estimate", "identity_residual"])
            for r, v, d, e in zip(self.radii, self.values, self.derivative_estimates, ident):
                w.writerow([_fmt(r), _fmt(v), _fmt(d), _fmt(e)])


def geometric_radii(R: float, n: int, per_octave: int = 4) -> np.ndarray:
    """r_k = R 2^{-k/per_octave}, k = 0..n-1."""
    if n < 1 or R <= 0:
        raise ValueError("need R > 0 and n >= 1")
    return R * 2.0 ** (-np.arange(n) / per_octave)


def _check_radii(f: SampledField, radii) -> np.ndarray:
    r = np.asarray(radii, float)
    if r.ndim != 1 or r.size == 0:
        raise ValueError("radii must be a non-empty 1-d sequence")
    if r.size > 1 and np.any(np.diff(r) >= 0):
        raise ValueError("radii must be strictly decreasing")
    if r[0] > f.R * (1 + 1e-12) or r[-1] <= 0:
        raise ValueError(f"radii must lie in (0, {f.R}]")
    return r


def _grid_derivative(radii, values) -> np.ndarray:
    if len(radii) < 3:
        return np.full(len(radii), np.nan)
    return np.gradient(np.asarray(values, float), np.asarray(radii, float), edge_order=2)


def _richardson(fun: Callable[[float], float], r: float, h_rel: float) -> float:
    """Centered difference with one Richardson step, error O(h^4)."""
    h = h_rel * r
    d1 = (fun(r + h) - fun(r - h)) / (2 * h)
    d2 = (fun(r + h / 2) - fun(r - h / 2)) / h
    return (4 * d2 - d1) / 3


def _grad2(f: SampledField):
    def g(x, y):
        gx, gy = f.grad(x, y)
        return gx * gx + gy * gy
    return g


def _radial(f: SampledField, x, y):
    gx, gy = f.grad(x, y)
    r = np.hypot(x, y)
    return (x * gx + y * gy) / np.where(r > 0, r, 1.0)


# ---------------------------------------------------------------------------
# A and B

def functional_AB(field, radii, tol: float = 1e-10, level: int | None = None,
                  fd: str = "grid", h_rel: float = 0.02):
    """Traces A(r) = r^-2 int u_x u_y and B(r) = r^-2 int (u_y^2 - u_x^2).

    When the field is known to carry the potential rho y (no Q), the
    derivatives are also evaluated from the identities valid for
    variational solutions,

        A' = (1/2) r^-3 int rho x - r^-4 oint rho x y^2,
        B' = r^-3 int rho y - r^-4 oint rho y (y^2 - x^2),

    and compared (absolute difference) with the finite-difference derivative.
    """
    f = as_sampled(field)
    r = _check_radii(f, radii)

    def fa(x, y):
        gx, gy = f.grad(x, y)
        return gx * gy

    def fb(x, y):
        gx, gy = f.grad(x, y)
        return gy * gy - gx * gx

    a_of = lambda rr: f.area(fa, rr, tol, level) / rr**2  # noqa: E731
    b_of = lambda rr: f.area(fb, rr, tol, level) / rr**2  # noqa: E731
    A = np.array([a_of(rr) for rr in r])
    B = np.array([b_of(rr) for rr in r])
    if fd == "grid":
        dA, dB = _grid_derivative(r, A), _grid_derivative(r, B)
    elif fd == "richardson":
        dA = np.array([_richardson(a_of, rr, h_rel) for rr in r])
        dB = np.array([_richardson(b_of, rr, h_rel) for rr in r])
    else:
        raise ValueError("fd must be 'richardson' or 'grid'")
    idA = idB = resA = resB = None
    if f.linear_potential and f.bernoulli_q == 0.0 and f.potential is None:
        idA = np.array([0.5 * f.area(lambda x, y: f.rho(x, y) * x, rr, tol, level) / rr**3
                        - f.arc(lambda x, y: f.rho(x, y) * x * y * y, rr, tol, level) / rr**4
                        for rr in r])
        idB = np.array([f.area(lambda x, y: f.rho(x, y) * y, rr, tol, level) / rr**3
                        - f.arc(lambda x, y: f.rho(x, y) * y * (y * y - x * x), rr, tol,
                                level) / rr**4
                        for rr in r])
        resA, resB = np.abs(dA - idA), np.abs(dB - idB)
    return (FunctionalTrace("A", r, A, dA, idA, resA, {"field": f.name}),
            FunctionalTrace("B", r, B, dB, idB, resB, {"field": f.name}))


# ---------------------------------------------------------------------------
# energy bound

@dataclass
class EnergyBoundResult:
    passed: bool
    radii: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    margins: np.ndarray
    M_lip: float

    @property
    def min_margin(self) -> float:
        return float(np.min(self.margins))


def _polar_samples(f: SampledField, n_r: int = 24, n_th: int = 96, r_max=None):
    r_max = f.R if r_max is None else r_max
    rr = r_max * ((np.arange(n_r) + 0.5) / n_r) ** 2
    th0, th1 = (np.pi, 2 * np.pi) if f.half else (0.0, 2 * np.pi)
    tt = th0 + (th1 - th0) * (np.arange(n_th) + 0.5) / n_th
    Rg, Tg = np.meshgrid(rr, tt, indexing="ij")
    return Rg * np.cos(Tg), Rg * np.sin(Tg)


def monotone_violations(f: SampledField, M_lip: float, tol: float = 1e-12,
                        n_r: int = 24, n_th: int = 96) -> list[str]:
    """Samples breaking the sign conditions: u_x u_y of one sign, |u_x| <= M |u_y|."""
    x, y = _polar_samples(f, n_r, n_th)
    gx, gy = f.grad(x, y)
    out = []
    prod = gx * gy
    if np.any(prod > tol) and np.any(prod < -tol):
        i = np.unravel_index(np.argmax(prod), prod.shape)
        j = np.unravel_index(np.argmin(prod), prod.shape)
        out.append(f"u_x u_y changes sign: +{prod[i]:.3g} at ({x[i]:.4g}, {y[i]:.4g}), "
                   f"{prod[j]:.3g} at ({x[j]:.4g}, {y[j]:.4g})")
    excess = np.abs(gx) - M_lip * np.abs(gy)
    if np.any(excess > tol):
        k = np.unravel_index(np.argmax(excess), excess.shape)
        out.append(f"|u_x| > {M_lip:g}|u_y| at ({x[k]:.4g}, {y[k]:.4g}): "
                   f"u_x={gx[k]:.4g}, u_y={gy[k]:.4g}")
    return out


def energy_bound_check(field, radii, M_lip: float, tol: float = 1e-10,
                       level: int | None = None, check: bool = True,
                       slack: float = 0.0) -> EnergyBoundResult:
    """r^-2 int |grad u|^2 <= max(2M+1, 2)|A(r)| + B(r) at each radius.

    The sign conditions are checked on a polar sample grid first; with
    ``check=False`` the inequality is evaluated regardless.
    """
    f = as_sampled(field)
    r = _check_radii(f, radii)
    if check:
        bad = monotone_violations(f, M_lip)
        if bad:
            raise PreconditionError(f"{f.name}: " + "; ".join(bad))
    A, B = functional_AB(f, r, tol, level)
    lhs = np.array([f.area(_grad2(f), rr, tol, level) / rr**2 for rr in r])
    rhs = max(2 * M_lip + 1, 2.0) * np.abs(A.values) + B.values
    margins = rhs - lhs
    return EnergyBoundResult(bool(np.all(margins >= -slack)), r, lhs, rhs, margins, M_lip)


# ---------------------------------------------------------------------------
# Weiss-type functionals

def _weiss_value(f: SampledField, r: float, tol, level) -> float:
    g2 = _grad2(f)
    bulk = f.area(lambda x, y: g2(x, y) - f.rho_w(x, y), r, tol, level)
    bd = f.arc(lambda x, y: f.u(x, y) ** 2, r, tol, level)
    return bulk / r**3 - 1.5 * bd / r**4


def _weiss_rate(f: SampledField, r: float, tol, level) -> float:
    def g(x, y):
        return (_radial(f, x, y) - 1.5 * f.u(x, y) / r) ** 2
    return 2.0 * f.arc(g, r, tol, level) / r**3


def _traces(name, f, r, value, rate, fd, h_rel, tol, level, meta):
    vals = np.array([value(rr) for rr in r])
    ident = np.array([rate(rr) for rr in r])
    if fd == "richardson":
        der = np.array([_richardson(value, rr, h_rel) for rr in r])
    elif fd == "grid":
        der = _grid_derivative(r, vals)
    else:
        raise ValueError("fd must be 'richardson' or 'grid'")
    # relative to the natural derivative scale |M|/r when the rate vanishes
    scale = np.maximum(np.abs(ident), np.abs(vals) / r)
    scale = np.where(scale > 0, scale, 1.0)
    res = np.abs(der - ident) / scale
    return FunctionalTrace(name, r, vals, der, ident, res, meta)


def weiss_M(field, radii, tol: float = 1e-9, level: int | None = None,
            fd: str = "richardson", h_rel: float = 0.02) -> FunctionalTrace:
    """M(r) = r^-3 int (|grad u|^2 - rho w) - (3/2) r^-4 oint u^2 on full disks.

    ``identity`` holds the boundary formula 2 r^-3 oint (u_nu - 3u/(2r))^2
    for dM/dr; ``derivative_estimates`` the finite-difference derivative
    (``fd="grid"`` uses the radius sequence itself, ``"richardson"`` a
    local h = h_rel r stencil around each radius).
    """
    f = as_sampled(field)
    if f.half:
        raise ValueError("weiss_M works on full disks; use gc_M on half-disks")
    r = _check_radii(f, radii)
    if fd == "richardson" and r[0] * (1 + h_rel) > f.R * (1 + 1e-12):
        raise ValueError("largest radius leaves no room for the difference stencil")
    return _traces("M", f, r, lambda rr: _weiss_value(f, rr, tol, level),
                   lambda rr: _weiss_rate(f, rr, tol, level), fd, h_rel, tol, level,
                   {"field": f.name})


def gc_M(field, radii, tol: float = 1e-9, level: int | None = None, fd: str = "richardson",
         h_rel: float = 0.02, check: bool = True) -> FunctionalTrace:
    """Gravity-current functional on lower half-disks B_r^- with flat top T.

    Q = 0:  r^-3 int (|grad u|^2 - rho y) - (3/2) r^-4 oint u^2,
            dM/dr = 2 r^-3 oint (u_nu - 3u/(2r))^2.
    Q != 0: r^-2 int (|grad u|^2 - Q rho) - r^-3 oint u^2,
            dM/dr = 2 r^-2 oint (u_nu - u/r)^2 - 3 r^-3 int rho y + r^-2 oint rho y.
    Boundary integrals run over the lower arc only.  ``meta["regime"]``
    records which variant was used.
    """
    f = as_sampled(field, half=True)
    if not f.half:
        f = replace(f, half=True)
    r = _check_radii(f, radii)
    if check:
        _check_gc(f)
    Q = f.bernoulli_q
    rho_y = lambda x, y: f.rho(x, y) * y  # noqa: E731
    if Q == 0.0:
        value = lambda rr: _weiss_value(replace(f, bernoulli_q=0.0), rr, tol, level)  # noqa: E731
        rate = lambda rr: _weiss_rate(f, rr, tol, level)  # noqa: E731
        regime = "Q=0"
    else:
        g2 = _grad2(f)

        def value(rr):
            bulk = f.area(lambda x, y: g2(x, y) - Q * f.rho(x, y), rr, tol, level)
            return bulk / rr**2 - f.arc(lambda x, y: f.u(x, y) ** 2, rr, tol, level) / rr**3

        def rate(rr):
            sq = f.arc(lambda x, y: (_radial(f, x, y) - f.u(x, y) / rr) ** 2, rr, tol, level)
            return (2 * sq / rr**2 - 3 * f.area(rho_y, rr, tol, level) / rr**3
                    + f.arc(rho_y, rr, tol, level) / rr**2)
        regime = "Q!=0"
    return _traces("M_gc", f, r, value, rate, fd, h_rel, tol, level,
                   {"field": f.name, "regime": regime, "Q": Q})


def _check_gc(f: SampledField, tol: float = 1e-12):
    x, y = _polar_samples(f)
    u = f.u(x, y)
    if np.any(u > tol):
        k = np.unravel_index(np.argmax(u), u.shape)
        raise PreconditionError(f"{f.name}: u = {u[k]:.3g} > 0 at ({x[k]:.4g}, {y[k]:.4g})")
    xt = np.linspace(-f.R, f.R, 101)
    ut = f.u(xt, np.zeros_like(xt))
    if np.any(np.abs(ut) > tol):
        k = int(np.argmax(np.abs(ut)))
        raise PreconditionError(f"{f.name}: u = {ut[k]:.3g} != 0 on the top at x={xt[k]:.4g}")


# ---------------------------------------------------------------------------
# ACF

def phase_parts(field) -> tuple[SampledField, SampledField]:
    """(u^+, u^-) as nonnegative fields sharing the phase labels of ``field``."""
    f = as_sampled(field)

    def part(sign):
        def u(x, y):
            return np.maximum(sign * f.u(x, y), 0.0)

        def grad(x, y):
            gx, gy = f.grad(x, y)
            on = sign * f.u(x, y) > 0
            return np.where(on, sign * gx, 0.0), np.where(on, sign * gy, 0.0)

        return replace(f, u=u, grad=grad, name=f"{f.name}{'+' if sign > 0 else '-'}")

    return part(1), part(-1)


def acf_phi(u1, u2, radii, tol: float = 1e-10, level: int | None = None,
            check: bool = True, slack: float = 1e-6) -> FunctionalTrace:
    """Phi(r) = (r^-2 int |grad u1|^2)(r^-2 int |grad u2|^2).

    Phi grows with r for admissible pairs, so along the shrinking radius
    sequence it must not increase; ``meta["violations"]`` lists steps
    where it rises by more than ``slack``.
    """
    f1, f2 = as_sampled(u1), as_sampled(u2)
    r = _check_radii(f1, radii)
    _check_radii(f2, radii)
    if check:
        x, y = _polar_samples(f1, r_max=r[0])
        a, b = f1.u(x, y), f2.u(x, y)
        if np.any(a < -1e-14) or np.any(b < -1e-14):
            raise PreconditionError("ACF inputs must be nonnegative")
        prod = a * b
        if np.any(prod > 1e-14):
            k = np.unravel_index(np.argmax(prod), prod.shape)
            raise PreconditionError(f"supports overlap at ({x[k]:.4g}, {y[k]:.4g})")
    e1 = np.array([f1.area(_grad2(f1), rr, tol, level) / rr**2 for rr in r])
    e2 = np.array([f2.area(_grad2(f2), rr, tol, level) / rr**2 for rr in r])
    phi = e1 * e2
    tr = FunctionalTrace("Phi", r, phi, _grid_derivative(r, phi),
                         meta={"factors": (e1, e2), "fields": (f1.name, f2.name)})
    tr.meta["violations"] = tr.violations(slack).tolist()
    return tr


# ---------------------------------------------------------------------------
# blowups and cone bounds

def blowup_sample(field, r_m: float, regime: str = "front", Q: float | None = None,
                  n_r: int = 32, n_th: int = 128):
    """Rescaling u(r_m z)/r_m^d onto the unit disk, plus its Lipschitz estimate.

    d = 3/2 for fronts and for gravity currents with Q = 0, d = 1 for
    gravity currents with Q != 0.  The Lipschitz estimate is the largest
    |grad u_m| over a polar sample grid.
    """
    f = as_sampled(field)
    if not 0 < r_m <= f.R * (1 + 1e-12):
        raise ValueError(f"r_m={r_m} outside the sampled disk")
    if regime == "front":
        d = 1.5
    elif regime == "gc":
        q = f.bernoulli_q if Q is None else Q
        d = 1.5 if q == 0.0 else 1.0
    else:
        raise ValueError("regime must be 'front' or 'gc'")
    s = r_m ** (1.0 - d)
    u0, g0, p0 = f.u, f.grad, f.plus

    def u(x, y):
        return u0(r_m * np.asarray(x), r_m * np.asarray(y)) / r_m**d

    def grad(x, y):
        gx, gy = g0(r_m * np.asarray(x), r_m * np.asarray(y))
        return s * gx, s * gy

    def plus(x, y):
        return p0(r_m * np.asarray(x), r_m * np.asarray(y))

    pot = None
    if f.potential is not None:
        p_old = f.potential
        pot = lambda x, y, pl: s * s * p_old(r_m * x, r_m * y, pl)  # noqa: E731
    itf = None
    if f.interface is not None:
        i_old = f.interface
        itf = lambda x: i_old(r_m * np.asarray(x)) / r_m  # noqa: E731
    out = replace(f, u=u, grad=grad, plus=plus, R=f.R / r_m, interface=itf,
                  vertex=(f.vertex[0] / r_m, f.vertex[1] / r_m), potential=pot,
                  bernoulli_q=f.bernoulli_q * s * s, name=f"blowup({f.name},{r_m:g})")
    out = replace(out, R=1.0)
    x, y = _polar_samples(out, n_r, n_th)
    gx, gy = grad(x, y)
    return out, float(np.max(np.hypot(gx, gy)))


def oddson_check(field, mu: float, R: float, n_r: int = 40, n_th: int = 40) -> float:
    """Largest C with u >= C |z|^mu cos(mu (theta - pi/2)) on the cone D_{mu,R}.

    D is the open cone |theta - pi/2| < pi/(2 mu), 0 < |z| < R.  Samples
    sit at interior Gauss points, away from the cone boundary where both
    sides vanish.
    """
    f = as_sampled(field)
    if R > f.R * (1 + 1e-12):
        raise ValueError("R exceeds the sampled disk")
    half = np.pi / (2 * mu)
    xr, _ = np.polynomial.legendre.leggauss(n_r)
    xt, _ = np.polynomial.legendre.leggauss(n_th)
    rr = R * 0.5 * (xr + 1)
    tt = np.pi / 2 + half * xt
    Rg, Tg = np.meshgrid(rr, tt, indexing="ij")
    x, y = Rg * np.cos(Tg), Rg * np.sin(Tg)
    u = f.u(x, y)
    if np.any(u <= 0):
        k = np.unravel_index(np.argmin(u), u.shape)
        raise PreconditionError(f"{f.name}: u = {u[k]:.3g} <= 0 inside the cone at "
                                f"({x[k]:.4g}, {y[k]:.4g})")
    ref = Rg**mu * np.cos(mu * (Tg - np.pi / 2))
    return float(np.min(u / ref))


def poincare_exponents(field, mu: float, C: float, radii, tol: float = 1e-10) -> dict:
    """Decay exponents of the energy density and of the cone lower bound.

    energy(r) = r^-2 int_{B_r} |grad u|^2 and
    bound(r) = r^-4 int_{D cap B_r} (C |z|^mu cos(mu(theta - pi/2)))^2,
    the square-integral that a Poincare inequality turns into a lower bound
    for the energy.  Exponents are least-squares slopes in log-log.
    """
    f = as_sampled(field)
    r = _check_radii(f, radii)
    energy = np.array([f.area(_grad2(f), rr, tol) / rr**2 for rr in r])
    half = np.pi / (2 * mu)
    # int_0^r s^{2mu+1} ds * int cos^2 over the aperture
    ang = half  # int_{-half}^{half} cos^2(mu t) dt = half
    bound = C**2 * ang * r ** (2 * mu + 2) / (2 * mu + 2) / r**4
    lr = np.log(r)
    return {"radii": r, "energy": energy, "bound": bound,
            "energy_exponent": float(np.polyfit(lr, np.log(energy), 1)[0]),
            "bound_exponent": float(np.polyfit(lr, np.log(bound), 1)[0])}


# ---------------------------------------------------------------------------
# variational residual

@dataclass(frozen=True)
class Bump:
    """phi = (a, b) * beta(|z - c| / s) with beta(t) = exp(1 - 1/(1 - t^2)).

    ``tangential`` multiplies the y component by y / s so phi . nu = 0 on
    the line y = 0 (the top of a gravity-current half-disk).
    """

    c: tuple
    s: float
    a: float
    b: float
    tangential: bool = False

    def _beta(self, x, y):
        dx, dy = x - self.c[0], y - self.c[1]
        t2 = (dx * dx + dy * dy) / self.s**2
        inside = t2 < 1.0
        q = np.where(inside, 1.0 - t2, 1.0)
        beta = np.where(inside, np.exp(1.0 - 1.0 / q), 0.0)
        # d beta / d(t2) = -beta / q^2; d t2/dx = 2 dx / s^2
        k = np.where(inside, -beta / q**2 * 2.0 / self.s**2, 0.0)
        return beta, k * dx, k * dy

    def __call__(self, x, y):
        beta = self._beta(x, y)[0]
        m = y / self.s if self.tangential else 1.0
        return self.a * beta, self.b * m * beta

    def jacobian(self, x, y):
        """((d1 phi1, d2 phi1), (d1 phi2, d2 phi2))."""
        beta, bx, by = self._beta(x, y)
        if self.tangential:
            m = y / self.s
            return ((self.a * bx, self.a * by),
                    (self.b * m * bx, self.b * (m * by + beta / self.s)))
        return (self.a * bx, self.a * by), (self.b * bx, self.b * by)


def random_bumps(n: int, R: float = 1.0, seed: int = 0, half: bool = False) -> list[Bump]:
    """Seeded bumps inside B_R whose supports contain the origin.

    ``half`` gives tangential bumps centred on the top y = 0, for the
    gravity-current half-disk.
    """
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        s = R * rng.uniform(0.4, 0.6)
        rho = rng.uniform(0.0, 0.9 * min(R - s, s))
        if half:
            c = (rho * rng.choice([-1.0, 1.0]), 0.0)
        else:
            th = rng.uniform(0, 2 * np.pi)
            c = (rho * np.cos(th), rho * np.sin(th))
        a, b = rng.normal(size=2)
        out.append(Bump((float(c[0]), float(c[1])), float(s), float(a), float(b),
                        tangential=half))
    return out


def _potential_grad(f: SampledField, x, y, pl, h: float = 1e-6):
    if f.potential is None:
        rho = np.where(pl, f.rho_plus, f.rho_minus)
        return rho * (y + f.bernoulli_q), np.zeros(np.shape(x)), rho * np.ones(np.shape(y))
    P = f.potential
    w = P(x, y, pl)
    wx = (P(x + h, y, pl) - P(x - h, y, pl)) / (2 * h)
    wy = (P(x, y + h, pl) - P(x, y - h, pl)) / (2 * h)
    return w, wx, wy


def _check_test_field(phi, f: SampledField, regime: str, tol: float = 1e-12):
    th = np.linspace(0, 2 * np.pi, 721)
    x, y = f.R * np.cos(th), f.R * np.sin(th)
    if regime == "gc":
        m = y <= 0
        x, y = x[m], y[m]
    p1, p2 = phi(x, y)
    if np.max(np.hypot(p1, p2)) > tol:
        raise PreconditionError("test field does not vanish on the sampled circle")
    if regime == "gc":
        xt = np.linspace(-f.R, f.R, 401)
        _, p2t = phi(xt, np.zeros_like(xt))
        if np.max(np.abs(p2t)) > tol:
            raise PreconditionError("test field is not tangential on the top")


def variational_residual(field, test_fields: Sequence, regime: str = "front",
                         tol: float = 1e-10, level: int | None = None,
                         check: bool = True) -> np.ndarray:
    """int (|grad u|^2 div phi - 2 Dphi[grad u, grad u] - div(rho w phi)) per test field.

    ``regime="gc"`` integrates over the lower half-disk and requires
    phi . nu = 0 on the top; ``"front"`` uses the full disk and compact
    support.  Test fields are callables with a ``jacobian`` method.
    """
    if regime not in ("front", "gc"):
        raise ValueError("regime must be 'front' or 'gc'")
    f = as_sampled(field)
    if regime == "gc" and not f.half:
        f = replace(f, half=True)
    out = []
    for phi in test_fields:
        if check:
            _check_test_field(phi, f, regime)

        def integrand(x, y, phi=phi):
            gx, gy = f.grad(x, y)
            (a11, a12), (a21, a22) = phi.jacobian(x, y)
            p1, p2 = phi(x, y)
            div = a11 + a22
            dform = gx * (a11 * gx + a12 * gy) + gy * (a21 * gx + a22 * gy)
            pl = np.asarray(f.plus(x, y), bool)
            w, wx, wy = _potential_grad(f, x, y, pl)
            return (gx * gx + gy * gy) * div - 2 * dform - (w * div + wx * p1 + wy * p2)

        out.append(f.area(integrand, f.R, tol, level))
    return np.array(out)


def residual_convergence(field, test_fields, levels=(1, 2, 3, 4, 5), regime="front"):
    """Residuals at fixed quadrature levels and the observed orders between them.

    Each level doubles the panel count, so the order between consecutive
    levels is log2 of the ratio of successive changes.
    """
    res = np.array([variational_residual(field, test_fields, regime, level=lv)
                    for lv in levels])
    err = np.abs(res)
    with np.errstate(divide="ignore", invalid="ignore"):
        orders = np.log2(err[:-1] / err[1:])
    return {"levels": list(levels), "residuals": res, "orders": orders}


def fitted_orders(conv: dict) -> np.ndarray:
    """Least-squares slope of -log2|residual| against level, one per test field.

    Pairwise orders are noisy where a residual crosses zero between levels;
    the fit over all levels is the robust convergence rate.
    """
    lv = np.asarray(conv["levels"], float)
    err = np.abs(np.asarray(conv["residuals"], float))
    return np.array([-np.polyfit(lv, np.log2(e), 1)[0] for e in err.T])
