"""Closed-form fields used as ground truth.

Angles are carried as rational multiples of pi (``fractions.Fraction``)
wherever the geometry allows, so free-boundary rays can be handed to the
quadrature as exact breakpoints.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .params import FluidPair, conjugate_downstream, laminar_profile

SQRT2_3 = np.sqrt(2.0) / 3.0


def _as_angle(a) -> float:
    return float(a) * np.pi if isinstance(a, Fraction) else float(a)


@dataclass(frozen=True)
class ExactField:
    """Scalar field with analytic gradient and a two-phase labelling.

    ``plus(x, y)`` is True on the phase Omega^+ = int{u >= 0} unless a custom
    labelling is supplied.  ``rays`` lists free-boundary ray angles through
    the origin (used as quadrature breakpoints).
    """

    u: Callable
    grad: Callable
    plus: Callable
    degree: Optional[float] = None
    rho_plus: float = 0.0
    rho_minus: float = 1.0
    rotation: float = 0.0
    rays: tuple = ()
    name: str = "field"
    meta: dict = field(default_factory=dict)

    def __call__(self, x, y):
        return self.u(np.asarray(x, float), np.asarray(y, float))

    def gradient(self, x, y):
        return self.grad(np.asarray(x, float), np.asarray(y, float))

    def phase_plus(self, x, y):
        return np.asarray(self.plus(np.asarray(x, float), np.asarray(y, float)), bool)

    def ray_angles(self):
        return [_as_angle(a) for a in self.rays]

    def with_densities(self, rho_plus, rho_minus):
        return ExactField(self.u, self.grad, self.plus, self.degree, rho_plus,
                          rho_minus, self.rotation, self.rays, self.name, self.meta)

    def with_phase(self, plus: Callable, name: Optional[str] = None):
        return ExactField(self.u, self.grad, plus, self.degree, self.rho_plus,
                          self.rho_minus, self.rotation, self.rays,
                          name or self.name, self.meta)

    def scaled(self, c: float):
        return ExactField(lambda x, y: c * self.u(x, y),
                          lambda x, y: tuple(c * g for g in self.grad(x, y)),
                          self.plus, self.degree, self.rho_plus, self.rho_minus,
                          self.rotation, self.rays, f"{c}*{self.name}", self.meta)


def from_functions(u, grad, plus=None, degree=None, rho_plus=0.0, rho_minus=1.0,
                   rays=(), name="field") -> ExactField:
    if plus is None:
        plus = lambda x, y: u(x, y) >= 0.0  # noqa: E731
    return ExactField(u, grad, plus, degree, rho_plus, rho_minus, 0.0, tuple(rays), name)


def _wrap(phi):
    return (phi + np.pi) % (2.0 * np.pi) - np.pi


def stokes_corner(rotation=Fraction(0)) -> ExactField:
    """Stokes corner -(sqrt2/3) r^{3/2} cos(3/2 (theta - 3pi/2)) on a 120 degree cone.

    The unrotated support is theta in (7pi/6, 11pi/6).  ``rotation`` turns the
    support counterclockwise, so ``Fraction(1, 6)`` gives the cone
    (4pi/3, 2pi) whose right ray lies along the positive x axis.
    Solves the free-boundary problem with rho^+ = 0, rho^- = 1.
    """
    rot = _as_angle(rotation)
    axis = 1.5 * np.pi + rot

    def u(x, y):
        r = np.hypot(x, y)
        phi = _wrap(np.arctan2(y, x) - axis)
        inside = np.abs(phi) < np.pi / 3
        return np.where(inside, -SQRT2_3 * r**1.5 * np.cos(1.5 * phi), 0.0)

    def grad(x, y):
        r = np.hypot(x, y)
        th = np.arctan2(y, x)
        phi = _wrap(th - axis)
        inside = np.abs(phi) < np.pi / 3
        sr = np.sqrt(r)
        ur = -SQRT2_3 * 1.5 * sr * np.cos(1.5 * phi)
        ut = SQRT2_3 * 1.5 * sr * np.sin(1.5 * phi)  # (1/r) du/dtheta
        gx = ur * np.cos(th) - ut * np.sin(th)
        gy = ur * np.sin(th) + ut * np.cos(th)
        return np.where(inside, gx, 0.0), np.where(inside, gy, 0.0)

    def plus(x, y):
        phi = _wrap(np.arctan2(y, x) - axis)
        return np.abs(phi) >= np.pi / 3

    if isinstance(rotation, Fraction):
        rays = tuple(((Fraction(7, 6) + rotation) % 2, (Fraction(11, 6) + rotation) % 2))
    else:
        rays = ((7 * np.pi / 6 + rot) % (2 * np.pi), (11 * np.pi / 6 + rot) % (2 * np.pi))
    return ExactField(u, grad, plus, 1.5, 0.0, 1.0, rot, rays,
                      f"stokes_corner(rot={rotation})")


def perturbed(base: ExactField, eps: float, kind: str = "quadratic") -> ExactField:
    """Base field plus a small smooth polynomial; phases are those of ``base``."""
    if kind == "quadratic":
        p = lambda x, y: x * x - 0.5 * y * y + 0.3 * x * y  # noqa: E731
        gp = lambda x, y: (2 * x + 0.3 * y, -y + 0.3 * x)  # noqa: E731
    elif kind == "cubic":
        p = lambda x, y: x**3 - 3 * x * y * y + y**3  # noqa: E731
        gp = lambda x, y: (3 * x * x - 3 * y * y, -6 * x * y + 3 * y * y)  # noqa: E731
    else:
        raise ValueError(f"unknown perturbation kind {kind!r}")

    def u(x, y):
        return base.u(x, y) + eps * p(x, y)

    def grad(x, y):
        gx, gy = base.grad(x, y)
        px, py = gp(x, y)
        return gx + eps * px, gy + eps * py

    return ExactField(u, grad, base.plus, None, base.rho_plus, base.rho_minus,
                      base.rotation, base.rays, f"{base.name}+{eps}*{kind}")


def shifted(base: ExactField, a: float) -> ExactField:
    """Horizontal translate u(x - a, y).

    Gravity acts along y only, so a translated variational solution is
    still one; its free-boundary rays now start at (a, 0).
    """

    def u(x, y):
        return base.u(x - a, y)

    def grad(x, y):
        return base.grad(x - a, y)

    meta = dict(base.meta)
    vx, vy = meta.get("vertex", (0.0, 0.0))
    meta["vertex"] = (vx + a, vy)
    return ExactField(u, grad, lambda x, y: base.plus(x - a, y), None, base.rho_plus,
                      base.rho_minus, base.rotation, base.rays, f"shift({base.name},{a})",
                      meta)


def linear(a: float, b: float, name: Optional[str] = None) -> ExactField:
    """u = a x + b y, labelled by its sign; the zero line gives two rays."""
    t = np.arctan2(-a, b) % (2 * np.pi)
    return from_functions(lambda x, y: a * x + b * y,
                          lambda x, y: (np.full(np.shape(x), a, float),
                                        np.full(np.shape(y), b, float)),
                          degree=1.0, rays=(t, (t + np.pi) % (2 * np.pi)),
                          name=name or f"{a}x+{b}y")


def positive_part(f: ExactField, sign: int = 1) -> ExactField:
    """(sign * f)^+ as a nonnegative field."""

    def u(x, y):
        return np.maximum(sign * f.u(x, y), 0.0)

    def grad(x, y):
        gx, gy = f.grad(x, y)
        on = sign * f.u(x, y) > 0
        return np.where(on, sign * gx, 0.0), np.where(on, sign * gy, 0.0)

    return ExactField(u, grad, lambda x, y: u(x, y) > 0, f.degree, f.rho_plus,
                      f.rho_minus, f.rotation, f.rays, f"({sign}*{f.name})^+")


def zero_field(phase_plus: bool = False) -> ExactField:
    """u = 0 with a constant phase label."""
    z = lambda x, y: np.zeros(np.broadcast(x, y).shape)  # noqa: E731
    return ExactField(z, lambda x, y: (z(x, y), z(x, y)),
                      lambda x, y: np.full(np.broadcast(x, y).shape, phase_plus),
                      None, 0.0, 1.0, 0.0, (), f"zero(plus={phase_plus})")


def cone_harmonic(mu: float, axis: float = np.pi / 2) -> ExactField:
    """r^mu cos(mu (theta - axis)) on the cone |theta - axis| < pi/(2 mu), 0 outside."""
    half = np.pi / (2 * mu)

    def u(x, y):
        r = np.hypot(x, y)
        phi = _wrap(np.arctan2(y, x) - axis)
        return np.where(np.abs(phi) < half, r**mu * np.cos(mu * phi), 0.0)

    def grad(x, y):
        r = np.hypot(x, y)
        th = np.arctan2(y, x)
        phi = _wrap(th - axis)
        inside = np.abs(phi) < half
        rm = np.where(r > 0, r, 1.0) ** (mu - 1)
        ur = mu * rm * np.cos(mu * phi)
        ut = -mu * rm * np.sin(mu * phi)
        gx = ur * np.cos(th) - ut * np.sin(th)
        gy = ur * np.sin(th) + ut * np.cos(th)
        return np.where(inside, gx, 0.0), np.where(inside, gy, 0.0)

    return ExactField(u, grad, lambda x, y: u(x, y) > 0, mu, 0.0, 1.0, 0.0,
                      ((axis - half) % (2 * np.pi), (axis + half) % (2 * np.pi)),
                      f"cone_harmonic(mu={mu})")


def rotated(f: ExactField, angle: float) -> ExactField:
    """Field whose graph is ``f`` turned counterclockwise by ``angle``."""
    c, s = np.cos(angle), np.sin(angle)

    def back(x, y):
        return c * x + s * y, -s * x + c * y

    def u(x, y):
        return f.u(*back(x, y))

    def grad(x, y):
        gx, gy = f.grad(*back(x, y))
        return c * gx - s * gy, s * gx + c * gy

    return ExactField(u, grad, lambda x, y: f.plus(*back(x, y)), f.degree,
                      f.rho_plus, f.rho_minus, f.rotation + angle,
                      tuple((_as_angle(a) + angle) % (2 * np.pi) for a in f.rays),
                      f"rot({f.name},{angle:.6g})")


# ---------------------------------------------------------------------------
# channel fields

@dataclass(frozen=True)
class ChannelField:
    """Pseudo stream function psi(x, y) on the channel [-lam, 1 - lam]."""

    psi: Callable
    grad: Callable
    lower: Callable
    interface: Callable
    fluids: FluidPair
    lam: float
    name: str = "channel"

    def __call__(self, x, y):
        return self.psi(np.asarray(x, float), np.asarray(y, float))


def _profile_field(fluids, lam, H, name):
    yi = H - lam

    def psi(x, y):
        return laminar_profile(fluids, lam, H, np.broadcast_to(y, np.broadcast(x, y).shape))[0]

    def grad(x, y):
        y = np.broadcast_to(y, np.broadcast(x, y).shape)
        return np.zeros(y.shape), laminar_profile(fluids, lam, H, y)[1]

    return ChannelField(psi, grad, lambda x, y: np.asarray(y) <= yi,
                        lambda x: np.full(np.shape(x), yi, float), fluids, lam, name)


def laminar(fluids: FluidPair, lam: float) -> ChannelField:
    """Uniform upstream flow: psi_y = -sqrt(rho_i), interface at y = 0."""
    return _profile_field(fluids, lam, lam, f"laminar(lam={lam})")


def conjugate_profiles(fluids: FluidPair, lam: float):
    """Upstream and downstream laminar profiles (Psi^u, Psi^d) of a bore."""
    return (_profile_field(fluids, lam, lam, "upstream"),
            _profile_field(fluids, lam, conjugate_downstream(fluids), "downstream"))


def laminar_dynamic_residual(fluids: FluidPair, lam: float) -> float:
    """Dynamic-condition residual of a flat-interface laminar flow at depth ``lam``
    whose layers pass their upstream fluxes through the conjugate depths.

    This is the interface row seen by the downstream clamp when the trivial
    state is used globally.  Linear in ``lam``; it vanishes exactly at the
    conjugate depth and changes sign there.
    """
    Hd = conjugate_downstream(fluids)
    a1 = lam / Hd * np.sqrt(fluids.rho1)
    a2 = (1.0 - lam) / (1.0 - Hd) * np.sqrt(fluids.rho2)
    if fluids.boussinesq:
        return float(a2**2 - a1**2)
    return float(a2**2 - a1**2 - (fluids.rho2 - fluids.rho1))
