"""Two-phase scalar fields on a disk or half-disk, as seen by the functionals.

A SampledField is always queried in coordinates relative to its ``center``.
Its integration strategy depends on what is known about the free boundary:

* ``rays`` from a ``vertex``: exact angular breakpoints (Gauss panels);
* an ``interface`` graph y = eta(x): chords split where they cross it;
* otherwise: recursive cut-cell subdivision driven by the phase label.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from ..oracles import ExactField
from ..params import potential_weights
from .quadrature import (TWO_PI, chord_length, circle_integral, disk_integral,
                         disk_integral_cut, graph_split_integral, ray_crossings)


class PreconditionError(ValueError):
    """Input field violates an assumption of the requested diagnostic."""


@dataclass(frozen=True)
class SampledField:
    """Scalar field u with gradient, phase labels and densities.

    ``u``, ``grad`` and ``plus`` take coordinates relative to ``center``.
    ``potential(x, y, plus)`` returns rho * w, the weight multiplying the
    phase indicator in the energy (w = y, or y + Q for gravity currents).
    ``rays`` are free-boundary ray angles emanating from ``vertex``
    (relative coordinates); None means the free boundary is unknown.
    """

    u: Callable
    grad: Callable
    plus: Callable
    rho_plus: float = 0.0
    rho_minus: float = 1.0
    bernoulli_q: float = 0.0
    R: float = 1.0
    half: bool = False
    rays: Optional[tuple] = None
    vertex: tuple = (0.0, 0.0)
    center: tuple = (0.0, 0.0)
    potential: Optional[Callable] = None
    linear_potential: bool = True
    name: str = "field"
    interface: Optional[Callable] = None

    # -- pointwise ------------------------------------------------------------
    def rho(self, x, y):
        p = np.asarray(self.plus(x, y), bool)
        return np.where(p, self.rho_plus, self.rho_minus)

    def rho_w(self, x, y):
        if self.potential is not None:
            return self.potential(x, y, np.asarray(self.plus(x, y), bool))
        return self.rho(x, y) * (y + self.bernoulli_q)

    def labels(self, x, y):
        """(chi_plus, chi_minus) as floats."""
        p = np.asarray(self.plus(x, y), bool)
        return p.astype(float), (~p).astype(float)

    # -- integration ------------------------------------------------------------
    def _angles(self):
        return (np.pi, TWO_PI) if self.half else (0.0, TWO_PI)

    def area(self, f, r: float, tol: float = 1e-10, level: int | None = None,
             cut_depth: int = 12) -> float:
        """Integral of f(x, y) over B_r (or its lower half), relative coordinates."""
        if r > self.R * (1 + 1e-12):
            raise ValueError(f"radius {r} exceeds the sampled disk R={self.R}")
        th0, th1 = self._angles()
        if self.rays is None and self.interface is not None:
            return graph_split_integral(f, r, self.interface, self.half, tol, level=level)
        if self.rays is None:
            return disk_integral_cut(f, self.plus, r, th0, th1, max_depth=cut_depth)
        vx, vy = self.vertex
        if vx == 0.0 and vy == 0.0:
            return disk_integral(f, r, th0, th1, breaks=self.rays, tol=tol, level=level)
        if self.half:
            raise NotImplementedError("eccentric vertex on a half-disk")
        Rt = chord_length(self.vertex, r)
        g = lambda x, y: f(x + vx, y + vy)  # noqa: E731
        return disk_integral(g, Rt, 0.0, TWO_PI, breaks=self.rays, tol=tol, level=level)

    def arc(self, f, r: float, tol: float = 1e-10, level: int | None = None,
            top: bool = False) -> float:
        """Arc-length integral of f over the circle |z| = r (lower arc if half).

        On a half-disk, ``top=True`` adds the flat segment T = [-r, r] x {0}.
        """
        th0, th1 = self._angles()
        if self.rays is None:
            breaks = self._label_breaks(r, th0, th1)
        elif self.vertex == (0.0, 0.0):
            breaks = self.rays
        else:
            breaks = ray_crossings(self.vertex, self.rays, r)
        out = circle_integral(f, r, th0, th1, breaks=breaks, tol=tol, level=level)
        if top and self.half:
            from .quadrature import gauss_panels
            xs, ws = gauss_panels(-r, r, 16, 8)
            out += float(np.dot(f(xs, np.zeros_like(xs)), ws))
        return out

    def _label_breaks(self, r, th0, th1, n: int = 4096):
        th = np.linspace(th0, th1, n + 1)
        lab = np.asarray(self.plus(r * np.cos(th), r * np.sin(th)), bool)
        idx = np.nonzero(lab[1:] != lab[:-1])[0]
        out = []
        for i in idx:
            a, b = th[i], th[i + 1]
            la = lab[i]
            for _ in range(50):
                m = 0.5 * (a + b)
                if bool(self.plus(r * np.cos(m), r * np.sin(m))) == la:
                    a = m
                else:
                    b = m
            out.append(0.5 * (a + b))
        return tuple(out)

    # -- constructors -----------------------------------------------------------
    @classmethod
    def from_exact(cls, f: ExactField, R: float = 1.0, half: bool = False,
                   Q: float = 0.0, center=(0.0, 0.0), rays: bool = True,
                   name: Optional[str] = None) -> "SampledField":
        """Wrap an oracle; its free-boundary rays (through 0) become breakpoints."""
        cx, cy = float(center[0]), float(center[1])
        u = lambda x, y: f.u(x + cx, y + cy)  # noqa: E731
        g = lambda x, y: f.grad(x + cx, y + cy)  # noqa: E731
        p = lambda x, y: np.asarray(f.plus(x + cx, y + cy), bool)  # noqa: E731
        ray_t = tuple(f.ray_angles()) if rays else None
        if rays and not f.rays:
            ray_t = ()
        vx, vy = f.meta.get("vertex", (0.0, 0.0))
        return cls(u, g, p, f.rho_plus, f.rho_minus, Q, R, half, ray_t,
                   (vx - cx, vy - cy), (cx, cy), None, True, name or f.name)

    @classmethod
    def from_bore(cls, bf, center, R: float, name: str = "bore") -> "SampledField":
        """u = -psi of a reconstructed bore around ``center`` (physical coords).

        The plus phase (u >= 0) is the upper, lighter layer.  The potential is
        the one whose jump reproduces the bore's dynamic condition.
        """
        cx, cy = float(center[0]), float(center[1])
        lam = bf.lam
        if not (abs(cx) + R <= bf.L and -lam <= cy - R and cy + R <= 1.0 - lam):
            raise PreconditionError(
                f"disk of radius {R} about ({cx}, {cy}) leaves the channel")
        fl = bf.fluids

        def u(x, y):
            return -bf(x + cx, y + cy)

        def grad(x, y):
            px, py = bf.gradient(x + cx, y + cy)
            return -px, -py

        def plus(x, y):
            return ~np.asarray(bf.lower(x + cx, y + cy), bool)

        def potential(x, y, pl):
            # |grad u|^2 + rho w is continuous across the interface
            return potential_weights(fl, y + cy, ~pl)

        def interface(x):
            return bf.eta(np.asarray(x) + cx) - cy

        return cls(u, grad, plus, fl.rho2, fl.rho1, 0.0, R, False, None,
                   (0.0, 0.0), (cx, cy), potential, False, name, interface)

    @classmethod
    def from_polar_samples(cls, r, theta, u, ux, uy, plus, rho_plus=0.0, rho_minus=1.0,
                           Q: float = 0.0, half: bool = False, rays=None,
                           name: str = "samples") -> "SampledField":
        """Field given on a tensor polar grid (r ascending, theta ascending).

        Values are interpolated linearly in (r, theta); theta is treated as
        periodic for full disks.
        """
        r = np.asarray(r, float)
        th = np.asarray(theta, float)
        arrays = [np.asarray(a, float) for a in (u, ux, uy, np.asarray(plus, float))]
        if not half:
            th = np.concatenate([th, [th[0] + TWO_PI]])
            arrays = [np.concatenate([a, a[:, :1]], axis=1) for a in arrays]
        its = [RegularGridInterpolator((r, th), a, bounds_error=False, fill_value=None)
               for a in arrays]

        def at(k, x, y):
            x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
            rr = np.hypot(x, y)
            tt = np.mod(np.arctan2(y, x) - th[0], TWO_PI) + th[0]
            return its[k](np.stack([rr.ravel(), tt.ravel()], axis=1)).reshape(x.shape)

        return cls(lambda x, y: at(0, x, y),
                   lambda x, y: (at(1, x, y), at(2, x, y)),
                   lambda x, y: at(3, x, y) > 0.5,
                   rho_plus, rho_minus, Q, float(r[-1]), half,
                   tuple(rays) if rays is not None else None, name=name)

    def with_densities(self, rho_plus, rho_minus) -> "SampledField":
        return replace(self, rho_plus=rho_plus, rho_minus=rho_minus)

    def with_q(self, Q: float) -> "SampledField":
        return replace(self, bernoulli_q=Q)


def as_sampled(field, R: float = 1.0, half: bool = False, Q: float = 0.0) -> SampledField:
    if isinstance(field, SampledField):
        return field
    if isinstance(field, ExactField):
        return SampledField.from_exact(field, R=R, half=half, Q=Q)
    raise TypeError(f"cannot sample {type(field).__name__}")
