"""Polar quadrature on disks, half-disks and circles.

Area integrals use r = R s^2, so integrands built from r^{k/2} powers
(Stokes-corner type) become polynomial in s.  Known free-boundary rays are
passed as angular breakpoints; unknown phase boundaries are handled by
recursive cell subdivision.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

TWO_PI = 2.0 * np.pi


class QuadratureToleranceError(RuntimeError):
    def __init__(self, msg, estimate, error):
        super().__init__(msg)
        self.estimate = estimate
        self.error = error


@lru_cache(maxsize=None)
def _gauss(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def gauss_panels(a: float, b: float, panels: int, order: int):
    """Composite Gauss-Legendre nodes and weights on [a, b]."""
    x, w = _gauss(order)
    edges = np.linspace(a, b, panels + 1)
    h = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + h[:, None] * x[None, :]).ravel()
    weights = (h[:, None] * w[None, :]).ravel()
    return nodes, weights


def angular_sectors(th0: float, th1: float, breaks=()):
    """Split [th0, th1] at breakpoints (taken modulo 2 pi) that fall inside."""
    pts = [th0, th1]
    for b in breaks:
        for k in (-1, 0, 1, 2):
            t = float(b) + k * TWO_PI
            if th0 + 1e-14 < t < th1 - 1e-14:
                pts.append(t)
    pts = np.unique(np.round(pts, 15))
    return list(zip(pts[:-1], pts[1:]))


def _area_level(f, R, sectors, level, order):
    s, ws = gauss_panels(0.0, 1.0, 2**level, order)
    total = 0.0
    for a, b in sectors:
        th, wt = gauss_panels(a, b, 2**level, order)
        Rt = R(th) if callable(R) else np.full(th.shape, float(R))
        rr = Rt[None, :] * (s * s)[:, None]
        # r dr = 2 R^2 s^3 ds
        w = (ws * 2.0 * s**3)[:, None] * (Rt * Rt * wt)[None, :]
        tt = np.broadcast_to(th[None, :], rr.shape)
        vals = f(rr * np.cos(tt), rr * np.sin(tt))
        total += float(np.sum(w * vals))
    return total


def disk_integral(f, R, th0: float = 0.0, th1: float = TWO_PI, breaks=(),
                  tol: float = 1e-10, order: int = 8, max_level: int = 7,
                  min_level: int = 1, level: int | None = None) -> float:
    """Integral of f(x, y) over the star-shaped sector {r < R(theta), th0 < theta < th1}.

    ``R`` is a number or a vectorized function of theta.  Panels are doubled
    until consecutive estimates agree to ``tol`` (absolute); raises
    QuadratureToleranceError otherwise.  A fixed ``level`` skips adaptivity.
    """
    sectors = angular_sectors(th0, th1, breaks)
    if level is not None:
        return _area_level(f, R, sectors, level, order)
    prev = _area_level(f, R, sectors, min_level - 1, order)
    for lev in range(min_level, max_level + 1):
        cur = _area_level(f, R, sectors, lev, order)
        change = abs(cur - prev)
        if change <= tol:
            return cur
        prev = cur
    raise QuadratureToleranceError(
        f"area quadrature did not reach tol={tol:g} (last change {change:.3e})", cur, change)


def chord_length(v, r: float):
    """R(theta): distance from the point v (|v| < r) to the circle |z| = r along theta."""
    vx, vy = float(v[0]), float(v[1])
    vv = vx * vx + vy * vy
    if vv >= r * r:
        raise ValueError("expansion point must lie inside the disk")

    def R(th):
        b = vx * np.cos(th) + vy * np.sin(th)
        return -b + np.sqrt(b * b - vv + r * r)

    return R


def ray_crossings(v, angles, r: float):
    """Polar angles (about 0) where rays from v at the given angles cross |z| = r."""
    R = chord_length(v, r)
    out = []
    for a in angles:
        t = float(R(np.asarray(a, float)))
        out.append(float(np.arctan2(v[1] + t * np.sin(a), v[0] + t * np.cos(a))) % TWO_PI)
    return out


def circle_integral(f, r: float, th0: float = 0.0, th1: float = TWO_PI, breaks=(),
                    tol: float = 1e-10, order: int = 8, max_level: int = 10,
                    level: int | None = None) -> float:
    """Arc-length integral of f over {|z| = r, th0 < theta < th1}."""
    full = abs((th1 - th0) - TWO_PI) < 1e-14
    sectors = angular_sectors(th0, th1, breaks)
    if level is not None:
        cur = 0.0
        for a, b in sectors:
            th, wt = gauss_panels(a, b, 2**level, order)
            cur += float(np.dot(f(r * np.cos(th), r * np.sin(th)), wt)) * r
        return cur
    if full and len(sectors) == 1:
        # periodic trapezoid
        prev = None
        for level in range(3, max_level + 6):
            n = 2**level
            th = th0 + TWO_PI * np.arange(n) / n
            cur = float(np.sum(f(r * np.cos(th), r * np.sin(th)))) * TWO_PI / n * r
            change = np.inf if prev is None else abs(cur - prev)
            if change <= tol:
                return cur
            prev = cur
        raise QuadratureToleranceError("circle quadrature did not converge", cur, change)
    prev = None
    for level in range(0, max_level + 1):
        cur = 0.0
        for a, b in sectors:
            th, wt = gauss_panels(a, b, 2**level, order)
            cur += float(np.dot(f(r * np.cos(th), r * np.sin(th)), wt)) * r
        change = np.inf if prev is None else abs(cur - prev)
        if change <= tol:
            return cur
        prev = cur
    raise QuadratureToleranceError("arc quadrature did not converge", cur, change)


def disk_integral_cut(f, plus, R: float, th0: float = 0.0, th1: float = TWO_PI,
                      base=(16, 64), max_depth: int = 12, order: int = 4) -> float:
    """Area integral when the phase boundary is only known through ``plus``.

    Cells in (s, theta) whose 3x3 phase probes disagree are split into four,
    recursively, up to ``max_depth``; leftover cut cells fall back to a
    midpoint rule.  All other cells get a tensor Gauss rule of ``order``.
    """
    x, w = _gauss(order)
    ns, nt = base
    s_edges = np.linspace(0.0, 1.0, ns + 1)
    t_edges = np.linspace(th0, th1, nt + 1)
    S0, T0 = np.meshgrid(s_edges[:-1], t_edges[:-1], indexing="ij")
    cells = np.stack([S0.ravel(), T0.ravel()], axis=1)
    hs, ht = 1.0 / ns, (th1 - th0) / nt
    total = 0.0
    probe = np.array([0.02, 0.5, 0.98])
    for depth in range(max_depth + 1):
        if cells.size == 0:
            break
        ps = cells[:, :1] + hs * probe[None, :]
        pt = cells[:, 1:] + ht * probe[None, :]
        PS = np.repeat(ps, 3, axis=1)
        PT = np.tile(pt, (1, 3))
        rr = R * PS * PS
        lab = np.asarray(plus(rr * np.cos(PT), rr * np.sin(PT)), bool)
        mixed = lab.any(axis=1) & ~lab.all(axis=1)
        last = depth == max_depth
        done = cells[~mixed] if not last else cells
        if done.size:
            if last and np.any(mixed):
                # midpoint fallback for unresolved cut cells
                cut = cells[mixed]
                sm = cut[:, 0] + 0.5 * hs
                tm = cut[:, 1] + 0.5 * ht
                rm = R * sm * sm
                total += float(np.sum(f(rm * np.cos(tm), rm * np.sin(tm))
                                      * 2 * R * R * sm**3) * hs * ht)
                done = cells[~mixed]
            sn = done[:, :1] + 0.5 * hs * (1 + x[None, :])
            tn = done[:, 1:] + 0.5 * ht * (1 + x[None, :])
            SS = np.repeat(sn, order, axis=1)
            TT = np.tile(tn, (1, order))
            W = np.outer(w, w).ravel()[None, :] * 0.25 * hs * ht
            rr = R * SS * SS
            vals = f(rr * np.cos(TT), rr * np.sin(TT))
            total += float(np.sum(vals * 2 * R * R * SS**3 * W))
        if last:
            break
        cut = cells[mixed]
        hs, ht = 0.5 * hs, 0.5 * ht
        cells = np.concatenate([cut, cut + [hs, 0], cut + [0, ht], cut + [hs, ht]])
    return total


def _graph_level(f, r, eta, half, level, order):
    # x = r cos(t) removes the square-root endpoints of the chord
    t, wt = gauss_panels(0.0, np.pi, 2**level, order)
    x = r * np.cos(t)
    wx = r * np.sin(t) * wt
    h = r * np.sin(t)
    top = np.zeros_like(h) if half else h
    e = np.clip(np.asarray(eta(x), float), -h, top)
    s, ws = gauss_panels(0.0, 1.0, 2**level, order)
    total = 0.0
    for a, b in ((-h, e), (e, top)):
        L = b - a
        Y = a[:, None] + L[:, None] * s[None, :]
        W = (wx * L)[:, None] * ws[None, :]
        X = np.broadcast_to(x[:, None], Y.shape)
        total += float(np.sum(W * f(X, Y)))
    return total


def graph_split_integral(f, r: float, eta, half: bool = False, tol: float = 1e-10,
                         order: int = 8, max_level: int = 6, level: int | None = None) -> float:
    """Integral of f over B_r (or its lower half) split along the graph y = eta(x).

    Each vertical chord is cut where it meets the graph, so integrands that
    jump across it are integrated piecewise smoothly.
    """
    if level is not None:
        return _graph_level(f, r, eta, half, level, order)
    prev = _graph_level(f, r, eta, half, 0, order)
    for lev in range(1, max_level + 1):
        cur = _graph_level(f, r, eta, half, lev, order)
        change = abs(cur - prev)
        if change <= tol:
            return cur
        prev = cur
    raise QuadratureToleranceError(
        f"graph-split quadrature did not reach tol={tol:g} (last change {change:.3e})",
        cur, change)
