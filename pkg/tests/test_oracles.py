from fractions import Fraction

import numpy as np
import pytest

from internal_bores import oracles
from internal_bores.params import (FluidPair, conjugate_downstream, flow_force,
                                   layered_flow_force)

SQ2_3 = np.sqrt(2) / 3


def _away_from_rays(f, n, rng, R=2.0, gap=0.05):
    z = rng.uniform(-R, R, size=(4 * n, 2))
    th = np.arctan2(z[:, 1], z[:, 0]) % (2 * np.pi)
    ok = np.hypot(z[:, 0], z[:, 1]) > 0.05
    for a in f.ray_angles():
        d = np.abs((th - a + np.pi) % (2 * np.pi) - np.pi)
        ok &= d > gap
    return z[ok][:n]


FIELDS = [oracles.stokes_corner(), oracles.stokes_corner(Fraction(1, 6)),
          oracles.rotated(oracles.stokes_corner(), 0.3), oracles.cone_harmonic(1.25),
          oracles.perturbed(oracles.stokes_corner(), 0.1, "cubic"),
          oracles.shifted(oracles.stokes_corner(), 0.1), oracles.linear(0.3, -1.0)]


@pytest.mark.parametrize("f", FIELDS, ids=lambda f: f.name)
def test_gradient_matches_finite_differences(f):
    rng = np.random.default_rng(1)
    z = _away_from_rays(f, 200, rng)
    if f.meta.get("vertex"):
        # shifted fields have rays through the vertex; keep clear of them too
        vx, vy = f.meta["vertex"]
        th = np.arctan2(z[:, 1] - vy, z[:, 0] - vx) % (2 * np.pi)
        ok = np.ones(len(z), bool)
        for a in f.ray_angles():
            ok &= np.abs((th - a + np.pi) % (2 * np.pi) - np.pi) > 0.05
        z = z[ok]
    x, y = z[:, 0], z[:, 1]
    h = 1e-6
    fx = (f(x + h, y) - f(x - h, y)) / (2 * h)
    fy = (f(x, y + h) - f(x, y - h)) / (2 * h)
    gx, gy = f.gradient(x, y)
    assert np.max(np.abs(fx - gx)) < 1e-8
    assert np.max(np.abs(fy - gy)) < 1e-8


def test_stokes_corner_values():
    ub = oracles.stokes_corner()
    assert ub(0.0, -1.0) == pytest.approx(-SQ2_3, abs=1e-15)
    th = 7 * np.pi / 6
    assert abs(ub(np.cos(th) * 0.7, np.sin(th) * 0.7)) < 1e-15


def test_stokes_corner_jump_condition():
    ub = oracles.stokes_corner()
    r = 0.37
    gx, gy = ub.gradient(r * np.cos(-np.pi / 2 + 0.2), r * np.sin(-np.pi / 2 + 0.2))
    assert gx**2 + gy**2 == pytest.approx(r / 2, rel=1e-13)
    for th in (7 * np.pi / 6, 11 * np.pi / 6):
        # approach the ray from inside the support
        t = th + (1e-9 if th < 1.5 * np.pi else -1e-9)
        x, y = r * np.cos(t), r * np.sin(t)
        gx, gy = ub.gradient(x, y)
        assert gx**2 + gy**2 == pytest.approx(-y, rel=1e-7)


@pytest.mark.parametrize("f", [oracles.stokes_corner(), oracles.stokes_corner(Fraction(1, 3)),
                               oracles.cone_harmonic(1.25)], ids=lambda f: f.name)
def test_homogeneity(f):
    rng = np.random.default_rng(2)
    z = rng.uniform(-1, 1, size=(100, 2))
    r = rng.uniform(0.1, 3.0, size=100)
    d = f.degree
    assert np.allclose(f(r * z[:, 0], r * z[:, 1]), r**d * f(z[:, 0], z[:, 1]),
                       atol=1e-12, rtol=0)


def test_rotation_by_fraction_moves_rays():
    f = oracles.stokes_corner(Fraction(1, 6))
    assert sorted(f.ray_angles()) == pytest.approx([0.0, 4 * np.pi / 3])
    assert f(1.0, -1e-3) < 0 and f(1.0, 1e-3) == 0.0


def test_laminar_wall_values():
    fl = FluidPair(4.0, 1.0)
    lam = 0.4
    f = oracles.laminar(fl, lam)
    assert f(0.0, -lam) == pytest.approx(lam * 2.0)
    assert f(3.0, 1 - lam) == pytest.approx(-(1 - lam) * 1.0)


def test_dynamic_residual_sign_flip():
    fl = FluidPair(4.0, 1.0)
    Hd = conjugate_downstream(fl)
    assert abs(oracles.laminar_dynamic_residual(fl, Hd)) < 1e-14
    lams = np.linspace(0.1, 0.9, 33)
    res = np.array([oracles.laminar_dynamic_residual(fl, l) for l in lams])
    assert np.all(np.sign(res[lams < Hd - 1e-9]) == -np.sign(res[lams > Hd + 1e-9][0]))


def test_conjugate_profiles():
    fl = FluidPair(4.0, 1.0)
    lam = 0.45
    up, down = oracles.conjugate_profiles(fl, lam)
    Hd = conjugate_downstream(fl)
    yi = Hd - lam
    assert abs(down(0.0, yi)) < 1e-15
    gy = down.grad(0.0, yi - 0.1)[1]
    assert gy == pytest.approx(-(lam / Hd) * 2.0)
    forces = []
    for f, H in ((up, lam), (down, Hd)):
        y = np.union1d(np.linspace(-lam, 1 - lam, 2001), [H - lam])
        gx, gy = f.grad(np.zeros_like(y), y)
        forces.append(flow_force(y, gy, gx, f.lower(0.0, y), fl, lam))
        assert forces[-1] == pytest.approx(layered_flow_force(fl, lam, H), abs=1e-10)
    assert forces[0] == pytest.approx(forces[1], abs=1e-10)
