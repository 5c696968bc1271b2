from fractions import Fraction

import numpy as np
import pytest

from internal_bores import oracles
from internal_bores.continuation import seed_bore
from internal_bores.diagnostics import (PreconditionError, QuadratureToleranceError,
                                        SampledField, acf_phi, blowup_sample, chord_length,
                                        circle_integral, disk_integral, energy_bound_check,
                                        functional_AB, gc_M, geometric_radii,
                                        monotone_violations, oddson_check, phase_parts,
                                        poincare_exponents, random_bumps,
                                        residual_convergence, variational_residual, weiss_M)
from internal_bores.diagnostics.functionals import FunctionalTrace
from internal_bores.djsolver import BoreField
from internal_bores.params import FluidPair, FrontConfig

UB = oracles.stokes_corner()
S3 = 1 / np.sqrt(3)


# -- quadrature ---------------------------------------------------------------

def test_disk_integral_polynomial():
    assert disk_integral(lambda x, y: x * x + y * y, 1.0) == pytest.approx(np.pi / 2, abs=1e-14)
    assert disk_integral(lambda x, y: np.ones_like(x), 0.3, np.pi, 2 * np.pi) == \
        pytest.approx(np.pi * 0.09 / 2, abs=1e-14)


def test_circle_integral():
    assert circle_integral(lambda x, y: x * x, 2.0) == pytest.approx(4 * np.pi * 2, abs=1e-12)


def test_disk_integral_with_breaks_is_exact_on_kinks():
    f = lambda x, y: np.abs(y)  # kink along theta = 0, pi
    got = disk_integral(f, 1.0, breaks=(0.0, np.pi))
    assert got == pytest.approx(4 / 3, abs=1e-13)


def test_quadrature_tolerance_error():
    with pytest.raises(QuadratureToleranceError):
        disk_integral(lambda x, y: np.abs(x - 0.123) ** 0.5, 1.0, tol=1e-15, max_level=2)


def test_chord_length():
    assert chord_length((0.0, 0.0), 1.0)(0.3) == pytest.approx(1.0)
    assert chord_length((0.5, 0.0), 1.0)(0.0) == pytest.approx(0.5)


# -- Weiss and A/B ------------------------------------------------------------

def test_weiss_constant_on_stokes_corner():
    tr = weiss_M(UB, geometric_radii(0.9, 9))
    # frozen from the first evaluation; equals 1/sqrt(3) to round-off
    assert np.allclose(tr.values, 0.5773502691896257, atol=1e-13)
    assert np.max(tr.identity_residual) < 1e-10


def test_weiss_identity_on_shifted_corner():
    tr = weiss_M(oracles.shifted(UB, 0.1), geometric_radii(0.9, 6))
    assert np.max(tr.identity_residual) < 1e-4
    assert np.all(np.diff(tr.values) <= 1e-12)


def test_weiss_rejects_half_disks_and_big_radii():
    with pytest.raises(ValueError):
        weiss_M(SampledField.from_exact(UB, half=True), [0.5])
    with pytest.raises(ValueError):
        weiss_M(UB, [1.0])


def test_functional_AB_on_stokes_corner():
    r = geometric_radii(0.9, 5)
    A, B = functional_AB(UB, r)
    assert np.max(np.abs(A.values)) < 1e-15
    assert np.allclose(B.values / r, 0.2886751345948129, atol=1e-14)
    assert np.max(A.identity_residual) < 1e-12 and np.max(B.identity_residual) < 1e-12


def test_trace_rejects_unsorted_radii():
    with pytest.raises(ValueError):
        FunctionalTrace("x", [0.1, 0.2], [1, 2], [0, 0])


def test_trace_csv(tmp_path):
    tr = weiss_M(UB, geometric_radii(0.9, 3))
    tr.to_csv(tmp_path / "m.csv")
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0] == "r,value,derivative_estimate,identity_residual"
    assert len(lines) == 4


# -- energy bound -------------------------------------------------------------

def test_energy_bound_equality_on_linear():
    eb = energy_bound_check(oracles.linear(0.0, 1.0), geometric_radii(0.9, 5), 0.0)
    assert eb.passed and abs(eb.min_margin) < 1e-12


def test_energy_bound_rejects_stokes_corner():
    with pytest.raises(PreconditionError, match="changes sign"):
        energy_bound_check(UB, geometric_radii(0.9, 3), np.sqrt(3))


def test_energy_bound_stokes_corner_values():
    r = geometric_radii(0.9, 3)
    eb = energy_bound_check(UB, r, np.sqrt(3), check=False)
    assert np.allclose(eb.lhs / r, 0.34906585039886595, atol=1e-13)
    assert np.allclose(eb.rhs / r, 0.28867513459481314, atol=1e-13)
    assert not eb.passed


def test_monotone_violations_lipschitz():
    f = SampledField.from_exact(oracles.linear(3.0, 1.0))
    assert any("|u_x| >" in m for m in monotone_violations(f, 2.0))
    assert monotone_violations(f, 3.0) == []


# -- gravity-current functional -----------------------------------------------

def _half(f, Q=0.0):
    return SampledField.from_exact(f, half=True, Q=Q).with_densities(1.0, 2.0)


@pytest.mark.parametrize("f,want", [
    (oracles.zero_field(False), 4 / 3),
    (oracles.zero_field(True), 2 / 3),
    (UB, 2 / 3 - S3 + 2 * S3),
    (oracles.stokes_corner(Fraction(1, 6)), 1 / 6 + 1.0),
], ids=["minus", "plus", "stokes", "stokes_rot30"])
def test_gc_density_values(f, want):
    tr = gc_M(_half(f), geometric_radii(0.9, 4))
    assert np.allclose(tr.values, want, atol=1e-9)
    assert tr.meta["regime"] == "Q=0"


@pytest.mark.parametrize("plus,rho", [(False, 2.0), (True, 1.0)])
def test_gc_q_values(plus, rho):
    tr = gc_M(_half(oracles.zero_field(plus), Q=-0.3), geometric_radii(0.9, 4))
    assert np.allclose(tr.values, 0.3 * rho * np.pi / 2, atol=1e-9)
    assert tr.meta["regime"] == "Q!=0"


def test_gc_rejects_positive_field():
    with pytest.raises(PreconditionError):
        gc_M(_half(oracles.linear(0.0, -1.0)), [0.5])


# -- ACF ------------------------------------------------------------------------

def test_acf_linear_pair_constant():
    y = oracles.linear(0.0, 1.0)
    tr = acf_phi(oracles.positive_part(y, 1), oracles.positive_part(y, -1),
                 geometric_radii(0.9, 6))
    assert np.allclose(tr.values, np.pi**2 / 4, atol=1e-10)
    assert tr.meta["violations"] == []


def test_acf_checks_supports():
    y = oracles.linear(0.0, 1.0)
    with pytest.raises(PreconditionError):
        acf_phi(oracles.positive_part(y, 1), oracles.positive_part(y, 1), [0.5])


def test_phase_parts_of_stokes_corner():
    up, um = phase_parts(SampledField.from_exact(UB))
    tr = acf_phi(up, um, geometric_radii(0.9, 4))
    assert np.allclose(tr.values, 0.0, atol=1e-15)


# -- blowups, cones ------------------------------------------------------------

def test_blowup_of_homogeneous_field_is_itself():
    f, lip = blowup_sample(UB, 0.25)
    rng = np.random.default_rng(3)
    z = rng.uniform(-0.7, 0.7, size=(50, 2))
    assert np.allclose(f.u(z[:, 0], z[:, 1]), UB(z[:, 0], z[:, 1]), atol=1e-14)
    assert lip == pytest.approx(np.sqrt(0.5), rel=0.05)


def test_oddson_constants():
    h = oracles.cone_harmonic(1.25)
    assert oddson_check(h, 1.25, 1.0) == pytest.approx(1.0, abs=1e-12)
    assert oddson_check(h.scaled(2.0), 1.25, 1.0) == pytest.approx(2.0, abs=1e-12)
    with pytest.raises(PreconditionError):
        oddson_check(UB.scaled(-1.0), 1.25, 1.0)


def test_poincare_exponents():
    out = poincare_exponents(UB, 1.25, 1.0, geometric_radii(1.0, 12))
    assert out["energy_exponent"] == pytest.approx(1.0, abs=1e-10)
    assert out["bound_exponent"] == pytest.approx(0.5, abs=1e-10)


# -- variational residual -------------------------------------------------------

def test_bumps_vanish_on_circle_and_contain_origin():
    for b in random_bumps(5, seed=4):
        th = np.linspace(0, 2 * np.pi, 100)
        p1, p2 = b(np.cos(th), np.sin(th))
        assert np.max(np.hypot(p1, p2)) == 0.0
        assert np.hypot(*b.c) < b.s


def test_bump_jacobian():
    b = random_bumps(1, seed=5, half=True)[0]
    x, y, h = 0.1, -0.2, 1e-6
    (a11, a12), (a21, a22) = b.jacobian(x, y)
    d1 = (np.array(b(x + h, y)) - np.array(b(x - h, y))) / (2 * h)
    d2 = (np.array(b(x, y + h)) - np.array(b(x, y - h))) / (2 * h)
    assert np.allclose([a11, a21], d1, atol=1e-8)
    assert np.allclose([a12, a22], d2, atol=1e-8)


def test_residual_of_linear_solution_vanishes():
    y = oracles.linear(0.0, 1.0).with_densities(0.0, 0.0)
    res = variational_residual(y, random_bumps(3, seed=1))
    assert np.max(np.abs(res)) < 1e-12


def test_residual_converges_on_stokes_corner():
    out = residual_convergence(UB, random_bumps(2, seed=0), levels=(2, 3, 4, 5))
    err = np.abs(out["residuals"])
    assert np.all(err[-1] < 1e-7)
    assert np.all(err[-1] < err[0] * 1e-3)


def test_residual_rejects_unsupported_test_field():
    from internal_bores.diagnostics import Bump
    with pytest.raises(PreconditionError):
        variational_residual(UB, [Bump((0.9, 0.0), 0.5, 1.0, 0.0)])


# -- bore fields ------------------------------------------------------------------

@pytest.fixture(scope="module")
def bore():
    st = seed_bore("elev", FrontConfig(0.6, FluidPair(4.0, 1.0), nq=81, np1=11, np2=11))
    return BoreField(st)


def test_bore_field_area_and_labels(bore):
    f = SampledField.from_bore(bore, (0.0, float(bore.eta(0.0))), 0.2)
    assert f.area(lambda x, y: np.ones_like(x), 0.2, tol=1e-10) == pytest.approx(
        np.pi * 0.04, rel=1e-12)
    assert bool(f.plus(0.0, 0.1)) and not bool(f.plus(0.0, -0.1))


def test_bore_field_leaving_channel_rejected(bore):
    with pytest.raises(PreconditionError):
        SampledField.from_bore(bore, (0.0, 0.0), 0.9)


def test_bore_energy_bound_and_acf(bore):
    f = SampledField.from_bore(bore, (0.0, float(bore.eta(0.0))), 0.1)
    r = geometric_radii(0.1, 5)
    eb = energy_bound_check(f, r, 2.0, tol=1e-6)
    assert eb.passed
    up, um = phase_parts(f)
    tr = acf_phi(up, um, r, tol=1e-6)
    assert tr.meta["violations"] == []


# -- further closed-form cases ------------------------------------------------------

def test_AB_on_simple_fields():
    r = geometric_radii(0.9, 4)
    A, B = functional_AB(oracles.linear(0.0, 1.0), r)
    assert np.allclose(A.values, 0.0, atol=1e-15) and np.allclose(B.values, np.pi, atol=1e-13)
    xy = oracles.from_functions(lambda x, y: x * y, lambda x, y: (y, x),
                                rays=(0.0, np.pi / 2, np.pi, 1.5 * np.pi), name="xy")
    A, B = functional_AB(xy, r)
    assert np.allclose(A.values, 0.0, atol=1e-14) and np.allclose(B.values, 0.0, atol=1e-14)


def test_energy_bound_rejects_x():
    with pytest.raises(PreconditionError, match="u_x"):
        energy_bound_check(oracles.linear(1.0, 0.0), [0.5], 10.0)


def test_acf_with_zero_factor():
    um = oracles.positive_part(UB, -1)
    tr = acf_phi(um, oracles.zero_field(), geometric_radii(0.9, 4))
    assert np.all(tr.values == 0.0)


def test_gc_blowup_of_linear_field():
    f = SampledField.from_exact(oracles.linear(0.0, 0.7), half=True, Q=-0.3)
    out, lip = blowup_sample(f, 0.2, regime="gc")
    x, y = np.array([0.3, -0.5]), np.array([-0.2, -0.6])
    assert np.allclose(out.u(x, y), 0.7 * y, atol=1e-15)
    assert lip == pytest.approx(0.7)
