import numpy as np
import pytest

from internal_bores.params import (FluidPair, FrontConfig, ParameterError, conjugate_downstream,
                                   conjugate_residuals, conjugate_roots, flow_force,
                                   front_froude, laminar_profile, layered_flow_force,
                                   upstream_flow_force)


def test_froude_and_downstream_closed_forms():
    fl = FluidPair(4.0, 1.0)
    assert front_froude(fl) == pytest.approx(1 / 3, abs=1e-15)
    assert conjugate_downstream(fl) == pytest.approx(2 / 3, abs=1e-15)


def test_boussinesq_froude_is_zero():
    fl = FluidPair.boussinesq_pair(1.0)
    assert front_froude(fl) == 0.0
    assert conjugate_downstream(fl) == 0.5


@pytest.mark.parametrize("r1,r2,bq", [(1.0, 1.0, False), (1.0, 2.0, False),
                                      (2.0, 1.0, True), (-1.0, -2.0, False)])
def test_bad_pairs_rejected(r1, r2, bq):
    with pytest.raises(ParameterError):
        FluidPair(r1, r2, bq)


def test_front_config_validation():
    fl = FluidPair(4.0, 1.0)
    with pytest.raises(ParameterError):
        FrontConfig(1.2, fl)
    with pytest.raises(ParameterError):
        FrontConfig(0.5, fl, nq=2)
    c = FrontConfig(0.4, fl)
    assert c.h2 == pytest.approx(0.6)
    assert c.with_lambda(0.7).lam == 0.7


@pytest.mark.parametrize("lam", [0.3, 0.5, 0.8])
def test_conjugate_roots_recovers_both(lam):
    fl = FluidPair(4.0, 1.0)
    roots = np.sort(conjugate_roots(fl, lam))
    want = np.sort([lam, conjugate_downstream(fl)])
    assert np.allclose(roots, want, atol=1e-10)


def test_conjugate_residuals_vanish_at_roots():
    fl = FluidPair(9.0, 1.0)
    lam = 0.45
    ff, jump = conjugate_residuals(fl, lam, conjugate_downstream(fl))
    assert abs(ff) < 1e-12 and abs(jump) < 1e-12


def test_layered_flow_force_upstream():
    fl = FluidPair(4.0, 1.0)
    for lam in (0.2, 0.6):
        assert layered_flow_force(fl, lam, lam) == pytest.approx(
            upstream_flow_force(fl, lam), abs=1e-13)


def test_flow_force_quadrature_matches_layered():
    fl = FluidPair(4.0, 1.0)
    lam, H = 0.5, 2 / 3
    y = np.linspace(-lam, 1 - lam, 4001)
    yi = H - lam
    y = np.union1d(y, [yi])
    psi, psi_y = laminar_profile(fl, lam, H, y)
    S = flow_force(y, psi_y, np.zeros_like(y), y <= yi, fl, lam)
    assert S == pytest.approx(layered_flow_force(fl, lam, H), abs=1e-8)
