import numpy as np
import pytest

from anomalyflow.geometry import (Geometry, MetricJet, adjoint_residual, balanced_residual,
                                  bianchi_residuals, commutation_residuals,
                                  ddbar_contraction_residual, delta_torsion_residual,
                                  lemma5_residuals, localomega_residual, rescale_balanced,
                                  ricci_scalar_residuals)
from anomalyflow.jets import Jet


def _assert_passed(rep):
    assert rep.passed, "\n".join(rep.lines())


def test_flat_metric_has_no_curvature_or_torsion(full_space):
    flat = MetricJet.constant(np.eye(3, dtype=complex)[None], 3, full_space)
    geo = Geometry(flat)
    assert np.abs(geo.R.value).max() == 0
    assert np.abs(geo.T.value).max() == 0
    assert abs(geo.omega_norm.value[0] - 1) < 1e-15


def test_kahler_metric_is_torsion_free(kahler_jet):
    geo = Geometry(kahler_jet)
    assert np.abs(geo.T.value).max() < 1e-12
    # Kähler curvature has the extra symmetry R_{kbar j pbar q} = R_{kbar q pbar j}
    R = geo.R.value
    assert np.abs(R - np.swapaxes(R, -3, -1)).max() < 1e-11


def test_hermitian_identities(hermitian_jet, rng):
    geo = Geometry(hermitian_jet)
    assert np.abs(geo.T.value).max() > 1e-3  # genuinely non-Kähler
    n = hermitian_jet.g.batch_shape[0]
    ncoef = hermitian_jet.g.c.shape[0]
    vec = Jet(rng.normal(size=(ncoef, n, 3)) + 0j, 4, hermitian_jet.space, 1)
    scal = Jet(rng.normal(size=(ncoef, n)) + 0j, 4, hermitian_jet.space, 0)
    for rep in (ricci_scalar_residuals(hermitian_jet, geo),
                commutation_residuals(hermitian_jet, vec, scal, geo),
                bianchi_residuals(hermitian_jet, geo),
                localomega_residual(hermitian_jet, geo),
                delta_torsion_residual(hermitian_jet, geo),
                adjoint_residual(hermitian_jet, geo)):
        _assert_passed(rep)


def test_flipped_torsion_sign_breaks_bianchi(hermitian_jet):
    rep = bianchi_residuals(hermitian_jet, torsion_sign=-1.0)
    assert "bianchi1" in rep.failures()


def test_balanced_rescale_and_its_identities(kahler_jet):
    mb = rescale_balanced(kahler_jet, 1.0)
    geo = Geometry(mb)
    assert np.abs(geo.T.value).max() > 1e-4
    for rep in (balanced_residual(mb, 1.0, geo), lemma5_residuals(mb, 1.0, geo),
                ddbar_contraction_residual(mb, geo)):
        _assert_passed(rep)


def test_balanced_identities_flag_unbalanced_input(hermitian_jet):
    rep = lemma5_residuals(hermitian_jet)
    assert "precondition not met" in rep.entries["ricci_prime"].note
    assert not balanced_residual(hermitian_jet).passed


def test_rescale_rejects_degenerate_exponent(kahler_jet):
    # m - 1 - a m / 2 vanishes at a = 4/3 for m = 3
    with pytest.raises(ValueError):
        rescale_balanced(kahler_jet, 4.0 / 3.0)


def test_norm_of_omega_is_inverse_sqrt_det(hermitian_jet):
    geo = Geometry(hermitian_jet)
    det = np.linalg.det(hermitian_jet.g.value).real
    np.testing.assert_allclose(geo.omega_norm.value.real, det ** -0.5, rtol=1e-13)
