import math

import numpy as np
import pytest

from anomalyflow.forms import (FormPQ, HermitianPointMetric, from_pair, hodge_star_eps, inner,
                               norm_Omega, norm_Omega_oracle, omega_form, omega_power, to_pair,
                               trace_p, wedge)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_wedge_associative_and_graded(m, rng):
    a = FormPQ.random(m, 1, 0, rng)
    b = FormPQ.random(m, 0, 1, rng)
    c = FormPQ.random(m, 1, 1, rng)
    assert (wedge(wedge(a, b), c) - wedge(a, wedge(b, c))).max_abs() < 1e-12
    # two odd forms anticommute
    assert (wedge(a, b) + wedge(b, a)).max_abs() < 1e-12
    assert wedge(a, a).max_abs() < 1e-12


def test_from_components_sign_and_comp(rng):
    f = FormPQ.from_components(3, 1, 1, {((1,), (0,)): 2.0})
    assert f.comp((1,), (0,)) == 2.0
    g2 = FormPQ.from_components(3, 2, 0, {((1, 0), ()): 1.0})
    assert g2.comp((0, 1), ()) == -1.0
    assert g2.comp((1, 1), ()) == 0


def test_omega_power_top_degree_is_volume():
    g = HermitianPointMetric(np.diag([1.0, 2.0, 3.0]).astype(complex))
    top = omega_power(g, 3)
    # omega^m / m! has coefficient i^m (-1)^{m(m-1)/2} det g on dz^{123} ^ dzbar^{123}
    coeff = top.basis()[0, 0] / math.factorial(3)
    assert abs(coeff - (1j) ** 3 * (-1) * 6.0) < 1e-12


@pytest.mark.parametrize("m", [2, 3, 4])
def test_pair_roundtrip(m, rng):
    f = FormPQ.random(m, 2, 2, rng)
    back = from_pair(to_pair(f), m, 2)
    assert (back - f).max_abs() < 1e-14


@pytest.mark.parametrize("m", [2, 3, 4])
def test_star_is_isometry_and_involution_up_to_sign(m, rng):
    g = HermitianPointMetric.random(m, rng)
    a = FormPQ.random(m, 1, 1, rng)
    star = hodge_star_eps(a, g)
    assert abs(inner(star, star, g) - inner(a, a, g)) < 1e-10 * abs(inner(a, a, g))
    twice = hodge_star_eps(star, g)
    # (1,1)-forms have even total degree, so star star = +1
    assert (twice - a).max_abs() < 1e-10


def test_trace_of_omega_power():
    g = HermitianPointMetric.flat(3)
    # Tr(omega^2) = m! (m-1)! at m = 3
    assert abs(trace_p(omega_power(g, 2), g) - 12) < 1e-12
    assert abs(trace_p(omega_form(g), g) - 3) < 1e-12


def test_norm_omega_routes_agree(rng):
    for m in (2, 3, 4):
        g = HermitianPointMetric.random(m, rng)
        assert abs(norm_Omega(g) - norm_Omega_oracle(g)) < 1e-12


def test_metric_validation():
    with pytest.raises(ValueError):
        HermitianPointMetric(np.array([[1, 1j], [0, 1]]))
    with pytest.raises(ValueError):
        HermitianPointMetric(-np.eye(2))
    with pytest.raises(ValueError):
        FormPQ(3, 1, 1, np.zeros((2, 2)))
