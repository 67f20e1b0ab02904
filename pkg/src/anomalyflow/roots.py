"""Solving ``phi ^ omega^{m-2} = Phi`` for a (1,1)-form, and the closed-form star.

Both the solver and the star reduce to one metric contraction of the pair
tensor of ``Phi`` plus a trace correction; no permutation sums are needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .forms import (FormPQ, HermitianPointMetric, hodge_star_eps, inner, omega_form,
                    omega_power, pair_contract, trace_p)


@dataclass(frozen=True)
class RootConstants:
    """Contraction constants of the root equation in dimension ``m``.

    ``alpha`` multiplies the solution and ``beta`` its trace in the contracted
    equation; ``alpha + m * beta == (m-1)!**2`` holds exactly.
    """

    m: int
    alpha_exact: Fraction
    beta_exact: Fraction

    @property
    def alpha_m(self) -> float:
        return float(self.alpha_exact)

    @property
    def beta_m(self) -> float:
        return float(self.beta_exact)


def root_constants(m: int) -> RootConstants:
    """Closed-form constants ``(m-1)!(m-2)!(m-1-m^2/6)`` and ``m!(m-2)!/6``."""
    if m < 2:
        raise ValueError("dimension must be at least 2")
    f = math.factorial
    alpha = Fraction(f(m - 1) * f(m - 2)) * (Fraction(m - 1) - Fraction(m * m, 6))
    beta = Fraction(f(m) * f(m - 2), 6)
    return RootConstants(m, alpha, beta)


def _contraction_constants(m: int) -> tuple[Fraction, Fraction]:
    # The closed form counts m-2 trace-producing terms out of a product of
    # m-2 metric factors; with no factors at all (m = 2) the equation is
    # phi = Phi, so the effective pair is (1, 0).
    if m == 2:
        return Fraction(1), Fraction(0)
    c = root_constants(m)
    return c.alpha_exact, c.beta_exact


def _check(Phi: FormPQ, g: HermitianPointMetric):
    m = g.m
    if Phi.m != m or Phi.p != m - 1 or Phi.q != m - 1:
        raise ValueError(f"expected an ({m - 1},{m - 1})-form in dimension {m}")


def _reduced(Phi: FormPQ, g: HermitianPointMetric) -> np.ndarray:
    """``i^{-(m-2)}`` times the pair tensor contracted down to one index pair."""
    return (1j) ** (-(g.m - 2)) * pair_contract(Phi, g, keep=1)


def _as_11(t: np.ndarray, m: int) -> FormPQ:
    # (1,1) components phi[kbar, j] stored as data[j, k]
    return FormPQ(m, 1, 1, np.ascontiguousarray(t.T))


def solve_root(Phi: FormPQ, g: HermitianPointMetric) -> FormPQ:
    """Unique (1,1)-form ``phi`` with ``phi ^ omega^{m-2} = Phi``."""
    _check(Phi, g)
    m = g.m
    alpha, beta = _contraction_constants(m)
    tr = trace_p(Phi, g)
    t = (_reduced(Phi, g) - float(beta) / math.factorial(m - 1) ** 2 * tr * 1j * g.g) / float(alpha)
    return _as_11(t, m)


def solve_root_star(Phi: FormPQ, g: HermitianPointMetric) -> FormPQ:
    """Same solution through the permutation-sign Hodge star."""
    _check(Phi, g)
    m = g.m
    w = omega_form(g)
    proj = inner(Phi, omega_power(g, m - 1), g) / math.factorial(m - 1) ** 2
    return -hodge_star_eps(Phi, g) / math.factorial(m - 2) + w * proj


def hodge_star_closed(Phi: FormPQ, g: HermitianPointMetric) -> FormPQ:
    """Hodge star of an (m-1,m-1)-form from one contraction and the trace."""
    _check(Phi, g)
    m = g.m
    alpha, beta = _contraction_constants(m)
    tr = trace_p(Phi, g)
    t = -_reduced(Phi, g) / float(alpha) \
        + float(1 + beta / alpha) * tr / math.factorial(m - 1) ** 2 * 1j * g.g
    return _as_11(math.factorial(m - 2) * t, m)
