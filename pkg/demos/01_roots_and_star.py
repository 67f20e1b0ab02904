"""Recovering a (1,1)-form from its wedge with omega^{m-2}, and the Hodge star.

Run:  python demos/01_roots_and_star.py
"""

import math

import numpy as np

from anomalyflow import (FormPQ, HermitianPointMetric, hodge_star_closed, hodge_star_eps,
                         omega_form, omega_power, root_constants, solve_root, wedge)

rng = np.random.default_rng(0)

print("contraction constants (exact rationals); at m=2 the solver uses phi = Phi directly")
for m in range(2, 7):
    c = root_constants(m)
    print(f"  m={m}: alpha={c.alpha_exact}, beta={c.beta_exact}, "
          f"alpha + m beta = {c.alpha_exact + m * c.beta_exact} = ({m - 1}!)^2 = {math.factorial(m - 1) ** 2}")

# Squaring omega and taking the root gives omega back.
flat = HermitianPointMetric.flat(3)
phi = solve_root(omega_power(flat, 2), flat)
print("\nroot of omega^2 minus omega:", (phi - omega_form(flat)).max_abs())

# A random (2,2)-form on a random positive metric: the root wedges back exactly.
for m in (3, 4):
    g = HermitianPointMetric.random(m, rng)
    Phi = FormPQ.random(m, m - 1, m - 1, rng)
    phi = solve_root(Phi, g)
    back = (wedge(phi, omega_power(g, m - 2)) - Phi).max_abs()
    star_gap = (hodge_star_closed(Phi, g) - hodge_star_eps(Phi, g)).max_abs()
    print(f"m={m}: wedge-back residual {back:.1e}; closed-form star vs permutation star {star_gap:.1e}")
