"""Chern-connection identities on exact Taylor jets, and what a sign error looks like.

Run:  python demos/02_identities_on_jets.py
"""

import numpy as np

from anomalyflow.geometry import (Geometry, MetricJet, balanced_residual, bianchi_residuals,
                                  lemma5_residuals, rescale_balanced)
from anomalyflow.jets import JetSpace
from anomalyflow.trig import random_hermitian_field, random_kahler_field, random_points

rng = np.random.default_rng(3)
space = JetSpace.full(3)
z = random_points(rng, 4)

# A generic Hermitian metric carries torsion; the Bianchi identities include it.
herm = MetricJet.from_field(random_hermitian_field(rng), z, 4, space)
print("torsion size:", float(np.abs(Geometry(herm).T.value).max()))
print(bianchi_residuals(herm))

print("\nsame identities with the torsion corrections sign-flipped:")
print(bianchi_residuals(herm, torsion_sign=-1.0))

# Conformally rescaling a Kähler metric by ||Omega||^{-2} makes it conformally balanced.
kahler, _ = random_kahler_field(rng, eps=0.3)
balanced = rescale_balanced(MetricJet.from_field(kahler, z, 4, space), 1.0)
print("\nbalanced metric:")
print(balanced_residual(balanced))
print(lemma5_residuals(balanced))
