"""Vertical CMC cylinders and the semidirect product formulas."""

import numpy as np

from killing_geo import Domain2D, KillingModel, cmc_cylinder_curve, cylinder_second_fundamental
from killing_geo.cylinders import geodesic_curvature
from killing_geo.homogeneous import QuotientSpec, exp_matrix, nil3_quotient_holonomy, semidirect_bundle_curvature

# flat base, H = 1/2: the base curve is the unit circle
flat = KillingModel(Domain2D.disk(3.0, 16))
c = cmc_cylinder_curve(flat, 0.5, (1.0, 0.0), (0.0, 1.0), 2 * np.pi)
print("radial error:", np.max(np.abs(np.hypot(c.x, c.y) - 1)))

# hyperbolic base (mu = 1): geodesic curvature is 2H all along
h2 = KillingModel(Domain2D.disk(0.95, 16), lam="2/(1 - x^2 - y^2)")
c = cmc_cylinder_curve(h2, 0.3, (0.0, 0.0), (0.5, 0.0), 1.5)
print("kappa_g range:", geodesic_curvature(h2, c).min(), geodesic_curvature(h2, c).max())

# a varying Killing length bends the curve, but trace(sigma) stays 2H
m = KillingModel(Domain2D.disk(1.0, 16), mu="exp(-x) + 0.2*y^2", tau="0.4*x")
c = cmc_cylinder_curve(m, 0.25, (0.0, 0.0), (0.6, 0.8), 0.8)
sig = cylinder_second_fundamental(m, c, c.s)
print("trace(sigma) - 2H:", np.max(np.abs(sig[:, 0, 0] + sig[:, 1, 1] - 0.5)))

# semidirect products R^2 x_A R
print(exp_matrix([[0, 1], [0, 0]], 2.0))
for name, A in [("nil", [[0, 1], [0, 0]]), ("sol", [[1, 0], [0, -1]]), ("mixed", [[0.5, 1], [-0.3, 0.2]])]:
    rows = [semidirect_bundle_curvature(A, z) for z in (-1.0, 0.0, 1.0)]
    print(name, "(tau, mu) at z=-1,0,1:", np.round(rows, 6).tolist())

# Heisenberg quotients: same commutator shift, different loop distances
for a in (0.0, 0.5, 2.0):
    print("a =", a, "->", nil3_quotient_holonomy(QuotientSpec(1.0, a=a)))
