"""Calabi duality on manufactured pairs, then a constant mean curvature cap."""

import numpy as np

from killing_geo import Domain2D, KillingModel, calabi_dual, manufactured_model, solve_dirichlet

# pick v first and let tau be whatever makes v a Lorentzian solution;
# below 65^2 the fourth-order curl check of this pair sits just above 1e-6
v = "0.4*sin(x)*cos(y)"
for n in (65, 129, 257):
    m = manufactured_model(Domain2D.disk(1.0, n), v, mu="1 + 0.1*y^2")
    res = calabi_dual(m, v)
    print(f"n={n:4d}  max|H(u)|={res.max_H:.2e}  max|W sqrt(mu^2-|grad v|^2) - 1|={res.max_identity_residual:.2e}")

# the lower hemisphere of radius 2 has H = 1/2 with the upward normal
for n in (33, 65, 129):
    m = KillingModel(Domain2D.disk(1.0, n))
    rep = solve_dirichlet(m, "-sqrt(4 - x^2 - y^2)", H_target=0.5)
    X, Y = m.domain.mesh()
    err = np.abs(rep.solution.values + np.sqrt(4 - X**2 - Y**2))[m.domain.mask]
    print(f"n={n:4d}  cap error {err.max():.3e}  ({rep.iterations} Newton steps)")
