"""Horizontal lifts and holonomy on a few disk models."""

import numpy as np

from killing_geo import BaseCurve, Domain2D, KillingModel, flux_integral, holonomy_displacement, horizontal_lift

# Heisenberg space with tau = 1 over a disk of radius 1.5
heis = KillingModel(Domain2D.disk(1.5, 64), tau=1.0)

for r in (0.25, 0.5, 1.0):
    d = holonomy_displacement(heis, BaseCurve.circle(r))
    print(f"circle r={r:4}: displacement {d:.12f}   2*pi*r^2 = {2 * np.pi * r**2:.12f}")

# a lift of a circle climbs steadily; clockwise travel descends
lift = horizontal_lift(heis, BaseCurve.circle(1.0), t0=0.0)
print("lift end heights:", lift.t[[0, len(lift.t) // 4, len(lift.t) // 2, -1]].round(6))
back = holonomy_displacement(heis, BaseCurve.circle(1.0, clockwise=True))
print("clockwise displacement:", round(back, 12))

# a non-homogeneous model: the displacement still matches the flux of 2 tau/mu
m = KillingModel(
    Domain2D.disk(1.0, 64),
    tau="0.5 + x*y - 0.3*sin(x)",
    mu="1 + 0.2*x^2 + 0.1*y",
    lam="1/(1 + 0.2*(x^2 + y^2))",
)
for center, r in [((0.0, 0.0), 0.5), ((0.2, -0.1), 0.3), ((-0.3, 0.3), 0.4)]:
    d = holonomy_displacement(m, BaseCurve.circle(r, center))
    f = flux_integral(m, center=center, radius=r)
    print(f"center {center} r={r}: d={d:+.10f} flux={f:+.10f} gap={abs(d - f):.1e}")
