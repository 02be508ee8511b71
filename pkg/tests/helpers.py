"""Shared model builders and refinement helpers for the tests."""

import numpy as np

from killing_geo import Domain2D, KillingModel

GENERAL = dict(
    tau="0.5 + x*y - 0.3*sin(x)",
    mu="1 + 0.2*x^2 + 0.1*y",
    lam="1/(1 + 0.2*(x^2 + y^2))",
)


def heisenberg(tau=1.0, n=64, radius=1.5):
    return KillingModel(Domain2D.disk(radius, n), tau=tau)


def general(n=64, radius=1.0, **over):
    fields = dict(GENERAL, **over)
    return KillingModel(Domain2D.disk(radius, n), **fields)


def rates(errors):
    """Successive error ratios of a refinement ladder."""
    e = np.asarray(errors, float)
    return e[:-1] / e[1:]


def model_fields(draw_coeffs):
    """Expression strings for lambda, tau, mu from a tuple of coefficients."""
    a, b, c, d, e, f = draw_coeffs
    lam = f"1/(1 + {abs(a):.3f}*(x^2 + y^2))"
    tau = f"{b:.3f} + {c:.3f}*x*y + {d:.3f}*sin(x)"
    mu = f"1 + {abs(e):.3f}*x^2 + {f:.3f}*y"
    return dict(lam=lam, tau=tau, mu=mu)
