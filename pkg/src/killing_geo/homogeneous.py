"""Homogeneous examples: semidirect products and Heisenberg torus quotients.

On ``R^2 x_A R`` with coordinates ``(x, y, z)`` the left-invariant frame is
built from ``alpha(z) = exp(zA)``; ``d/dx`` is a Killing field and the base
metric in ``(y, z)`` is ``dy^2 / rho + dz^2`` with
``rho = alpha22^2 + alpha21^2``.  The connection form is ``dx - n dy`` with
``n = (alpha11 alpha21 + alpha12 alpha22) / rho``.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DegenerateFrame
from .fields import Domain2D
from .model import bundle_curvature_from_connection

SERIES_SWITCH = 1e-6


def _expm_series(M):
    """Scaling and squaring with a Taylor series."""
    nrm = np.max(np.sum(np.abs(M), axis=1))
    k = max(0, int(np.ceil(np.log2(nrm))) + 1) if nrm > 0 else 0
    B = M / 2.0**k
    out = np.eye(2)
    term = np.eye(2)
    for j in range(1, 30):
        term = term @ B / j
        out = out + term
        if np.max(np.abs(term)) < 1e-18:
            break
    for _ in range(k):
        out = out @ out
    return out


def exp_matrix(A, z):
    """exp(zA) for a real 2x2 matrix.

    Writing ``zA = s I + N`` with ``N`` trace free, ``N^2 = d I`` and the
    exponential is ``e^s (c(d) I + g(d) N)`` with cosh/sinh, 1/1, or cos/sin
    according to the sign of ``d``.  Within SERIES_SWITCH of ``d = 0`` a
    scaled series is used instead.
    """
    M = float(z) * np.asarray(A, dtype=float)
    s = 0.5 * np.trace(M)
    N = M - s * np.eye(2)
    d = -np.linalg.det(N)
    scale = max(1.0, np.max(np.abs(N)) ** 2)
    if 0 < abs(d) < SERIES_SWITCH * scale:
        return _expm_series(M)
    if d > 0:
        r = np.sqrt(d)
        c, g = np.cosh(r), np.sinh(r) / r
    elif d < 0:
        r = np.sqrt(-d)
        c, g = np.cos(r), np.sin(r) / r
    else:
        c, g = 1.0, 1.0
    return np.exp(s) * (c * np.eye(2) + g * N)


def _frame_data(A, z):
    A = np.asarray(A, dtype=float)
    a = exp_matrix(A, z)
    da = A @ a
    rho = a[1, 1] ** 2 + a[1, 0] ** 2
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    num = a[0, 0] * a[1, 0] + a[0, 1] * a[1, 1]
    drho = 2 * (a[1, 1] * da[1, 1] + a[1, 0] * da[1, 0])
    dnum = da[0, 0] * a[1, 0] + a[0, 0] * da[1, 0] + da[0, 1] * a[1, 1] + a[0, 1] * da[1, 1]
    n = num / rho
    dn = (dnum * rho - num * drho) / rho**2
    return rho, det, n, dn


def semidirect_tau_mu(A, z):
    """(2 tau/mu, mu) from the displayed quotient and Killing-length formulas:
    ``2 tau/mu = d/dz (n)`` and ``mu = sqrt(rho / det)``."""
    rho, det, _, dn = _frame_data(A, z)
    if not det > 0:
        raise DegenerateFrame(f"alpha11 alpha22 - alpha12 alpha21 = {det:.3e} <= 0")
    return float(dn), float(np.sqrt(rho / det))


def semidirect_bundle_curvature(A, z):
    """(tau, mu) of the Killing field d/dx computed from the metric itself:
    ``mu = sqrt(rho) / det`` and ``tau = mu sqrt(rho) n' / 2``.  Both agree
    with ``semidirect_tau_mu`` when ``rho`` and ``det`` are identically 1."""
    rho, det, _, dn = _frame_data(A, z)
    if not det > 0:
        raise DegenerateFrame(f"alpha11 alpha22 - alpha12 alpha21 = {det:.3e} <= 0")
    mu = np.sqrt(rho) / det
    return float(mu * np.sqrt(rho) * dn / 2), float(mu)


@dataclass(frozen=True)
class ConformalStrip:
    """Conformal chart (X, Y) = (int sqrt(rho) dz, y) of the base over a
    z-interval, sampled on a rectangle grid."""

    domain: Domain2D
    z: np.ndarray  # z at each grid column X
    lam: np.ndarray
    mu: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray

    def bundle_curvature(self):
        return bundle_curvature_from_connection(self.domain, self.lam, self.mu, self.alpha, self.beta)


def conformal_strip(A, z_range, n=129, y_half_width=0.5):
    """Sample the base data of R^2 x_A R in conformal coordinates.

    ``dZ = sqrt(rho) dz`` turns ``dy^2/rho + dz^2`` into
    ``(1/rho)(dY^2 + dZ^2)``, so ``lambda = 1/sqrt(rho)``; the connection
    form ``dx - n dy`` gives ``alpha = 0``, ``beta = n`` on the grid.
    """
    z0, z1 = map(float, z_range)
    f = lambda z, Z: [np.sqrt(_frame_data(A, z)[0])]  # noqa: E731
    g = lambda Z, z: [1.0 / np.sqrt(_frame_data(A, z[0])[0])]  # noqa: E731
    total = solve_ivp(f, (z0, z1), [0.0], rtol=1e-12, atol=1e-13).y[0, -1]
    lo, hi = min(0.0, total), max(0.0, total)
    bounds = (lo, hi, -y_half_width, y_half_width)
    dom = Domain2D.rectangle(bounds, n, n)
    zs = solve_ivp(g, (0.0, total), [z0], t_eval=dom.x if total > 0 else dom.x[::-1], rtol=1e-12, atol=1e-13).y[0]
    if total < 0:
        zs = zs[::-1]
    data = np.array([_frame_data(A, z) for z in zs])
    rho, det, nn = data[:, 0], data[:, 1], data[:, 2]
    col = lambda v: np.repeat(v[:, None], n, axis=1)  # noqa: E731
    return ConformalStrip(
        dom, zs, col(1 / np.sqrt(rho)), col(np.sqrt(rho) / det), np.zeros(dom.shape), col(nn),
    )


# -- Heisenberg quotients ---------------------------------------------------

@dataclass(frozen=True)
class QuotientSpec:
    """Nil3(tau) modulo f1(x,y,z) = (x+1, y, z + tau y + a) and
    f2(x,y,z) = (x, y+1, z - tau x + b)."""

    tau: float
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")


@dataclass(frozen=True)
class AffineShear:
    """(x, y, z) -> (x + p, y + q, z + cx x + cy y + c0) with exact entries."""

    p: Fraction
    q: Fraction
    cx: Fraction
    cy: Fraction
    c0: Fraction

    def __matmul__(self, f):
        """self o f"""
        return AffineShear(
            f.p + self.p,
            f.q + self.q,
            f.cx + self.cx,
            f.cy + self.cy,
            f.c0 + self.cx * f.p + self.cy * f.q + self.c0,
        )

    def inverse(self):
        return AffineShear(-self.p, -self.q, -self.cx, -self.cy, self.cx * self.p + self.cy * self.q - self.c0)

    def __call__(self, x, y, z):
        return x + self.p, y + self.q, z + self.cx * x + self.cy * y + self.c0


def quotient_generators(spec):
    t, a, b = (Fraction(v) for v in (spec.tau, spec.a, spec.b))
    f1 = AffineShear(Fraction(1), Fraction(0), Fraction(0), t, a)
    f2 = AffineShear(Fraction(0), Fraction(1), -t, Fraction(0), b)
    return f1, f2


def commutator(spec):
    f1, f2 = quotient_generators(spec)
    return f1 @ f2 @ f1.inverse() @ f2.inverse()


def nil3_quotient_holonomy(spec):
    """(2 tau, 2 tau - a): the vertical shift of the commutator of the
    generators and the stated vertical distance for the loop (t, 0).

    The shift is computed exactly with rational affine maps and must be a
    pure vertical translation by 2 tau.
    """
    c = commutator(spec)
    two_tau = 2 * Fraction(spec.tau)
    if (c.p, c.q, c.cx, c.cy, c.c0) != (0, 0, 0, 0, two_tau):
        raise ArithmeticError(f"commutator is not the translation by 2 tau: {c}")
    return float(c.c0), float(two_tau - Fraction(spec.a))


def nil3_loop_distance_ode(spec, atol=1e-12, rtol=1e-12):
    """Vertical distance for the loop (t, 0) measured by lifting it in the
    Heisenberg model and identifying the end point with f1^{-1}; reported
    modulo the fibre length 2 tau."""
    from .lifts import BaseCurve, horizontal_lift
    from .model import KillingModel

    model = KillingModel(Domain2D.rectangle((-0.5, 1.5, -0.5, 0.5), 17, 9), tau=spec.tau)
    line = BaseCurve(lambda s: (s, 0.0 * s, np.ones_like(s), np.zeros_like(s)))
    lift = horizontal_lift(model, line, 0.0, atol=atol, rtol=rtol)
    f1, _ = quotient_generators(spec)
    _, _, z = f1.inverse()(Fraction(1), Fraction(0), Fraction(lift.t[-1]))
    return float(np.mod(float(z), 2 * spec.tau))
