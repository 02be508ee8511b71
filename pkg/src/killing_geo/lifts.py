"""Horizontal lifts of base curves and the holonomy displacement.

A curve is horizontal when ``dt = alpha dx + beta dy`` along it.  Lifting a
closed base curve therefore shifts the fibre coordinate by the line integral
of the connection 1-form, which by Stokes equals the integral of
``2 tau lambda^2 / mu`` over the enclosed region (counterclockwise curves).
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .errors import CurveNotClosed, OutOfDomain, ToleranceNotMet


class BaseCurve:
    """Parameterized curve in the base over ``s in [0, 1]``.

    Build from samples (fitted with a cubic spline, periodic when closed) or
    from a callable returning ``(x, y, dx/ds, dy/ds)``.
    """

    def __init__(self, position, closed=False, samples=None):
        self._position = position
        self.closed = closed
        self.samples = samples
        if closed:
            x0, y0, *_ = position(np.array(0.0))
            x1, y1, *_ = position(np.array(1.0))
            if abs(x1 - x0) > 1e-12 or abs(y1 - y0) > 1e-12:
                raise CurveNotClosed("closed curve does not return to its start")

    def __call__(self, s):
        return self._position(np.asarray(s, dtype=float))

    @classmethod
    def circle(cls, radius=1.0, center=(0.0, 0.0), clockwise=False, turns=1):
        cx, cy = center
        sign = -1.0 if clockwise else 1.0
        w = 2 * np.pi * turns * sign

        def position(s):
            th = w * s
            return (
                cx + radius * np.cos(th),
                cy + radius * np.sin(th),
                -radius * w * np.sin(th),
                radius * w * np.cos(th),
            )

        return cls(position, closed=True)

    @classmethod
    def from_samples(cls, x, y, s=None, closed=None):
        x, y = np.asarray(x, float), np.asarray(y, float)
        if s is None:
            s = np.linspace(0.0, 1.0, x.size)
        s = np.asarray(s, float)
        s = (s - s[0]) / (s[-1] - s[0])
        gap = np.hypot(x[-1] - x[0], y[-1] - y[0])
        if closed is None:
            closed = gap <= 1e-12
        if closed:
            if gap > 1e-12:
                raise CurveNotClosed(f"end points differ by {gap:.3e}")
            x, y = x.copy(), y.copy()
            x[-1], y[-1] = x[0], y[0]
        bc = "periodic" if closed else "not-a-knot"
        sx, sy = CubicSpline(s, x, bc_type=bc), CubicSpline(s, y, bc_type=bc)
        dsx, dsy = sx.derivative(), sy.derivative()

        def position(u):
            return sx(u), sy(u), dsx(u), dsy(u)

        return cls(position, closed=bool(closed), samples=(s, x, y))

    def reversed(self):
        pos = self._position

        def position(s):
            x, y, dx, dy = pos(1.0 - s)
            return x, y, -dx, -dy

        return BaseCurve(position, self.closed)

    def then(self, other):
        """Traverse ``self`` on [0, 1/2] and ``other`` on [1/2, 1].  The result
        is closed when both pieces are closed loops through the same point."""
        p, q = self._position, other._position
        a_end, b_start = p(np.array(1.0)), q(np.array(0.0))
        joined = abs(a_end[0] - b_start[0]) <= 1e-12 and abs(a_end[1] - b_start[1]) <= 1e-12

        def position(s):
            s = np.asarray(s, float)
            first = s < 0.5
            a = p(np.where(first, 2 * s, 0.0))
            b = q(np.where(first, 0.0, 2 * s - 1))
            return tuple(np.where(first, ai, bi) * (1 if k < 2 else 2) for k, (ai, bi) in enumerate(zip(a, b)))

        return BaseCurve(position, closed=bool(self.closed and other.closed and joined))


@dataclass(frozen=True)
class LiftedCurve:
    s: np.ndarray
    x: np.ndarray
    y: np.ndarray
    t: np.ndarray
    t0: float

    def as_array(self):
        return np.column_stack([self.s, self.x, self.y, self.t])

    def horizontality_residual(self, model, curve, order=10):
        """Per-interval mismatch between the fibre increment and the line
        integral of ``alpha dx + beta dy`` (Gauss-Legendre), divided by the
        flat length of the interval."""
        g, w = np.polynomial.legendre.leggauss(order)
        a, b = self.s[:-1, None], self.s[1:, None]
        s = 0.5 * (b - a) * (g + 1) + a
        x, y, dx, dy = curve(s)
        alpha, beta = model.connection_form(x, y)
        half = 0.5 * (b - a)[:, 0]
        line = half * ((alpha * dx + beta * dy) @ w)
        length = half * (np.hypot(dx, dy) @ w)
        return np.abs(np.diff(self.t) - line) / np.maximum(length, 1e-300)


def _rhs(model, curve):
    d = model.domain

    def f(s, t):
        x, y, dx, dy = curve(s)
        if not d.periodic and not np.all(d.inside(x, y, tol=1e-9)):
            raise OutOfDomain(f"curve leaves the domain at s={float(s):.6g}")
        alpha, beta = model.connection_form(np.atleast_1d(x), np.atleast_1d(y))
        return [float(alpha[0] * dx + beta[0] * dy)]

    return f


def horizontal_lift(model, curve, t0=0.0, atol=1e-10, rtol=1e-10, samples=None, max_step=0.01):
    """Lift of ``curve`` starting at fibre height ``t0``.

    Adaptive Runge-Kutta 4(5).  By default the samples are the accepted steps
    themselves (no dense-output interpolation); ``samples=n`` returns ``n``
    equispaced parameter values instead.
    """
    s_eval = None if samples is None else np.linspace(0.0, 1.0, samples)
    sol = solve_ivp(
        _rhs(model, curve), (0.0, 1.0), [0.0], method="RK45", t_eval=s_eval,
        atol=atol, rtol=rtol, max_step=max_step,
    )
    if not sol.success:
        raise ToleranceNotMet(sol.message)
    s = sol.t
    x, y, *_ = curve(s)
    return LiftedCurve(s, np.asarray(x, float), np.asarray(y, float), sol.y[0] + t0, float(t0))


def holonomy_displacement(model, curve, atol=1e-12, rtol=1e-12):
    """Signed vertical displacement of the lift of a closed curve."""
    if not curve.closed:
        raise CurveNotClosed("holonomy needs a closed curve")
    lift = horizontal_lift(model, curve, 0.0, atol=atol, rtol=rtol, samples=2)
    return float(lift.t[-1] - lift.t[0])


def flux_integral(model, region=None, center=(0.0, 0.0), radius=None, n_radial=64, n_angular=256):
    """Integral of 2 tau lambda^2 / mu over a region.

    ``region`` may be a boolean node mask on the model grid (midpoint rule on
    the cells whose centres lie inside, decided by nearest-node lookup), a
    callable indicator ``inside(x, y)`` evaluated at cell centres, or None
    with ``radius`` for an analytic disk (Gauss-Legendre in r, trapezoid in
    angle).  With neither on a torus, the whole base is used.
    """
    d = model.domain

    def density(x, y):
        return 2 * model.tau(x, y) * model.lam(x, y) ** 2 / model.mu(x, y)

    if radius is not None:
        cx, cy = center
        if not d.periodic:
            th = np.linspace(0, 2 * np.pi, 64, endpoint=False)
            if not np.all(d.inside(cx + radius * np.cos(th), cy + radius * np.sin(th))):
                raise OutOfDomain("flux disk is not contained in the domain")
        r, wr = np.polynomial.legendre.leggauss(n_radial)
        r = 0.5 * radius * (r + 1)
        wr = 0.5 * radius * wr
        th = 2 * np.pi * np.arange(n_angular) / n_angular
        R, T = np.meshgrid(r, th, indexing="ij")
        vals = density(cx + R * np.cos(T), cy + R * np.sin(T))
        return float((2 * np.pi / n_angular) * np.sum(wr[:, None] * R * vals))
    Xc, Yc = d.cell_centers()
    if region is None:
        if not d.periodic:
            raise ValueError("give a region or a radius on non-periodic bases")
        inside = np.ones(Xc.shape, dtype=bool)
    elif callable(region):
        inside = np.asarray(region(Xc, Yc), dtype=bool)
    else:
        region = np.asarray(region, dtype=bool)
        if region.shape == Xc.shape:
            inside = region
        else:
            i = np.clip(np.rint((Xc - d.bounds[0]) / d.hx).astype(int), 0, d.nx - 1)
            j = np.clip(np.rint((Yc - d.bounds[2]) / d.hy).astype(int), 0, d.ny - 1)
            inside = region[i, j]
    if not d.periodic and not np.all(d.inside(Xc[inside], Yc[inside])):
        raise OutOfDomain("region extends outside the domain")
    return float(np.sum(density(Xc[inside], Yc[inside])) * d.hx * d.hy)


def flux_inside_curve(model, curve, pieces=512, order=8):
    """Signed integral of 2 tau lambda^2 / mu over the region enclosed by a
    closed curve, positive for counterclockwise curves.

    Green's theorem with the primitive ``F(x, y) = int_{x_c}^{x} rho(s, y) ds``
    (``x_c`` the domain's centre abscissa, so the horizontal segments stay in
    a convex base) turns the area integral into the line integral of
    ``F dy``; both are done with Gauss-Legendre rules.
    """
    if not curve.closed:
        raise CurveNotClosed("the enclosed flux needs a closed curve")
    d = model.domain
    xc = 0.5 * (d.bounds[0] + d.bounds[1])
    g, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, pieces + 1)
    a, b = edges[:-1, None], edges[1:, None]
    s = (0.5 * (b - a) * (g + 1) + a).ravel()
    ws = (0.5 * (b - a) * w).ravel()
    x, y, _, dy = curve(s)
    if not d.periodic and not np.all(d.inside(x, y, tol=1e-9)):
        raise OutOfDomain("curve leaves the domain")
    gx, wx = np.polynomial.legendre.leggauss(2 * order)
    half = 0.5 * (x - xc)
    xs = xc + half[:, None] * (gx + 1)
    ys = np.broadcast_to(y[:, None], xs.shape)
    rho = 2 * model.tau(xs, ys) * model.lam(xs, ys) ** 2 / model.mu(xs, ys)
    F = half * (rho @ wx)
    return float(np.sum(ws * F * dy))
