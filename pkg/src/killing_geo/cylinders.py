"""Vertical cylinders, the angle function and the stability operator.

A vertical cylinder over a unit-speed base curve ``gamma`` has constant mean
curvature H exactly when ``kappa_g = 2H + eta(log mu)``, with ``eta`` the
base normal ``J gamma'``.  Curves are integrated in the state
``(x, y, theta)`` where ``theta`` is the angle of ``gamma'`` in the
orthonormal frame ``(dx/lambda, dy/lambda)``; for a conformal factor
``lambda`` the geodesic curvature reads

    kappa_g = theta' - (1/lambda) (-sin(theta) (log lambda)_x + cos(theta) (log lambda)_y).

For graphs the stability operator is applied in the form

    L f = lap f + (-K + 4 H^2 + S/2 - det A) f,

which is ``lap + |A|^2 + Ric(N)`` rewritten with the Gauss equation and
``S`` the scalar curvature of the total space.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import GridMismatch, LeftDomain, OutOfDomain, OutOfRange
from .fields import d_dx, d_dy, interior_mask
from .graphs import GraphFunction, area_element_grid
from .model import connection_coeffs, scalar_curvature


def _log_normal_derivative(field, x, y, theta, lam):
    """eta(log f) = (1/lambda)(-sin theta (log f)_x + cos theta (log f)_y)."""
    fx, fy = field.grad(x, y)
    f = field(x, y)
    return (-np.sin(theta) * fx + np.cos(theta) * fy) / (lam * f)


def eta_log_mu(model, x, y, theta):
    return _log_normal_derivative(model.mu, x, y, theta, model.lam(x, y))


@dataclass(frozen=True)
class CylinderCurve:
    """Unit-speed samples of a base curve; ``complete`` is False when the
    integration stopped at the domain boundary before the requested length."""

    s: np.ndarray
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    H: float
    complete: bool
    dense: object = None

    @property
    def length(self):
        return float(self.s[-1])

    def state(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < self.s[0] - 1e-12) or np.any(s > self.s[-1] + 1e-12):
            raise OutOfRange(f"s outside [0, {self.length}]")
        x, y, th = self.dense(np.clip(s, self.s[0], self.s[-1]))
        return x, y, th


def _cylinder_rhs(model, H):
    lam, mu = model.lam, model.mu

    def f(s, z):
        x, y, th = z
        l = lam(x, y)
        ct, st = np.cos(th), np.sin(th)
        target = 2 * H + _log_normal_derivative(mu, x, y, th, l)
        dth = target + _log_normal_derivative(lam, x, y, th, l)
        return [ct / l, st / l, dth]

    return f


def _boundary_event(domain):
    if domain.periodic:
        return None
    if domain.radius is not None and domain.kind == "disk":
        R = domain.radius

        def ev(s, z):
            return R - np.hypot(z[0], z[1])
    else:
        x0, x1, y0, y1 = domain.bounds

        def ev(s, z):
            return min(z[0] - x0, x1 - z[0], z[1] - y0, y1 - z[1])

    ev.terminal = True
    ev.direction = -1
    return ev


def cmc_cylinder_curve(model, H, start, direction, length, atol=1e-12, rtol=1e-12, raise_on_exit=False):
    """Base curve of a vertical cylinder with constant mean curvature ``H``.

    ``direction`` is a unit vector for the base metric, given in coordinates
    (its angle in the orthonormal frame is that of ``lambda * direction``).
    Leaving the domain stops the integration and returns the partial curve
    with ``complete=False`` (or raises LeftDomain with ``raise_on_exit``).
    """
    x0, y0 = map(float, start)
    model.domain.check_inside(x0, y0)
    l0 = float(model.lam(x0, y0))
    dx, dy = map(float, direction)
    speed = l0 * np.hypot(dx, dy)
    if abs(speed - 1.0) > 1e-6:
        raise ValueError(f"direction has base-metric length {speed:.6g}, expected 1")
    th0 = np.arctan2(dy, dx)
    ev = _boundary_event(model.domain)
    sol = solve_ivp(
        _cylinder_rhs(model, H), (0.0, float(length)), [x0, y0, th0], method="RK45",
        atol=atol, rtol=rtol, dense_output=True, events=ev, max_step=max(length / 200, 1e-3),
    )
    if not sol.success:
        raise RuntimeError(sol.message)
    complete = sol.status == 0
    curve = CylinderCurve(sol.t, sol.y[0], sol.y[1], sol.y[2], float(H), complete, sol.sol)
    if not complete and raise_on_exit:
        raise LeftDomain(f"curve left the domain at s={sol.t[-1]:.6g}", curve)
    return curve


def geodesic_curvature(model, curve, s=None):
    """kappa_g from the covariant acceleration with the Christoffel symbols
    of the conformal metric (independent of the angle formula)."""
    s = curve.s if s is None else np.asarray(s, float)
    x, y, th = curve.state(s)
    l = model.lam(x, y)
    lx, ly = model.lam.grad(x, y)
    dth = _cylinder_rhs(model, curve.H)(0.0, (x, y, th))[2]
    vx, vy = np.cos(th) / l, np.sin(th) / l
    dl = lx * vx + ly * vy
    ax = -np.sin(th) * dth / l - np.cos(th) * dl / l**2
    ay = np.cos(th) * dth / l - np.sin(th) * dl / l**2
    p, q = lx / l, ly / l
    # conformal Christoffel symbols
    ax += p * vx * vx + 2 * q * vx * vy - p * vy * vy
    ay += -q * vx * vx + 2 * p * vx * vy + q * vy * vy
    return l * (-np.sin(th) * ax + np.cos(th) * ay)


def cylinder_second_fundamental(model, curve, s):
    """[[kappa_g, tau], [tau, -eta(log mu)]] at gamma(s); shape (..., 2, 2)."""
    x, y, th = curve.state(s)
    k = geodesic_curvature(model, curve, s)
    t = model.tau(x, y)
    e = eta_log_mu(model, x, y, th)
    return np.stack([np.stack([k, t], -1), np.stack([t, -e], -1)], -2)


def cylinder_metric_coefficient(model, curve, s):
    """mu(gamma(s))^2, the dt^2 coefficient of the cylinder metric."""
    x, y, _ = curve.state(s)
    return model.mu(x, y) ** 2


def angle_function(model, u):
    """nu = <N, xi> = 1/W for the upward normal."""
    return 1.0 / area_element_grid(model, u)


# -- stability operator -------------------------------------------------------

@dataclass(frozen=True)
class GraphGeometry:
    """Node fields of a graph: induced metric, curvatures and normal."""

    g: np.ndarray
    K: np.ndarray
    H: np.ndarray
    det_A: np.ndarray
    S: np.ndarray
    nu: np.ndarray
    valid: np.ndarray


def _grad(f, d):
    return d_dx(f, d), d_dy(f, d)


def graph_geometry(model, u):
    """Induced metric, Gaussian curvature, mean curvature, det A and S at
    every node, by nested second-order differences.  The second
    fundamental form uses the frame connection table."""
    d = model.domain
    vals = np.asarray(u.values if isinstance(u, GraphFunction) else u, float)
    if vals.shape != d.shape:
        raise GridMismatch("graph grid does not match the model grid")
    X, Y = d.mesh()
    lam, mu = model.lam.sample(d), model.mu.sample(d)
    alpha, beta = model.node_connection
    ux, uy = _grad(vals, d)
    q = np.stack([ux - alpha, uy - beta])
    # tangent vectors F_i = sum_a c[i, a] E_a
    zero = np.zeros_like(lam)
    c = np.array([[lam, zero, mu * q[0]], [zero, lam, mu * q[1]]])
    g = np.einsum("ia...,ja...->ij...", c, c)
    W = np.sqrt(mu**-2 + (q[0] ** 2 + q[1] ** 2) / lam**2)
    N = np.array([-q[0] / (lam * W), -q[1] / (lam * W), 1 / (mu * W)])
    C = np.moveaxis(connection_coeffs(model, (X, Y), check=False), (-3, -2, -1), (0, 1, 2))
    CN = np.einsum("abk...,k...->ab...", C, N)  # <nabla_{E_a} E_b, N>
    dc = np.array([_grad(c[j, k], d) for j in range(2) for k in range(3)])  # (j*3+k, i)
    dc = dc.reshape(2, 3, 2, *d.shape)  # [j, k, i]
    II = np.einsum("jki...,k...->ij...", dc, N) + np.einsum("ia...,jb...,ab...->ij...", c, c, CN)
    II = 0.5 * (II + np.swapaxes(II, 0, 1))
    detg = g[0, 0] * g[1, 1] - g[0, 1] ** 2
    ginv = np.array([[g[1, 1], -g[0, 1]], [-g[0, 1], g[0, 0]]]) / detg
    A = np.einsum("ik...,kj...->ij...", ginv, II)
    H = 0.5 * (A[0, 0] + A[1, 1])
    det_A = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    K = _gaussian_curvature(g, ginv, detg, d)
    S = scalar_curvature(model, (X, Y), check=False)
    valid = np.ones(d.shape, bool) if d.periodic else interior_mask(d, 3)
    return GraphGeometry(g, K, H, det_A, S, 1.0 / W, valid)


def _gaussian_curvature(g, ginv, detg, d):
    dg = np.array([[_grad(g[i, j], d) for j in range(2)] for i in range(2)])  # [i, j, k] = d_k g_ij
    # Gamma[l, i, j] = 1/2 g^{lm} (d_i g_mj + d_j g_mi - d_m g_ij)
    lower = np.empty((2, 2, 2) + detg.shape)
    for m in range(2):
        for i in range(2):
            for j in range(2):
                lower[m, i, j] = 0.5 * (dg[m, j, i] + dg[m, i, j] - dg[i, j, m])
    Gam = np.einsum("lm...,mij...->lij...", ginv, lower)
    # R^l_{212} = d_1 Gam^l_22 - d_2 Gam^l_12 + Gam^l_1m Gam^m_22 - Gam^l_2m Gam^m_12
    R = np.empty((2,) + detg.shape)
    for l in range(2):
        R[l] = (
            d_dx(Gam[l, 1, 1], d) - d_dy(Gam[l, 0, 1], d)
            + sum(Gam[l, 0, m] * Gam[m, 1, 1] - Gam[l, 1, m] * Gam[m, 0, 1] for m in range(2))
        )
    R1212 = g[0, 0] * R[0] + g[0, 1] * R[1]
    return R1212 / detg


def laplace_beltrami(geom, f, d):
    g = geom.g
    detg = g[0, 0] * g[1, 1] - g[0, 1] ** 2
    sq = np.sqrt(detg)
    ginv = np.array([[g[1, 1], -g[0, 1]], [-g[0, 1], g[0, 0]]]) / detg
    fx, fy = _grad(f, d)
    px = sq * (ginv[0, 0] * fx + ginv[0, 1] * fy)
    py = sq * (ginv[1, 0] * fx + ginv[1, 1] * fy)
    return (d_dx(px, d) + d_dy(py, d)) / sq


def stability_potential(geom):
    """-K + 4H^2 + S/2 - det A."""
    return -geom.K + 4 * geom.H**2 + 0.5 * geom.S - geom.det_A


def stability_apply(model, u, f, geometry=None):
    """L f on the grid of ``u`` (NaN where nested stencils leave the domain)."""
    d = model.domain
    fv = np.asarray(f.values if isinstance(f, GraphFunction) else f, float)
    if fv.shape != d.shape:
        raise GridMismatch("test function grid does not match the model grid")
    geom = geometry or graph_geometry(model, u)
    Lf = laplace_beltrami(geom, fv, d) + stability_potential(geom) * fv
    return np.where(geom.valid, Lf, np.nan)


def rosenberg_threshold(model, region=None):
    """sup over region nodes of tau^2 - K_M + lap(mu)/mu.

    ``region`` is a boolean node mask; by default every node of the domain.
    """
    d = model.domain
    X, Y = d.mesh()
    mask = d.mask if region is None else np.asarray(region, bool) & d.mask
    if region is not None and np.any(np.asarray(region, bool) & ~d.mask):
        raise OutOfDomain("region extends outside the domain")
    x, y = X[mask], Y[mask]
    val = model.tau(x, y) ** 2 - model.base_gaussian_curvature(x, y) + model.base_laplacian_mu(x, y) / model.mu(x, y)
    return float(np.max(val))
