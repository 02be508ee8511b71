"""Killing graphs: the field Z, the generalized gradient, area and mean curvature.

A section ``u`` over the base is the graph ``t = u(x, y)``.  With
``q = grad0(u) - (alpha, beta)`` the generalized gradient has coordinates
``Gu = q / lambda^2``, norm ``|Gu| = |q| / lambda`` and the area element is
``W = sqrt(mu^-2 + |Gu|^2) = s / (lambda mu)`` where
``s = sqrt(lambda^2 + mu^2 |q|^2)``.

Discretization
--------------
Every grid cell is split into four corner triangles; on each the gradient
of ``u`` is the one-sided pair of edge differences meeting at that corner,
and the coefficients are frozen at the cell centre.  The discrete area

    E(u) = sum_cells sum_corners (hx hy / 4) * lambda * s

is a convex function of the node values whose gradient is a conservative
(flux-form) divergence: on a torus the gradients sum to zero exactly, which
is the discrete form of the integral identity for ``H mu``.  Nodal mean
curvature is ``H_i = -dE/du_i / (2 mu_i lambda_i^2 hx hy)``.

``E`` integrates ``mu W`` against the base area form, the quantity whose
first variation is ``-2 H mu``.  ``area`` integrates ``W`` itself; the two
coincide when ``mu = 1``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps

from .errors import GridMismatch, NotPeriodic
from .fields import ScalarField2D, d_dx, d_dy, interior_mask, interpolate

# corner triangles: (x-difference edge, y-difference edge), edges 0 = lower/left
_CORNERS = ((0, 0), (0, 1), (1, 0), (1, 1))


@dataclass(frozen=True)
class GraphFunction:
    """Node values of a section on a model grid.

    ``boundary`` is ``"periodic"`` on tori and ``"dirichlet"`` otherwise.
    ``expr`` optionally keeps the analytic field the values came from; it is
    used for exact gradients at off-grid points.
    """

    values: np.ndarray
    domain: object
    boundary: str = None
    expr: ScalarField2D = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.domain.shape:
            raise GridMismatch(f"values {v.shape} do not match grid {self.domain.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        kind = self.boundary or ("periodic" if self.domain.periodic else "dirichlet")
        if kind not in ("periodic", "dirichlet"):
            raise ValueError(f"unknown boundary kind {kind!r}")
        if kind == "periodic" and not self.domain.periodic:
            raise ValueError("periodic graphs need a torus domain")
        object.__setattr__(self, "boundary", kind)
        if kind == "periodic" and self.expr is not None:
            try:
                self.expr.check_periodic(self.domain, tol=1e-12)
            except NotPeriodic as exc:
                raise NotPeriodic(f"graph is not periodic: {exc}") from None

    @classmethod
    def from_expr(cls, expr, domain, everywhere=False):
        """Sample an expression at the nodes (inside the domain unless
        ``everywhere``; other nodes hold NaN)."""
        f = ScalarField2D.coerce(expr)
        X, Y = domain.mesh()
        v = f(X, Y)
        if not everywhere:
            v = np.where(domain.mask, v, np.nan)
        return cls(v, domain, expr=f)

    @classmethod
    def constant(cls, c, domain):
        return cls(np.full(domain.shape, float(c)), domain, expr=ScalarField2D.constant(c))

    def __add__(self, other):
        if isinstance(other, GraphFunction):
            return GraphFunction(self.values + other.values, self.domain, self.boundary)
        expr = None
        if self.expr is not None and self.expr.is_analytic:
            expr = ScalarField2D(expr=self.expr.expr + float(other))
        return GraphFunction(self.values + float(other), self.domain, self.boundary, expr)

    def gradient(self, x, y):
        if self.expr is not None:
            return self.expr.grad(x, y)
        d = self.domain
        return interpolate(d_dx(self.values, d), d, x, y), interpolate(d_dy(self.values, d), d, x, y)

    def node_gradient(self):
        if self.expr is not None:
            X, Y = self.domain.mesh()
            return self.expr.grad(X, Y)
        return d_dx(self.values, self.domain), d_dy(self.values, self.domain)


class VectorField2D:
    """Tangent field on the base given by coordinate components.

    ``evaluate(x, y)`` returns ``(X^x, X^y)``; the norm uses the conformal
    base metric ``lambda^2 (dx^2 + dy^2)``.
    """

    def __init__(self, evaluate, lam, node_values=None, z_source=None):
        self._evaluate = evaluate
        self.lam = ScalarField2D.coerce(lam)
        self.node_values = node_values
        self.z_source = z_source

    @classmethod
    def from_components(cls, fx, fy, lam=1):
        fx, fy = ScalarField2D.coerce(fx), ScalarField2D.coerce(fy)
        return cls(lambda x, y: (fx(x, y), fy(x, y)), lam)

    def __call__(self, x, y):
        return self._evaluate(x, y)

    def norm(self, x, y):
        u, v = self(x, y)
        return self.lam(x, y) * np.hypot(u, v)

    def rotate(self):
        """J X with J(X, Y) = (-Y, X), which sends d/dx to d/dy."""
        ev = self._evaluate
        return VectorField2D(lambda x, y: (lambda c: (-c[1], c[0]))(ev(x, y)), self.lam)


def z_field(model):
    """Z with coordinates (a/lambda, b/lambda) = (alpha, beta)/lambda^2."""

    def evaluate(x, y):
        alpha, beta = model.connection_form(x, y)
        l2 = model.lam(x, y) ** 2
        return alpha / l2, beta / l2

    return VectorField2D(evaluate, model.lam, z_source=model.z_source)


def div_jz_residual(model):
    """div(JZ) + 2 tau/mu at the nodes, flux form on staggered faces.

    In coordinates ``lambda^2 JZ = (-beta, alpha)``, so
    ``div(JZ) = (-(beta)_x + (alpha)_y) / lambda^2`` with the derivatives
    taken as differences of face values.  Nodes without a full stencil in the
    domain hold NaN.
    """
    d = model.domain
    beta_f, alpha_f = model.face_connection
    if d.periodic:
        dbeta = (beta_f - np.roll(beta_f, 1, 0)) / d.hx
        dalpha = (alpha_f - np.roll(alpha_f, 1, 1)) / d.hy
        div0 = -dbeta + dalpha
    else:
        div0 = np.full(d.shape, np.nan)
        div0[1:-1, 1:-1] = (
            -(beta_f[1:, 1:-1] - beta_f[:-1, 1:-1]) / d.hx
            + (alpha_f[1:-1, 1:] - alpha_f[1:-1, :-1]) / d.hy
        )
    with np.errstate(all="ignore"):
        res = div0 / model.lam.sample(d) ** 2 + 2 * model.tau.sample(d) / model.mu.sample(d)
    if not d.periodic:
        res = np.where(interior_mask(d, 1), res, np.nan)
    return res


# -- pointwise quantities -------------------------------------------------------

def _q(model, u, x, y):
    ux, uy = u.gradient(x, y)
    alpha, beta = model.connection_form(x, y)
    return ux - alpha, uy - beta


def generalized_gradient(model, u, point):
    """Coordinates of Gu = grad u - Z at a point."""
    x, y = model._points(point)
    qx, qy = _q(model, u, x, y)
    l2 = model.lam(x, y) ** 2
    return qx / l2, qy / l2


def area_element(model, u, point):
    """W = sqrt(mu^-2 + |Gu|^2) at arbitrary points."""
    x, y = model._points(point)
    qx, qy = _q(model, u, x, y)
    return np.sqrt(model.mu(x, y) ** -2 + (qx**2 + qy**2) / model.lam(x, y) ** 2)


def area_element_grid(model, u):
    """W at every node from central differences of the node values."""
    d = model.domain
    ux, uy = u.node_gradient()
    alpha, beta = model.node_connection
    with np.errstate(all="ignore"):
        q2 = (ux - alpha) ** 2 + (uy - beta) ** 2
        return np.sqrt(model.mu.sample(d) ** -2 + q2 / model.lam.sample(d) ** 2)


# -- discrete area functional -------------------------------------------------

class CellGeometry:
    """Cell-centre coefficients and corner-node indices of the active cells."""

    def __init__(self, model, active=None):
        d = model.domain
        self.domain = d
        self.hx, self.hy = d.hx, d.hy
        ncx, ncy = (d.nx, d.ny) if d.periodic else (d.nx - 1, d.ny - 1)
        if active is None:
            if d.periodic:
                active = np.ones((ncx, ncy), dtype=bool)
            else:
                m = d.mask
                active = m[:-1, :-1] & m[1:, :-1] & m[:-1, 1:] & m[1:, 1:]
        self.active = active
        ci, cj = np.nonzero(active)
        ip = (ci + 1) % d.nx
        jp = (cj + 1) % d.ny
        idx = lambda i, j: i * d.ny + j  # noqa: E731
        self.n00, self.n10, self.n01, self.n11 = idx(ci, cj), idx(ip, cj), idx(ci, jp), idx(ip, jp)
        Xc, Yc = d.cell_centers()
        xc, yc = Xc[active], Yc[active]
        with np.errstate(all="ignore"):
            self.lam = model.lam(xc, yc)
            self.mu = model.mu(xc, yc)
            if d.periodic:
                a, b = model.cell_connection
                self.alpha, self.beta = a[active], b[active]
            else:
                self.alpha, self.beta = model.connection_form(xc, yc)
        self.size = d.nx * d.ny
        self.weight = self.hx * self.hy / 4.0

    def corner_gradients(self, u_flat):
        u00, u10, u01, u11 = (u_flat[n] for n in (self.n00, self.n10, self.n01, self.n11))
        dx = ((u10 - u00) / self.hx, (u11 - u01) / self.hx)
        dy = ((u01 - u00) / self.hy, (u11 - u10) / self.hy)
        return dx, dy

    def _edges(self):
        xe = ((self.n10, self.n00), (self.n11, self.n01))
        ye = ((self.n01, self.n00), (self.n11, self.n10))
        return xe, ye

    def energy(self, u_flat, density="surface"):
        dx, dy = self.corner_gradients(u_flat)
        total = 0.0
        for ex, ey in _CORNERS:
            qx, qy = dx[ex] - self.alpha, dy[ey] - self.beta
            s = np.sqrt(self.lam**2 + self.mu**2 * (qx**2 + qy**2))
            dens = self.lam * s if density == "surface" else self.lam * s / self.mu
            total += np.sum(dens)
        return self.weight * total

    def gradient(self, u_flat):
        dx, dy = self.corner_gradients(u_flat)
        (xe, ye), g = self._edges(), np.zeros(self.size)
        for ex, ey in _CORNERS:
            qx, qy = dx[ex] - self.alpha, dy[ey] - self.beta
            s = np.sqrt(self.lam**2 + self.mu**2 * (qx**2 + qy**2))
            c = self.weight * self.lam * self.mu**2 / s
            px, mx = xe[ex]
            py, my = ye[ey]
            fx, fy = c * qx / self.hx, c * qy / self.hy
            g += np.bincount(px, fx, self.size) - np.bincount(mx, fx, self.size)
            g += np.bincount(py, fy, self.size) - np.bincount(my, fy, self.size)
        return g

    def hessian(self, u_flat):
        dx, dy = self.corner_gradients(u_flat)
        xe, ye = self._edges()
        rows, cols, vals = [], [], []
        for ex, ey in _CORNERS:
            qx, qy = dx[ex] - self.alpha, dy[ey] - self.beta
            m2 = self.mu**2
            s = np.sqrt(self.lam**2 + m2 * (qx**2 + qy**2))
            c = self.weight * self.lam * m2
            hxx = c * (1 / s - m2 * qx * qx / s**3)
            hxy = c * (-m2 * qx * qy / s**3)
            hyy = c * (1 / s - m2 * qy * qy / s**3)
            # gradient components as (node, coefficient) pairs
            comp = (
                ((xe[ex][0], 1 / self.hx), (xe[ex][1], -1 / self.hx)),
                ((ye[ey][0], 1 / self.hy), (ye[ey][1], -1 / self.hy)),
            )
            block = ((hxx, hxy), (hxy, hyy))
            for a in range(2):
                for b in range(2):
                    for na, ca in comp[a]:
                        for nb, cb in comp[b]:
                            rows.append(na)
                            cols.append(nb)
                            vals.append(block[a][b] * ca * cb)
        rows, cols, vals = (np.concatenate(v) for v in (rows, cols, vals))
        return sps.csr_matrix((vals, (rows, cols)), shape=(self.size, self.size))

    def node_coverage(self):
        """Number of active cells around each node."""
        cnt = np.zeros(self.size)
        for n in (self.n00, self.n10, self.n01, self.n11):
            cnt += np.bincount(n, minlength=self.size)
        return cnt.reshape(self.domain.shape)


def node_mass(model):
    """mu lambda^2 hx hy at the nodes: the weight turning 2H into -dE/du."""
    d = model.domain
    with np.errstate(all="ignore"):
        return model.mu.sample(d) * model.lam.sample(d) ** 2 * d.hx * d.hy


def _finite_cells(model, values):
    d = model.domain
    ok = np.isfinite(values)
    if d.periodic:
        return None
    m = ok & d.mask
    return m[:-1, :-1] & m[1:, :-1] & m[:-1, 1:] & m[1:, 1:]


def _values(model, u):
    if isinstance(u, GraphFunction):
        if u.domain.shape != model.domain.shape:
            raise GridMismatch("graph grid does not match the model grid")
        return np.asarray(u.values, dtype=float)
    v = np.asarray(u, dtype=float)
    if v.shape != model.domain.shape:
        raise GridMismatch("graph grid does not match the model grid")
    return v


def surface_area(model, u, geometry=None):
    """Discrete integral of mu W over the base: the induced area of the graph."""
    v = _values(model, u)
    geo = geometry or CellGeometry(model, _finite_cells(model, v))
    return float(geo.energy(np.nan_to_num(v.ravel())))


def area(model, u, geometry=None):
    """Discrete integral of W lambda^2 dx dy over the base."""
    v = _values(model, u)
    geo = geometry or CellGeometry(model, _finite_cells(model, v))
    return float(geo.energy(np.nan_to_num(v.ravel()), density="plain"))


def mean_curvature(model, u, geometry=None):
    """Nodal H = (1/2mu) div(mu Gu / W) from the discrete first variation.

    Nodes not surrounded by four active cells hold NaN.
    """
    v = _values(model, u)
    geo = geometry or CellGeometry(model, _finite_cells(model, v))
    g = geo.gradient(np.nan_to_num(v.ravel())).reshape(model.domain.shape)
    with np.errstate(all="ignore"):
        H = -g / (2 * node_mass(model))
    if not model.domain.periodic:
        H = np.where(geo.node_coverage() == 4, H, np.nan)
    return H


def mean_curvature_flux_total(model, u):
    """Sum over nodes of 2 H mu lambda^2 hx hy; exactly zero up to rounding on
    a torus."""
    H = mean_curvature(model, u)
    return float(np.nansum(2 * H * node_mass(model)))
