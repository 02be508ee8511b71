"""Killing submersion models over conformal planar domains.

A model is the product ``Omega x R`` with metric

    lambda^2 (dx^2 + dy^2) + mu^2 (dt - lambda (a dx + b dy))^2,

whose Killing field is ``d/dt`` with length ``mu``.  The connection data
``(a, b)`` is either the radial construction ``a = -y eta/lambda``,
``b = x eta/lambda`` with ``eta`` obtained by quadrature along rays from the
origin (simply connected bases), or, on a torus, the rotated gradient of a
periodic potential (see ``minimal.make_torus_z``).

Throughout, ``alpha = lambda*a`` and ``beta = lambda*b`` are the coefficients
of the connection 1-form ``dt - alpha dx - beta dy``.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import (
    BoundaryTooClose,
    NonPositiveField,
    ObstructionNonzero,
    OutOfDomain,
)
from .fields import (
    RECTANGLE,
    Domain2D,
    ScalarField2D,
    d_dx,
    d_dy,
    interior_mask,
    interpolate,
)
from .poisson import solve_periodic_poisson

RADIAL_ETA = "radial_eta"
POISSON_POTENTIAL = "poisson_potential"

DEFAULT_QUAD_NODES = 257
_CHUNK = 4096


def simpson_weights(n):
    if n < 3 or n % 2 == 0:
        raise ValueError("composite Simpson needs an odd number of nodes >= 3")
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / (3.0 * (n - 1))


def _ray_integral(integrand, x, y, power, n):
    """Composite Simpson approximation of int_0^1 s**power * g(s x, s y) ds
    for every point, where ``integrand(X, Y)`` evaluates g."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    shape = np.broadcast(x, y).shape
    xf = np.broadcast_to(x, shape).ravel()
    yf = np.broadcast_to(y, shape).ravel()
    s = np.linspace(0.0, 1.0, n)
    w = simpson_weights(n) * s**power
    out = np.empty(xf.size)
    for start in range(0, xf.size, _CHUNK):
        sl = slice(start, start + _CHUNK)
        g = integrand(np.outer(s, xf[sl]), np.outer(s, yf[sl]))
        out[sl] = w @ g
    return out.reshape(shape)


def build_eta(tau, lam, mu, point, n=DEFAULT_QUAD_NODES, domain=None):
    """eta(p) = int_0^1 2 s tau(s p) lambda(s p)^2 / mu(s p) ds.

    Parameters
    ----------
    tau, lam, mu : ScalarField2D or str or float
    point : (x, y), scalars or arrays
    n : int
        Odd number of Simpson nodes; the error decays like n**-4 for smooth
        integrands.
    domain : Domain2D, optional
        If given, the segment from the origin to ``point`` must stay inside.
    """
    tau, lam, mu = (ScalarField2D.coerce(f) for f in (tau, lam, mu))
    x, y = (np.asarray(c, dtype=float) for c in point)
    s = np.linspace(0.0, 1.0, n)
    if domain is not None and not domain.periodic:
        for sk in (s[-1], 0.0):
            if not np.all(domain.inside(sk * x, sk * y)):
                raise OutOfDomain("segment from the origin leaves the domain")
    checks = []

    def integrand(X, Y):
        lv, mv = lam(X, Y), mu(X, Y)
        checks.append(min(np.min(lv), np.min(mv)))
        return 2.0 * tau(X, Y) * lv**2 / mv

    eta = _ray_integral(integrand, x, y, 1, n)
    if checks and not min(checks) > 0:
        raise NonPositiveField("lambda or mu is not positive on a quadrature node")
    return eta


@dataclass(frozen=True)
class KillingModel:
    """Base domain plus bundle curvature, Killing length and conformal factor.

    ``z_source`` defaults to ``"radial_eta"`` on disks and rectangles and to
    ``"poisson_potential"`` on tori.  Positivity of ``lam`` and ``mu`` is
    checked on the grid nodes and, for analytic fields, on a 4x oversampled
    grid; construction fails instead of clamping.
    """

    domain: Domain2D
    lam: ScalarField2D = field(default_factory=lambda: ScalarField2D.constant(1))
    tau: ScalarField2D = field(default_factory=lambda: ScalarField2D.constant(0))
    mu: ScalarField2D = field(default_factory=lambda: ScalarField2D.constant(1))
    z_source: str = None
    quad_nodes: int = DEFAULT_QUAD_NODES
    obstruction_tol: float = 1e-10
    poisson_tol: float = 1e-12

    def __post_init__(self):
        for name in ("lam", "tau", "mu"):
            object.__setattr__(self, name, ScalarField2D.coerce(getattr(self, name)))
        if self.z_source is None:
            src = POISSON_POTENTIAL if self.domain.periodic else RADIAL_ETA
            object.__setattr__(self, "z_source", src)
        if self.z_source not in (RADIAL_ETA, POISSON_POTENTIAL):
            raise ValueError(f"unknown z_source {self.z_source!r}")
        if self.z_source == POISSON_POTENTIAL and not self.domain.periodic:
            raise ValueError("poisson_potential connection data needs a torus domain")
        if self.z_source == RADIAL_ETA and self.domain.periodic:
            raise ValueError("the radial eta construction is not periodic; use poisson_potential")
        if self.domain.kind == RECTANGLE:
            x0, x1, y0, y1 = self.domain.bounds
            if not (x0 <= 0 <= x1 and y0 <= 0 <= y1):
                raise OutOfDomain("radial eta needs the origin inside the rectangle")
        for name in ("lam", "mu"):
            self._check_positive(name)
        if self.domain.periodic:
            for name in ("lam", "tau", "mu"):
                getattr(self, name).check_periodic(self.domain)

    def _check_positive(self, name):
        f = getattr(self, name)
        d = self.domain
        vals = f.sample(d)[d.mask]
        if f.is_analytic:
            fine = d.with_resolution(4 * d.nx, 4 * d.ny)
            vals = np.concatenate([vals, f.sample(fine)[fine.mask]])
        if not np.all(vals > 0):
            bad = "nan" if np.isnan(vals).any() else f"{np.nanmin(vals):.3g}"
            label = "lambda" if name == "lam" else name
            raise NonPositiveField(f"{label} must be positive on the domain (min {bad})")

    # -- bookkeeping -----------------------------------------------------

    @property
    def curvature_method(self):
        """How K_M is obtained: symbolic for expression fields, finite
        differences for grid-sampled lambda."""
        return "analytic" if self.lam.is_analytic else "finite_difference"

    def with_resolution(self, nx, ny=None):
        return KillingModel(
            self.domain.with_resolution(nx, ny),
            self.lam,
            self.tau,
            self.mu,
            self.z_source,
            self.quad_nodes,
            self.obstruction_tol,
            self.poisson_tol,
        )

    def _points(self, point, check=True):
        x, y = (np.asarray(c, dtype=float) for c in point)
        if check:
            self.domain.check_inside(x, y)
        return x, y

    # -- radial construction ---------------------------------------------

    @cached_property
    def _weight(self):
        """tau*lambda^2/mu as a field (symbolic when possible)."""
        if all(f.is_analytic for f in (self.tau, self.lam, self.mu)):
            return ScalarField2D(expr=self.tau.expr * self.lam.expr**2 / self.mu.expr)
        return None

    def _weight_eval(self, key, X, Y):
        w = self._weight
        if w is not None:
            return w._get(key, X, Y)
        t, l, m = self.tau(X, Y), self.lam(X, Y), self.mu(X, Y)
        if key == "f":
            return t * l**2 / m
        axis = 0 if key == "fx" else 1
        dt, dl, dm = (f.grad(X, Y)[axis] for f in (self.tau, self.lam, self.mu))
        return dt * l**2 / m + 2 * t * l * dl / m - t * l**2 * dm / m**2

    def eta(self, x, y):
        return 2.0 * _ray_integral(lambda X, Y: self._weight_eval("f", X, Y), x, y, 1, self.quad_nodes)

    def eta_grad(self, x, y):
        ex = 2.0 * _ray_integral(lambda X, Y: self._weight_eval("fx", X, Y), x, y, 2, self.quad_nodes)
        ey = 2.0 * _ray_integral(lambda X, Y: self._weight_eval("fy", X, Y), x, y, 2, self.quad_nodes)
        return ex, ey

    # -- torus construction ----------------------------------------------

    @cached_property
    def obstruction_integral(self):
        """Grid value of the integral of (tau/mu) dA over the base (torus only
        meaningful; trapezoid rule, spectrally accurate for periodic data)."""
        d = self.domain
        f = self.tau.sample(d) * self.lam.sample(d) ** 2 / self.mu.sample(d)
        if d.periodic:
            return float(np.sum(f) * d.hx * d.hy)
        return float(np.nansum(np.where(d.mask, f, 0.0)) * d.hx * d.hy)

    @cached_property
    def potential(self):
        """Zero-mean periodic psi with lap0(psi) = 2 lambda^2 tau/mu.

        Returns ``(psi, linear_residual)``.  Raises ObstructionNonzero when the
        integral of tau/mu does not vanish.
        """
        if self.z_source != POISSON_POTENTIAL:
            raise ValueError("potential is only defined for poisson_potential models")
        d = self.domain
        rhs = 2.0 * self.tau.sample(d) * self.lam.sample(d) ** 2 / self.mu.sample(d)
        scale = 1.0 + d.hx * d.hy * np.sum(np.abs(rhs)) / 2.0
        if abs(self.obstruction_integral) > self.obstruction_tol * scale:
            raise ObstructionNonzero(self.obstruction_integral, self.obstruction_tol)
        return solve_periodic_poisson(rhs, d.hx, d.hy, tol=self.poisson_tol)

    # -- connection data on grids ----------------------------------------

    @cached_property
    def node_connection(self):
        """(alpha, beta) at the grid nodes."""
        d = self.domain
        if self.z_source == RADIAL_ETA:
            X, Y = d.mesh()
            e = self.eta(X, Y)
            return -Y * e, X * e
        psi, _ = self.potential
        return -d_dy(psi, d), d_dx(psi, d)

    @cached_property
    def face_connection(self):
        """Normal components of lambda^2 Z on the staggered faces.

        Returns ``(beta_xf, alpha_yf)``: beta at the x-faces (i+1/2, j) and
        alpha at the y-faces (i, j+1/2).  Shapes are (nx, ny) on a torus and
        (nx-1, ny) / (nx, ny-1) otherwise.
        """
        d = self.domain
        if self.z_source == POISSON_POTENTIAL:
            psi, _ = self.potential
            beta = (np.roll(psi, -1, 0) - psi) / d.hx
            alpha = -(np.roll(psi, -1, 1) - psi) / d.hy
            return beta, alpha
        xf = d.x[:-1] + 0.5 * d.hx
        Xf, Yf = np.meshgrid(xf, d.y, indexing="ij")
        beta = Xf * self.eta(Xf, Yf)
        yf = d.y[:-1] + 0.5 * d.hy
        Xg, Yg = np.meshgrid(d.x, yf, indexing="ij")
        alpha = -Yg * self.eta(Xg, Yg)
        return beta, alpha

    @cached_property
    def cell_connection(self):
        """(alpha, beta) at the cell centres."""
        d = self.domain
        if self.z_source == POISSON_POTENTIAL:
            psi, _ = self.potential
            p10, p01, p11 = np.roll(psi, -1, 0), np.roll(psi, -1, 1), np.roll(np.roll(psi, -1, 0), -1, 1)
            psi_x = (p10 + p11 - psi - p01) / (2 * d.hx)
            psi_y = (p01 + p11 - psi - p10) / (2 * d.hy)
            return -psi_y, psi_x
        Xc, Yc = d.cell_centers()
        e = self.eta(Xc, Yc)
        return -Yc * e, Xc * e

    def connection_form(self, x, y):
        """(alpha, beta) = (lambda a, lambda b) at arbitrary points."""
        if self.z_source == RADIAL_ETA:
            e = self.eta(x, y)
            return -np.asarray(y) * e, np.asarray(x) * e
        alpha, beta = self.node_connection
        return interpolate(alpha, self.domain, x, y), interpolate(beta, self.domain, x, y)

    def ab(self, x, y):
        alpha, beta = self.connection_form(x, y)
        lam = self.lam(x, y)
        return alpha / lam, beta / lam

    # -- local geometry (vectorised over points) -------------------------

    def _derivs(self, x, y):
        lx, ly = self.lam.grad(x, y)
        lxx, lxy, lyy = self.lam.hessian(x, y)
        mx, my = self.mu.grad(x, y)
        mxx, mxy, myy = self.mu.hessian(x, y)
        return dict(
            l=self.lam(x, y), lx=lx, ly=ly, lxx=lxx, lxy=lxy, lyy=lyy,
            m=self.mu(x, y), mx=mx, my=my, mxx=mxx, mxy=mxy, myy=myy,
            t=self.tau(x, y),
        )

    def base_gaussian_curvature(self, x, y):
        """K_M = -(1/lambda^2) lap0(log lambda)."""
        l = self.lam(x, y)
        lx, ly = self.lam.grad(x, y)
        lxx, _, lyy = self.lam.hessian(x, y)
        return -((lxx + lyy) / l - (lx**2 + ly**2) / l**2) / l**2

    def base_laplacian_mu(self, x, y):
        return self.mu.flat_laplacian(x, y) / self.lam(x, y) ** 2


def metric_at(model, point):
    """Coordinate metric table in (x, y, t); shape (..., 3, 3)."""
    x, y = model._points(point)
    lam, mu = model.lam(x, y), model.mu(x, y)
    alpha, beta = model.connection_form(x, y)
    w = np.stack([-alpha, -beta, np.ones_like(alpha)], axis=-1)
    G = (mu**2)[..., None, None] * w[..., :, None] * w[..., None, :]
    G[..., 0, 0] += lam**2
    G[..., 1, 1] += lam**2
    return G


def frame_at(model, point):
    """Orthonormal frame (E1, E2, E3) as coordinate vectors, stacked on the
    second-to-last axis: result[..., k, :] is E_{k+1}."""
    x, y = model._points(point)
    lam, mu = model.lam(x, y), model.mu(x, y)
    a, b = model.ab(x, y)
    zero = np.zeros_like(lam)
    E1 = np.stack([1 / lam, zero, a], axis=-1)
    E2 = np.stack([zero, 1 / lam, b], axis=-1)
    E3 = np.stack([zero, zero, 1 / mu], axis=-1)
    return np.stack([E1, E2, E3], axis=-2)


def bundle_curvature_grid(model):
    """(mu/2 lambda^2)(beta_x - alpha_y) at every node, by finite differences
    of the node connection data."""
    d = model.domain
    alpha, beta = model.node_connection
    return bundle_curvature_from_connection(d, model.lam.sample(d), model.mu.sample(d), alpha, beta)


def bundle_curvature_from_connection(domain, lam, mu, alpha, beta):
    """(mu/2 lambda^2)(beta_x - alpha_y) from node arrays of explicit
    connection data ``dt - alpha dx - beta dy``."""
    curl = d_dx(beta, domain) - d_dy(alpha, domain)
    return mu * curl / (2 * lam**2)


def bundle_curvature_check(model, point, method="analytic"):
    """Bundle curvature recomputed from (lambda, a, b, mu).

    ``method="analytic"`` differentiates eta under the integral sign (radial
    models); ``method="grid"`` differentiates the sampled connection data on
    the model grid and interpolates, which converges like h^2.
    """
    x, y = model._points(point)
    if method == "analytic" and model.z_source == RADIAL_ETA:
        ex, ey = model.eta_grad(x, y)
        curl = 2 * model.eta(x, y) + x * ex + y * ey
        return model.mu(x, y) * curl / (2 * model.lam(x, y) ** 2)
    d = model.domain
    if not d.periodic:
        fi = (x - d.bounds[0]) / d.hx
        fj = (y - d.bounds[2]) / d.hy
        ok = interior_mask(d, 2)
        i0 = np.clip(np.floor(fi).astype(int), 0, d.nx - 2)
        j0 = np.clip(np.floor(fj).astype(int), 0, d.ny - 2)
        corners = ok[i0, j0] & ok[i0 + 1, j0] & ok[i0, j0 + 1] & ok[i0 + 1, j0 + 1]
        if not np.all(corners):
            raise BoundaryTooClose("point too close to the boundary for grid differences")
    return interpolate(bundle_curvature_grid(model), d, x, y)


def lie_brackets(model, point, check=True):
    """Frame components of [E1,E2], [E1,E3], [E2,E3]; shape (..., 3, 3)."""
    x, y = model._points(point, check)
    g = model._derivs(x, y)
    l, m = g["l"], g["m"]
    zero = np.zeros_like(l)
    b12 = np.stack([g["ly"] / l**2, -g["lx"] / l**2, 2 * g["t"]], axis=-1)
    b13 = np.stack([zero, zero, -g["mx"] / (l * m)], axis=-1)
    b23 = np.stack([zero, zero, -g["my"] / (l * m)], axis=-1)
    return np.stack([b12, b13, b23], axis=-2)


def connection_coeffs(model, point, check=True):
    """Levi-Civita table: result[..., i, j, :] are the frame components of
    nabla_{E_i} E_j (indices 0, 1, 2 for E1, E2, E3)."""
    x, y = model._points(point, check)
    g = model._derivs(x, y)
    l, m, t = g["l"], g["m"], g["t"]
    p, q = g["lx"] / l**2, g["ly"] / l**2
    r, s = g["mx"] / (l * m), g["my"] / (l * m)
    z = np.zeros_like(l)
    C = np.stack(
        [
            np.stack([np.stack([z, -q, z], -1), np.stack([q, z, t], -1), np.stack([z, -t, z], -1)], -2),
            np.stack([np.stack([z, p, -t], -1), np.stack([-p, z, z], -1), np.stack([t, z, z], -1)], -2),
            np.stack([np.stack([z, -t, r], -1), np.stack([t, z, s], -1), np.stack([-r, -s, z], -1)], -2),
        ],
        -3,
    )
    return C


def sectional_curvatures(model, point, check=True):
    """Curvatures of the planes (E1,E2), (E1,E3), (E2,E3)."""
    x, y = model._points(point, check)
    g = model._derivs(x, y)
    l, m, t = g["l"], g["m"], g["t"]
    KM = model.base_gaussian_curvature(x, y)
    e1e1_mu = g["mxx"] / l**2 - g["lx"] * g["mx"] / l**3
    e2e2_mu = g["myy"] / l**2 - g["ly"] * g["my"] / l**3
    k12 = KM - 3 * t**2
    k13 = t**2 - e1e1_mu / m - g["ly"] * g["my"] / (l**3 * m)
    k23 = t**2 - e2e2_mu / m - g["lx"] * g["mx"] / (l**3 * m)
    return k12, k13, k23


def scalar_curvature(model, point, check=True):
    """S = 2 (K_M - tau^2 - lap(mu)/mu), as a function on the base."""
    x, y = model._points(point, check)
    KM = model.base_gaussian_curvature(x, y)
    return 2 * (KM - model.tau(x, y) ** 2 - model.base_laplacian_mu(x, y) / model.mu(x, y))
