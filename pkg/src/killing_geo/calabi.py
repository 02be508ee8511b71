"""Duality between spacelike Lorentzian graphs and minimal Killing graphs.

Given ``v`` with ``|grad v| < mu`` solving

    div( grad v / (mu sqrt(mu^2 - |grad v|^2)) ) = 2 tau / mu,

the field ``G = -J grad v / (mu sqrt(mu^2 - |grad v|^2))`` differs from a
gradient by ``Z``; integrating ``G + Z`` gives a section ``u`` with
``Gu = G`` whose graph is minimal.  Norms and divergences use the conformal
base metric, so in coordinates ``grad v = grad0 v / lambda^2`` and
``|grad v| = |grad0 v| / lambda``.
"""

from dataclasses import dataclass

import numpy as np
import sympy as sp
from scipy.integrate import cumulative_simpson

from .errors import GridMismatch, NotClosed, NotSpacelike
from .expr import X, Y
from .fields import ScalarField2D, d_dx, d_dy, interior_mask
from .graphs import GraphFunction, VectorField2D, area_element_grid, mean_curvature
from .model import KillingModel


@dataclass(frozen=True)
class SpacelikeFunction:
    values: np.ndarray
    domain: object
    expr: ScalarField2D = None

    @classmethod
    def from_expr(cls, expr, domain):
        f = ScalarField2D.coerce(expr)
        Xg, Yg = domain.mesh()
        return cls(f(Xg, Yg), domain, f)

    def node_gradient(self):
        if self.expr is not None:
            Xg, Yg = self.domain.mesh()
            return self.expr.grad(Xg, Yg)
        return d_dx(self.values, self.domain), d_dy(self.values, self.domain)

    def margin(self, model):
        """min over domain nodes of mu - |grad v|."""
        d = self.domain
        vx, vy = self.node_gradient()
        m = model.mu.sample(d) - np.hypot(vx, vy) / model.lam.sample(d)
        return float(np.min(m[d.mask]))


def _coerce_v(model, v):
    if isinstance(v, SpacelikeFunction):
        if v.domain.shape != model.domain.shape:
            raise GridMismatch("v grid does not match the model grid")
        return v
    if isinstance(v, (str, ScalarField2D)) or not hasattr(v, "shape"):
        return SpacelikeFunction.from_expr(v, model.domain)
    return SpacelikeFunction(np.asarray(v, float), model.domain)


def _check_spacelike(model, v):
    margin = v.margin(model)
    if not margin > 0:
        raise NotSpacelike(f"|grad v| reaches mu (margin {margin:.3e})")
    return margin


def lorentz_operator_expr(v, lam, mu):
    """Symbolic div(grad v / (mu sqrt(mu^2 - |grad v|^2))) in the conformal
    metric, for expression fields."""
    v, lam, mu = (ScalarField2D.coerce(f).expr for f in (v, lam, mu))
    vx, vy = sp.diff(v, X), sp.diff(v, Y)
    s = sp.sqrt(mu**2 - (vx**2 + vy**2) / lam**2)
    return (sp.diff(vx / (mu * s), X) + sp.diff(vy / (mu * s), Y)) / lam**2


def manufacture_tau(v, lam=1, mu=1):
    """tau = (mu/2) * LHS(v), so that v solves the Lorentzian equation."""
    mu_f = ScalarField2D.coerce(mu)
    return ScalarField2D(expr=mu_f.expr * lorentz_operator_expr(v, lam, mu) / 2)


def manufactured_model(domain, v, lam=1, mu=1):
    return KillingModel(domain, lam=lam, tau=manufacture_tau(v, lam, mu), mu=mu)


def _lhs_grid(model, v):
    """Flux-form LHS on the node grid (NaN without a full stencil)."""
    d = model.domain
    vals = v.values
    lam = model.lam
    mu = model.mu
    vx_c, vy_c = d_dx(vals, d), d_dy(vals, d)
    # x-faces (i+1/2, j)
    xf = d.x[:-1] + 0.5 * d.hx
    Xf, Yf = np.meshgrid(xf, d.y, indexing="ij")
    fx_vx = (vals[1:] - vals[:-1]) / d.hx
    fx_vy = 0.5 * (vy_c[1:] + vy_c[:-1])
    s = np.sqrt(mu(Xf, Yf) ** 2 - (fx_vx**2 + fx_vy**2) / lam(Xf, Yf) ** 2)
    flux_x = fx_vx / (mu(Xf, Yf) * s)
    yf = d.y[:-1] + 0.5 * d.hy
    Xg, Yg = np.meshgrid(d.x, yf, indexing="ij")
    fy_vy = (vals[:, 1:] - vals[:, :-1]) / d.hy
    fy_vx = 0.5 * (vx_c[:, 1:] + vx_c[:, :-1])
    s = np.sqrt(mu(Xg, Yg) ** 2 - (fy_vx**2 + fy_vy**2) / lam(Xg, Yg) ** 2)
    flux_y = fy_vy / (mu(Xg, Yg) * s)
    out = np.full(d.shape, np.nan)
    out[1:-1, 1:-1] = (flux_x[1:, 1:-1] - flux_x[:-1, 1:-1]) / d.hx + (flux_y[1:-1, 1:] - flux_y[1:-1, :-1]) / d.hy
    return out / lam.sample(d) ** 2


def lorentz_mc_residual(model, v):
    """LHS(v) - 2 tau/mu at the nodes.

    Exact (symbolic) when v, lambda and mu are expressions, flux-form
    differences otherwise; nodes outside the domain or without a full
    stencil hold NaN.
    """
    v = _coerce_v(model, v)
    _check_spacelike(model, v)
    d = model.domain
    Xg, Yg = d.mesh()
    if v.expr is not None and model.lam.is_analytic and model.mu.is_analytic:
        lhs = ScalarField2D(expr=lorentz_operator_expr(v.expr, model.lam, model.mu))(Xg, Yg)
    else:
        lhs = _lhs_grid(model, v)
    with np.errstate(all="ignore"):
        res = lhs - 2 * model.tau.sample(d) / model.mu.sample(d)
    keep = d.mask if v.expr is not None else interior_mask(d, 1)
    return np.where(keep, res, np.nan)


def dual_gradient(model, v):
    """G = -J grad v / (mu sqrt(mu^2 - |grad v|^2)), coordinates
    (v_y, -v_x) / (lambda^2 mu s_v)."""
    v = _coerce_v(model, v)
    _check_spacelike(model, v)
    d = model.domain
    vx, vy = v.node_gradient()
    l2 = model.lam.sample(d) ** 2
    mu = model.mu.sample(d)
    with np.errstate(all="ignore"):
        s = np.sqrt(mu**2 - (vx**2 + vy**2) / l2)
        gx, gy = vy / (l2 * mu * s), -vx / (l2 * mu * s)

    if v.expr is not None:
        def evaluate(x, y):
            ux, uy = v.expr.grad(x, y)
            ll, mm = model.lam(x, y) ** 2, model.mu(x, y)
            ss = np.sqrt(mm**2 - (ux**2 + uy**2) / ll)
            return uy / (ll * mm * ss), -ux / (ll * mm * ss)
    else:
        from .fields import interpolate

        def evaluate(x, y):
            return interpolate(gx, d, x, y), interpolate(gy, d, x, y)

    return VectorField2D(evaluate, model.lam, node_values=(gx, gy))


def _d4(f, h, axis):
    """Fourth-order central difference; NaN on the two outer rings."""
    out = np.full(f.shape, np.nan)
    f = np.moveaxis(f, axis, 0)
    o = np.moveaxis(out, axis, 0)
    o[2:-2] = (-f[4:] + 8 * f[3:-1] - 8 * f[1:-3] + f[:-4]) / (12 * h)
    return out


def _cumulative(f, h, start, axis):
    """Integral of f along ``axis`` from index ``start`` (Simpson)."""
    f = np.moveaxis(f, axis, 0)
    out = np.zeros_like(f)
    fwd = f[start:]
    if fwd.shape[0] > 1:
        out[start + 1:] = cumulative_simpson(fwd, dx=h, axis=0)
    back = f[: start + 1][::-1]
    if back.shape[0] > 1:
        out[:start][::-1] = -cumulative_simpson(back, dx=h, axis=0)
    return np.moveaxis(out, 0, axis)


@dataclass(frozen=True)
class PotentialResult:
    u: GraphFunction
    curl_residual: float
    path_discrepancy: float


def integrate_potential(model, field, basepoint=(0.0, 0.0), curl_tol=1e-6, path_tol=1e-6, full=False):
    """Section u with metric gradient ``field + Z`` and ``u(basepoint) = 0``.

    In coordinates ``grad0 u = lambda^2 field + (alpha, beta)``.  The field
    must be finite on the whole bounding grid.  Raises NotClosed when the
    curl of that 1-form exceeds ``curl_tol`` or the two integration orders
    disagree by more than ``path_tol``.  With ``full`` a PotentialResult is
    returned.
    """
    d = model.domain
    if field.node_values is not None:
        fx, fy = field.node_values
    else:
        fx, fy = field(*d.mesh())
    alpha, beta = model.node_connection
    l2 = model.lam.sample(d) ** 2
    p = l2 * fx + alpha
    r = l2 * fy + beta
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(r))):
        raise ValueError("the 1-form must be finite on the whole grid")
    curl = _d4(r, d.hx, 0) - _d4(p, d.hy, 1)
    inner = interior_mask(d, 2)
    curl_res = float(np.nanmax(np.abs(np.where(inner, curl, np.nan)))) if inner.any() else 0.0
    if curl_res > curl_tol:
        raise NotClosed(f"curl residual {curl_res:.3e} exceeds {curl_tol:.1e}")
    i0 = int(np.clip(np.rint((basepoint[0] - d.bounds[0]) / d.hx), 0, d.nx - 1))
    j0 = int(np.clip(np.rint((basepoint[1] - d.bounds[2]) / d.hy), 0, d.ny - 1))
    row = _cumulative(p[:, j0], d.hx, i0, 0)
    u_rc = row[:, None] + _cumulative(r, d.hy, j0, 1)
    col = _cumulative(r[i0, :], d.hy, j0, 0)
    u_cr = col[None, :] + _cumulative(p, d.hx, i0, 0)
    mask = d.mask
    gap = float(np.max(np.abs(u_rc - u_cr)[mask]))
    if gap > path_tol:
        raise NotClosed(f"integration orders disagree by {gap:.3e}")
    u = GraphFunction(u_rc, d)
    return PotentialResult(u, curl_res, gap) if full else u


@dataclass(frozen=True)
class CalabiResult:
    u: GraphFunction
    H: np.ndarray
    identity_residual: np.ndarray
    lorentz_residual: float
    curl_residual: float
    path_discrepancy: float

    @property
    def max_H(self):
        return float(np.nanmax(np.abs(self.H)))

    @property
    def max_identity_residual(self):
        return float(np.nanmax(np.abs(self.identity_residual)))


def calabi_dual(model, v, config=None, basepoint=(0.0, 0.0), residual_tol=1e-6, curl_tol=1e-6):
    """Minimal section dual to a spacelike solution ``v``.

    ``config`` is accepted for interface parity with the solvers; the
    construction itself is direct.  Returns a CalabiResult with the section,
    its discrete mean curvature and the pointwise residual of
    ``W(u) sqrt(mu^2 - |grad v|^2) = 1`` (W from grid differences of u).
    """
    del config
    d = model.domain
    if d.periodic:
        raise ValueError("the duality needs a simply connected base")
    v = _coerce_v(model, v)
    res = lorentz_mc_residual(model, v)
    lres = float(np.nanmax(np.abs(res)))
    if lres > residual_tol:
        raise NotClosed(f"v does not solve the Lorentzian equation (residual {lres:.3e})")
    G = dual_gradient(model, v)
    pot = integrate_potential(model, G, basepoint, curl_tol=curl_tol, full=True)
    u = pot.u
    H = mean_curvature(model, u)
    vx, vy = v.node_gradient()
    with np.errstate(all="ignore"):
        sv = np.sqrt(model.mu.sample(d) ** 2 - (vx**2 + vy**2) / model.lam.sample(d) ** 2)
        ident = area_element_grid(model, u) * sv - 1.0
    ident = np.where(interior_mask(d, 1), ident, np.nan)
    return CalabiResult(u, H, ident, lres, pot.curl_residual, pot.path_discrepancy)
