"""Independent geometry oracles built only from the coordinate metric.

Everything here differentiates ``metric_at`` (or an analytic graph) with
fourth-order central differences and uses the textbook coordinate formulas
for the Levi-Civita connection and the Riemann tensor.  None of it reuses
the frame tables or grid operators of the package.
"""

import numpy as np
import sympy as sp

from killing_geo.expr import X, Y
from killing_geo.model import frame_at, metric_at

H_METRIC = 1e-4
H_OUTER = 2e-3


def _d4(f, x, y, h):
    """(df/dx, df/dy) by the five-point stencil; f returns arrays."""
    fx = (-f(x + 2 * h, y) + 8 * f(x + h, y) - 8 * f(x - h, y) + f(x - 2 * h, y)) / (12 * h)
    fy = (-f(x, y + 2 * h) + 8 * f(x, y + h) - 8 * f(x, y - h) + f(x, y - 2 * h)) / (12 * h)
    return fx, fy


def metric(model, x, y):
    return metric_at(model, (np.float64(x), np.float64(y)))


def christoffel(model, x, y, h=H_METRIC):
    """Gamma[k, i, j] in coordinates (x, y, t); the metric is t-invariant."""
    g = metric(model, x, y)
    gx, gy = _d4(lambda a, b: metric(model, a, b), x, y, h)
    dg = np.stack([gx, gy, np.zeros((3, 3))])  # dg[l, i, j] = d_l g_ij
    ginv = np.linalg.inv(g)
    # Gamma_{l,ij} = (d_i g_jl + d_j g_il - d_l g_ij) / 2
    first = 0.5 * (np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg)
    return np.einsum("kl,lij->kij", ginv, first)


def riemann(model, x, y, h=H_OUTER):
    """R[l, k, i, j] with R(d_i, d_j) d_k = R[l, k, i, j] d_l."""
    G = christoffel(model, x, y)
    Gx, Gy = _d4(lambda a, b: christoffel(model, a, b), x, y, h)
    dG = np.stack([Gx, Gy, np.zeros((3, 3, 3))])  # dG[i, l, j, k] = d_i Gamma^l_jk
    R = (
        np.einsum("iljk->lkij", dG)
        - np.einsum("jlik->lkij", dG)
        + np.einsum("lim,mjk->lkij", G, G)
        - np.einsum("ljm,mik->lkij", G, G)
    )
    return R


def sectional(model, x, y, u, v, R=None):
    R = riemann(model, x, y) if R is None else R
    g = metric(model, x, y)
    Ruvv = np.einsum("lkij,i,j,k->l", R, u, v, v)
    num = Ruvv @ g @ u
    den = (u @ g @ u) * (v @ g @ v) - (u @ g @ v) ** 2
    return num / den


def ricci(model, x, y, R=None):
    R = riemann(model, x, y) if R is None else R
    return np.einsum("lklj->kj", R)


def scalar(model, x, y):
    return float(np.einsum("ij,ij->", np.linalg.inv(metric(model, x, y)), ricci(model, x, y)))


def frame(model, x, y):
    return frame_at(model, (np.float64(x), np.float64(y)))


def frame_connection(model, x, y, h=H_METRIC):
    """C[i, j, m] = <nabla_{E_i} E_j, E_m> from coordinates."""
    E = frame(model, x, y)
    Ex, Ey = _d4(lambda a, b: frame(model, a, b), x, y, h)
    dE = np.stack([Ex, Ey, np.zeros((3, 3))])  # dE[a, j, k] = d_a E_j^k
    G = christoffel(model, x, y)
    g = metric(model, x, y)
    cov = np.einsum("ia,ajk->ijk", E, dE) + np.einsum("kab,ia,jb->ijk", G, E, E)
    return np.einsum("ijk,kl,ml->ijm", cov, g, E)


def bracket(model, x, y, i, j, h=H_METRIC):
    """Frame components of [E_i, E_j] from coordinate derivatives."""
    E = frame(model, x, y)
    Ex, Ey = _d4(lambda a, b: frame(model, a, b), x, y, h)
    dE = np.stack([Ex, Ey, np.zeros((3, 3))])
    vec = E[i] @ dE[:, j, :] - E[j] @ dE[:, i, :]
    g = metric(model, x, y)
    return E @ g @ vec


# -- graphs -------------------------------------------------------------------

class AnalyticGraph:
    """Graph t = u(x, y) with exact derivatives from a sympy expression."""

    def __init__(self, expr):
        e = sp.sympify(expr, locals={"x": X, "y": Y}) if isinstance(expr, str) else expr
        ders = [e, sp.diff(e, X), sp.diff(e, Y), sp.diff(e, X, 2), sp.diff(e, X, Y), sp.diff(e, Y, 2)]
        self._f = [sp.lambdify((X, Y), d, "numpy") for d in ders]

    def jet(self, x, y):
        return [float(f(x, y)) for f in self._f]


def graph_frame(model, graph, x, y):
    """Tangents F1, F2, upward normal N, induced metric h, nu."""
    u, ux, uy, *_ = graph.jet(x, y)
    g = metric(model, x, y)
    F = np.array([[1.0, 0.0, ux], [0.0, 1.0, uy]])
    dphi = np.array([-ux, -uy, 1.0])
    ginv = np.linalg.inv(g)
    n2 = dphi @ ginv @ dphi
    N = ginv @ dphi / np.sqrt(n2)
    h = F @ g @ F.T
    nu = N @ g @ np.array([0.0, 0.0, 1.0])
    return F, N, h, nu


def graph_second_form(model, graph, x, y):
    _, _, _, uxx, uxy, uyy = graph.jet(x, y)
    F, N, h, nu = graph_frame(model, graph, x, y)
    G = christoffel(model, x, y)
    g = metric(model, x, y)
    hess = np.array([[uxx, uxy], [uxy, uyy]])
    II = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            cov = np.array([0.0, 0.0, hess[i, j]]) + np.einsum("kab,a,b->k", G, F[i], F[j])
            II[i, j] = cov @ g @ N
    return II, h, N


def graph_mean_curvature(model, graph, x, y):
    II, h, _ = graph_second_form(model, graph, x, y)
    return 0.5 * np.trace(np.linalg.solve(h, II))


def graph_nu(model, graph, x, y):
    return graph_frame(model, graph, x, y)[3]


def jacobi_potential(model, graph, x, y):
    """|A|^2 + Ric(N, N)."""
    II, h, N = graph_second_form(model, graph, x, y)
    S = np.linalg.solve(h, II)
    return float(np.trace(S @ S) + N @ ricci(model, x, y) @ N)


def jacobi_apply(model, graph, f, x, y, step=2e-3):
    """Laplace-Beltrami of f (a callable of x, y) plus the Jacobi potential."""

    def induced(a, b):
        return graph_frame(model, graph, a, b)[2]

    def flux(a, b):
        h = induced(a, b)
        hinv = np.linalg.inv(h)
        fx, fy = _d4(lambda p, q: np.array(f(p, q)), a, b, step)
        return np.sqrt(np.linalg.det(h)) * hinv @ np.array([fx, fy])

    vx, _ = _d4(lambda a, b: flux(a, b)[0], x, y, step)
    _, vy = _d4(lambda a, b: flux(a, b)[1], x, y, step)
    lap = (vx + vy) / np.sqrt(np.linalg.det(induced(x, y)))
    return lap + jacobi_potential(model, graph, x, y) * f(x, y)
