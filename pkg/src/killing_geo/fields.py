"""Planar domains, their grids, and scalar fields sampled on them.

Arrays are indexed ``[i, j]`` with ``i`` along x and ``j`` along y.  Torus
grids hold ``nx`` nodes ``x0 + i*hx`` with ``hx = (x1 - x0)/nx`` (the node at
``x1`` is identified with ``x0``); rectangle and disk grids include both
end points, ``hx = (x1 - x0)/(nx - 1)``.  A disk of radius R is centred at
the origin and gridded on its bounding square.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import sympy as sp
from scipy import ndimage

from .errors import NotPeriodic, OutOfDomain, ParseError
from .expr import X, Y, parse_expression

DISK, RECTANGLE, TORUS = "disk", "rectangle", "torus"


@dataclass(frozen=True)
class Domain2D:
    kind: str
    bounds: tuple
    nx: int
    ny: int
    radius: float = None

    def __post_init__(self):
        if self.kind not in (DISK, RECTANGLE, TORUS):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        x0, x1, y0, y1 = self.bounds
        if not (x1 > x0 and y1 > y0):
            raise ValueError(f"degenerate bounds {self.bounds}")
        if min(self.nx, self.ny) < 3:
            raise ValueError("grids need at least 3 nodes per direction")

    @classmethod
    def disk(cls, radius=1.0, n=128):
        r = float(radius)
        return cls(DISK, (-r, r, -r, r), int(n), int(n), r)

    @classmethod
    def rectangle(cls, bounds, nx, ny=None):
        return cls(RECTANGLE, tuple(float(b) for b in bounds), int(nx), int(ny or nx))

    @classmethod
    def torus(cls, bounds=(0.0, 1.0, 0.0, 1.0), nx=64, ny=None):
        return cls(TORUS, tuple(float(b) for b in bounds), int(nx), int(ny or nx))

    def with_resolution(self, nx, ny=None):
        return Domain2D(self.kind, self.bounds, int(nx), int(ny or nx), self.radius)

    @property
    def periodic(self):
        return self.kind == TORUS

    @property
    def hx(self):
        x0, x1 = self.bounds[:2]
        return (x1 - x0) / (self.nx if self.periodic else self.nx - 1)

    @property
    def hy(self):
        y0, y1 = self.bounds[2:]
        return (y1 - y0) / (self.ny if self.periodic else self.ny - 1)

    @property
    def shape(self):
        return (self.nx, self.ny)

    @cached_property
    def x(self):
        return self.bounds[0] + self.hx * np.arange(self.nx)

    @cached_property
    def y(self):
        return self.bounds[2] + self.hy * np.arange(self.ny)

    def mesh(self):
        return np.meshgrid(self.x, self.y, indexing="ij")

    def cell_centers(self):
        """Centres of the grid cells (nx x ny on a torus, (nx-1) x (ny-1) otherwise)."""
        m = 0 if self.periodic else 1
        xc = self.x[: self.nx - m] + 0.5 * self.hx
        yc = self.y[: self.ny - m] + 0.5 * self.hy
        return np.meshgrid(xc, yc, indexing="ij")

    @property
    def area(self):
        if self.kind == DISK:
            return np.pi * self.radius**2
        x0, x1, y0, y1 = self.bounds
        return (x1 - x0) * (y1 - y0)

    def inside(self, x, y, tol=1e-12):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == TORUS:
            return np.ones(np.broadcast(x, y).shape, dtype=bool)
        if self.kind == DISK:
            return np.hypot(x, y) <= self.radius * (1.0 + tol)
        x0, x1, y0, y1 = self.bounds
        ex, ey = tol * (x1 - x0), tol * (y1 - y0)
        return (x >= x0 - ex) & (x <= x1 + ex) & (y >= y0 - ey) & (y <= y1 + ey)

    @cached_property
    def mask(self):
        X_, Y_ = self.mesh()
        return self.inside(X_, Y_)

    def wrap(self, x, y):
        """Reduce torus coordinates into the fundamental rectangle."""
        if not self.periodic:
            return np.asarray(x, float), np.asarray(y, float)
        x0, x1, y0, y1 = self.bounds
        return x0 + np.mod(np.asarray(x) - x0, x1 - x0), y0 + np.mod(np.asarray(y) - y0, y1 - y0)

    def check_inside(self, x, y):
        if not np.all(self.inside(x, y)):
            raise OutOfDomain(f"point(s) outside the {self.kind} domain")

    def refinement_ladder(self, sizes):
        return [self.with_resolution(n) for n in sizes]


# -- grid calculus ------------------------------------------------------------

def d_dx(values, domain):
    """Second-order x-derivative: central inside, one-sided at open edges."""
    if domain.periodic:
        return (np.roll(values, -1, 0) - np.roll(values, 1, 0)) / (2 * domain.hx)
    return np.gradient(values, domain.hx, axis=0, edge_order=2)


def d_dy(values, domain):
    if domain.periodic:
        return (np.roll(values, -1, 1) - np.roll(values, 1, 1)) / (2 * domain.hy)
    return np.gradient(values, domain.hy, axis=1, edge_order=2)


def interior_mask(domain, width=1):
    """Mask of nodes at least ``width`` nodes away from an open grid edge and
    whose full ``width`` neighbourhood lies in the domain."""
    inner = domain.mask.copy()
    if domain.periodic:
        return inner
    for _ in range(width):
        shrunk = inner.copy()
        shrunk[0, :] = shrunk[-1, :] = shrunk[:, 0] = shrunk[:, -1] = False
        shrunk[1:-1, 1:-1] &= (
            inner[2:, 1:-1] & inner[:-2, 1:-1] & inner[1:-1, 2:] & inner[1:-1, :-2]
        )
        inner = shrunk
    return inner


def interpolate(values, domain, x, y):
    """Bilinear interpolation of node values at arbitrary points."""
    x, y = domain.wrap(x, y)
    fi = (np.asarray(x, float) - domain.bounds[0]) / domain.hx
    fj = (np.asarray(y, float) - domain.bounds[2]) / domain.hy
    mode = "grid-wrap" if domain.periodic else "nearest"
    coords = np.array([np.atleast_1d(fi).ravel(), np.atleast_1d(fj).ravel()])
    out = ndimage.map_coordinates(values, coords, order=1, mode=mode)
    return out.reshape(np.shape(fi))


# -- scalar fields ------------------------------------------------------------

def _as_array(value, shape):
    arr = np.asarray(value, dtype=float)
    if arr.shape != shape:
        arr = np.broadcast_to(arr, shape).copy()
    return arr


class ScalarField2D:
    """A real field on the plane: an expression tree or a grid sample.

    Analytic fields are built from the expression language (``parse``) or a
    sympy expression in ``x``, ``y``; their derivatives are exact.  Grid
    fields carry node values on a Domain2D and are interpolated bilinearly;
    their derivatives are second-order finite differences.
    """

    def __init__(self, expr=None, values=None, domain=None, source=None):
        if (expr is None) == (values is None):
            raise ValueError("give exactly one of expr or values")
        if values is not None:
            if domain is None:
                raise ValueError("grid fields need a domain")
            values = np.array(values, dtype=float)
            if values.shape != domain.shape:
                raise ValueError(f"grid shape {values.shape} != domain {domain.shape}")
            values.setflags(write=False)
        else:
            expr = sp.sympify(expr)
            extra = expr.free_symbols - {X, Y}
            if extra:
                raise ParseError(f"unknown symbols {sorted(map(str, extra))}")
        self._expr = expr
        self._values = values
        self.domain = domain
        self.source = source

    @classmethod
    def parse(cls, text):
        return cls(expr=parse_expression(text), source=text)

    @classmethod
    def constant(cls, c):
        return cls(expr=sp.Float(c) if not float(c).is_integer() else sp.Integer(int(c)))

    @classmethod
    def from_grid(cls, values, domain):
        return cls(values=values, domain=domain)

    @classmethod
    def coerce(cls, field):
        if isinstance(field, ScalarField2D):
            return field
        if isinstance(field, str):
            return cls.parse(field)
        if isinstance(field, (int, float)):
            return cls.constant(field)
        return cls(expr=field)

    @property
    def kind(self):
        return "analytic" if self._expr is not None else "grid"

    @property
    def is_analytic(self):
        return self._expr is not None

    @property
    def expr(self):
        return self._expr

    @property
    def values(self):
        return self._values

    @property
    def is_constant(self):
        return self.is_analytic and not self._expr.free_symbols

    def __repr__(self):
        if self.is_analytic:
            return f"ScalarField2D({self._expr})"
        return f"ScalarField2D(grid {self._values.shape})"

    # analytic machinery

    _ORDERS = {"f": (), "fx": (X,), "fy": (Y,), "fxx": (X, X), "fxy": (X, Y), "fyy": (Y, Y)}

    @cached_property
    def _derivs(self):
        return {}

    def _derivative(self, key):
        """Lambdified derivative, built on first use (symbolic
        differentiation of large expressions is the expensive part)."""
        table = self._derivs
        if key not in table:
            e = sp.diff(self._expr, *self._ORDERS[key]) if self._ORDERS[key] else self._expr
            table[key] = sp.lambdify((X, Y), e, modules="numpy")
        return table[key]

    def _eval(self, key, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        with np.errstate(all="ignore"):
            return _as_array(self._derivative(key)(x, y), shape)

    # grid machinery

    @cached_property
    def _grid_derivs(self):
        v, d = self._values, self.domain
        fx, fy = d_dx(v, d), d_dy(v, d)
        return {
            "f": v,
            "fx": fx,
            "fy": fy,
            "fxx": d_dx(fx, d),
            "fxy": 0.5 * (d_dy(fx, d) + d_dx(fy, d)),
            "fyy": d_dy(fy, d),
        }

    def _grid_eval(self, key, x, y):
        return interpolate(self._grid_derivs[key], self.domain, x, y)

    def _get(self, key, x, y):
        if self.is_analytic:
            return self._eval(key, x, y)
        return self._grid_eval(key, x, y)

    # public evaluation

    def __call__(self, x, y):
        return self._get("f", x, y)

    def grad(self, x, y):
        return self._get("fx", x, y), self._get("fy", x, y)

    def hessian(self, x, y):
        return self._get("fxx", x, y), self._get("fxy", x, y), self._get("fyy", x, y)

    def flat_laplacian(self, x, y):
        fxx, _, fyy = self.hessian(x, y)
        return fxx + fyy

    def sample(self, domain, where="nodes"):
        """Values at grid nodes (or cell centres); NaN where undefined."""
        if where == "nodes":
            X_, Y_ = domain.mesh()
        else:
            X_, Y_ = domain.cell_centers()
        if not self.is_analytic:
            if where == "nodes" and domain == self.domain:
                return np.array(self._values)
            return self(X_, Y_)
        return self(X_, Y_)

    def sample_derivatives(self, domain):
        """Dict of node arrays f, fx, fy, fxx, fxy, fyy on ``domain``."""
        if not self.is_analytic and domain == self.domain:
            return {k: np.array(v) for k, v in self._grid_derivs.items()}
        X_, Y_ = domain.mesh()
        return {k: self._get(k, X_, Y_) for k in ("f", "fx", "fy", "fxx", "fxy", "fyy")}

    def check_periodic(self, domain, tol=1e-10):
        """Compare samples on opposite edges of a torus rectangle."""
        if not self.is_analytic:
            return
        x0, x1, y0, y1 = domain.bounds
        ys = np.linspace(y0, y1, 4 * domain.ny + 1)
        xs = np.linspace(x0, x1, 4 * domain.nx + 1)
        gap = max(
            np.max(np.abs(self(x0, ys) - self(x1, ys))),
            np.max(np.abs(self(xs, y0) - self(xs, y1))),
        )
        if not gap <= tol:
            raise NotPeriodic(f"field {self._expr} is not periodic on {domain.bounds} (gap {gap:.2e})")


def combine_expr(fn, *fields):
    """Apply ``fn`` to analytic fields symbolically; returns None if any field
    is grid-sampled."""
    if all(f.is_analytic for f in fields):
        return ScalarField2D(expr=fn(*(f.expr for f in fields)))
    return None
