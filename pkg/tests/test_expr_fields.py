import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from killing_geo.errors import NotPeriodic, OutOfDomain, ParseError
from killing_geo.expr import parse_expression
from killing_geo.fields import Domain2D, ScalarField2D, d_dx, d_dy, interior_mask, interpolate
from killing_geo.poisson import apply_periodic_laplacian, solve_periodic_poisson


def test_power_operators_agree():
    a = ScalarField2D.parse("x^2*y + 3")
    b = ScalarField2D.parse("x**2*y + 3")
    assert a(0.3, -1.2) == b(0.3, -1.2) == pytest.approx(0.09 * -1.2 + 3, abs=1e-15)


def test_power_is_right_associative_and_binds_tighter_than_minus():
    f = ScalarField2D.parse("-2^3^2")
    assert f(0, 0) == -(2.0**9)


def test_functions_and_pi():
    f = ScalarField2D.parse("sin(pi*x) + exp(y) - log(2) + sqrt(4) + cos(0)")
    assert f(0.5, 0.0) == pytest.approx(1 + 1 - np.log(2) + 2 + 1, abs=1e-14)


@pytest.mark.parametrize(
    "text, position",
    [("x + * y", 4), ("sin(x", 5), ("2 $ x", 2), ("", 0), ("foo(x)", 0), ("x y", 2)],
)
def test_parse_errors_carry_position(text, position):
    with pytest.raises(ParseError) as info:
        parse_expression(text)
    assert info.value.position == position


@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_number_literals_round_trip(v):
    assert ScalarField2D.parse(repr(v))(0.0, 0.0) == pytest.approx(v, rel=1e-15, abs=0)


@given(st.floats(-2, 2), st.floats(-2, 2))
def test_symbolic_gradient_matches_differences(x, y):
    f = ScalarField2D.parse("sin(x*y) + x^3 - exp(0.5*y)")
    h = 1e-5
    gx, gy = f.grad(x, y)
    assert gx == pytest.approx((f(x + h, y) - f(x - h, y)) / (2 * h), abs=1e-8)
    assert gy == pytest.approx((f(x, y + h) - f(x, y - h)) / (2 * h), abs=1e-8)


def test_constant_field_broadcasts():
    f = ScalarField2D.constant(2.5)
    X = np.zeros((3, 4))
    assert f(X, X).shape == (3, 4)
    assert f.is_constant


def test_domain_factories():
    d = Domain2D.disk(1.5, 33)
    assert d.bounds == (-1.5, 1.5, -1.5, 1.5)
    assert d.hx == pytest.approx(3 / 32)
    assert d.mask[16, 16] and not d.mask[0, 0]
    t = Domain2D.torus(nx=10)
    assert t.periodic and t.hx == pytest.approx(0.1)
    assert t.x[-1] == pytest.approx(0.9)
    r = Domain2D.rectangle((0, 2, 0, 1), 21, 11)
    assert (r.hx, r.hy) == pytest.approx((0.1, 0.1))
    assert r.with_resolution(41).shape == (41, 41)


def test_torus_wraps_points_and_disk_rejects_outside():
    t = Domain2D.torus(nx=8)
    x, y = t.wrap(np.array([1.25, -0.25]), np.array([2.5, 0.5]))
    assert np.allclose(x, [0.25, 0.75]) and np.allclose(y, [0.5, 0.5])
    with pytest.raises(OutOfDomain):
        Domain2D.disk(1.0, 16).check_inside(0.9, 0.9)


def test_central_differences_exact_on_quadratics():
    d = Domain2D.rectangle((-1, 1, -1, 1), 17)
    X, Y = d.mesh()
    f = 3 * X**2 - X * Y + 2 * Y**2
    assert np.allclose(d_dx(f, d), 6 * X - Y, atol=1e-12)
    assert np.allclose(d_dy(f, d), -X + 4 * Y, atol=1e-12)


def test_periodic_differences_converge_at_second_order():
    errs = []
    for n in (32, 64, 128):
        d = Domain2D.torus(nx=n)
        X, Y = d.mesh()
        errs.append(np.max(np.abs(d_dx(np.sin(2 * np.pi * X), d) - 2 * np.pi * np.cos(2 * np.pi * X))))
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.02)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.02)


def test_interior_mask_needs_full_stencil():
    d = Domain2D.disk(1.0, 21)
    m1, m2 = interior_mask(d, 1), interior_mask(d, 2)
    assert np.all(m2 <= m1) and np.all(m1 <= d.mask)
    i, j = np.argwhere(m1)[0]
    assert d.mask[i - 1, j] and d.mask[i + 1, j] and d.mask[i, j - 1] and d.mask[i, j + 1]


def test_interpolate_reproduces_bilinear_functions():
    d = Domain2D.rectangle((0, 1, 0, 2), 11, 21)
    X, Y = d.mesh()
    v = 1 + 2 * X - Y + 0.5 * X * Y
    x, y = np.array([0.33, 0.71]), np.array([1.27, 0.05])
    assert np.allclose(interpolate(v, d, x, y), 1 + 2 * x - y + 0.5 * x * y, atol=1e-13)


def test_periodicity_check():
    d = Domain2D.torus(nx=16)
    ScalarField2D.parse("sin(2*pi*x)").check_periodic(d)
    with pytest.raises(NotPeriodic):
        ScalarField2D.parse("x").check_periodic(d)


def test_grid_field_from_values():
    d = Domain2D.torus(nx=16)
    X, Y = d.mesh()
    f = ScalarField2D.from_grid(np.cos(2 * np.pi * Y), d)
    assert not f.is_analytic
    assert f.sample(d) == pytest.approx(np.cos(2 * np.pi * Y))


def test_periodic_poisson_solver():
    d = Domain2D.torus(nx=48, ny=32)
    X, Y = d.mesh()
    rhs = np.sin(2 * np.pi * X) * np.cos(4 * np.pi * Y) + 0.3 * np.cos(2 * np.pi * Y)
    psi, res = solve_periodic_poisson(rhs, d.hx, d.hy)
    assert res < 1e-10
    assert abs(psi.mean()) < 1e-12
    assert np.max(np.abs(apply_periodic_laplacian(psi, d.hx, d.hy) - rhs)) < 1e-10
