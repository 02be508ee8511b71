from fractions import Fraction

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from helpers import rates
from killing_geo.errors import DegenerateFrame
from killing_geo.homogeneous import (
    QuotientSpec,
    commutator,
    conformal_strip,
    exp_matrix,
    nil3_loop_distance_ode,
    nil3_quotient_holonomy,
    semidirect_bundle_curvature,
    semidirect_tau_mu,
)

NIL = [[0, 1], [0, 0]]
SOL = [[1, 0], [0, -1]]
ZS = np.linspace(-2, 2, 17)

entries = st.floats(-2, 2, allow_nan=False)
matrices = st.lists(entries, min_size=4, max_size=4).map(lambda v: np.reshape(v, (2, 2)))


def test_exp_examples():
    for z in ZS:
        assert np.array_equal(exp_matrix(np.zeros((2, 2)), z), np.eye(2))
        c, s = np.cos(z), np.sin(z)
        assert np.allclose(exp_matrix([[0, -1], [1, 0]], z), [[c, -s], [s, c]], rtol=0, atol=1e-15)
        assert np.allclose(exp_matrix(NIL, z), [[1, z], [0, 1]], rtol=0, atol=1e-15)


@given(matrices, st.floats(-1.5, 1.5))
def test_exp_matches_pade(A, z):
    ref = scipy.linalg.expm(z * A)
    assert np.max(np.abs(exp_matrix(A, z) - ref)) <= 1e-12 * max(1.0, np.max(np.abs(ref)))


@given(matrices, st.floats(-1, 1), st.floats(-1, 1))
def test_semigroup_and_determinant(A, z1, z2):
    lhs = exp_matrix(A, z1 + z2)
    rhs = exp_matrix(A, z1) @ exp_matrix(A, z2)
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * max(1.0, np.max(np.abs(lhs)))
    d = np.exp(z1 * np.trace(A))
    assert abs(np.linalg.det(exp_matrix(A, z1)) - d) <= 1e-10 * max(1.0, d)


@pytest.mark.parametrize("eps", [0.0, 1e-9, -1e-9, 1e-7, 1e-5, -1e-5])
def test_exp_near_discriminant_zero(eps):
    A = np.array([[0.3, 1.0], [eps, 0.3]])
    for z in (-1.0, 0.4, 2.0):
        ref = scipy.linalg.expm(z * A)
        assert np.max(np.abs(exp_matrix(A, z) - ref)) <= 1e-12 * np.max(np.abs(ref))


def test_tau_mu_examples():
    for z in ZS:
        assert semidirect_tau_mu(np.zeros((2, 2)), z) == (0.0, 1.0)
        two, mu = semidirect_tau_mu(NIL, z)
        assert two == pytest.approx(1.0, abs=1e-12) and mu == pytest.approx(1.0, abs=1e-12)
        tau, mu = semidirect_bundle_curvature(NIL, z)
        assert tau == pytest.approx(0.5, abs=1e-12) and mu == pytest.approx(1.0, abs=1e-12)
        two, mu = semidirect_tau_mu(SOL, z)
        assert abs(two) <= 1e-12 and mu == pytest.approx(np.exp(-z), rel=1e-12)
        tau, mu = semidirect_bundle_curvature(SOL, z)
        assert abs(tau) <= 1e-12 and mu == pytest.approx(np.exp(-z), rel=1e-12)


def test_heisenberg_presentation_is_homogeneous():
    vals = np.array([semidirect_tau_mu(NIL, z) for z in np.linspace(-5, 5, 41)])
    assert np.var(vals[:, 0]) < 1e-12 and np.var(vals[:, 1]) < 1e-12


def test_degenerate_frame():
    # a matrix exponential always has positive determinant, so patch one in
    from killing_geo import homogeneous as hom

    orig = hom.exp_matrix
    hom.exp_matrix = lambda A, z: np.array([[1.0, 0.0], [0.0, -1.0]])
    try:
        with pytest.raises(DegenerateFrame):
            semidirect_tau_mu(NIL, 0.0)
        with pytest.raises(DegenerateFrame):
            semidirect_bundle_curvature(NIL, 0.0)
    finally:
        hom.exp_matrix = orig


@given(matrices, st.floats(-1, 1))
def test_display_forms_agree_when_unimodular_base(A, z):
    # trace-free A has unit determinant, so both mu formulas coincide and the
    # two tau routes differ by the factor sqrt(rho)
    A = A - 0.5 * np.trace(A) * np.eye(2)
    two, mu_d = semidirect_tau_mu(A, z)
    tau, mu = semidirect_bundle_curvature(A, z)
    a = exp_matrix(A, z)
    rho = a[1, 1] ** 2 + a[1, 0] ** 2
    assert mu == pytest.approx(mu_d, rel=1e-9)
    assert mu == pytest.approx(np.sqrt(rho), rel=1e-9)
    assert tau == pytest.approx(0.5 * mu * np.sqrt(rho) * two, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("A", [NIL, SOL, [[0.5, 1.0], [-0.3, 0.2]], [[0.2, -0.7], [0.9, -0.1]]])
def test_strip_cross_validation(A):
    errs = []
    for n in (33, 65, 129):
        s = conformal_strip(A, (-0.5, 0.5), n)
        ref = np.array([semidirect_bundle_curvature(A, z)[0] for z in s.z])
        errs.append(np.nanmax(np.abs(s.bundle_curvature() - ref[:, None])))
        mu = np.array([semidirect_bundle_curvature(A, z)[1] for z in s.z])
        assert np.allclose(s.mu[:, 0], mu, rtol=1e-12)
    errs = np.array(errs)
    assert errs[-1] < 1e-4
    if errs[0] > 1e-10:
        assert np.all(rates(errs) > 3.5)


# -- Heisenberg quotients ----------------------------------------------------------

def test_quotient_examples():
    assert nil3_quotient_holonomy(QuotientSpec(1.0)) == (2.0, 2.0)
    assert nil3_quotient_holonomy(QuotientSpec(1.0, a=2.0)) == (2.0, 0.0)


def test_quotients_are_distinguished_by_a():
    d1 = nil3_quotient_holonomy(QuotientSpec(0.75, a=0.1, b=0.3))[1]
    d2 = nil3_quotient_holonomy(QuotientSpec(0.75, a=0.4, b=0.3))[1]
    assert d1 != d2


@given(
    st.fractions(Fraction(1, 100), 10),
    st.fractions(-5, 5),
    st.fractions(-5, 5),
)
def test_commutator_is_exact_vertical_translation(t, a, b):
    c = commutator(QuotientSpec(t, a, b))
    assert (c.p, c.q, c.cx, c.cy) == (0, 0, 0, 0)
    assert c.c0 == 2 * t


def test_tau_must_be_positive():
    for t in (0.0, -1.0):
        with pytest.raises(ValueError):
            QuotientSpec(t)


@pytest.mark.parametrize("t,a", [(1.0, 0.0), (1.0, 0.5), (0.6, 0.25), (2.0, 3.0)])
def test_loop_distance_from_lift(t, a):
    spec = QuotientSpec(t, a)
    expected = np.mod(nil3_quotient_holonomy(spec)[1], 2 * t)
    got = nil3_loop_distance_ode(spec)
    gap = abs(got - expected)
    assert min(gap, 2 * t - gap) < 1e-9
