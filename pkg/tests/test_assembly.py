import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chfem import assembly
from chfem.fespace import FeField, interpolate
from chfem.harness import space_for
from chfem.model import b_eval, f_eval


def test_mass_of_one(space0):
    M = assembly.mass_matrix(space0)
    one = np.ones(space0.dof_count)
    assert one @ (M @ one) == pytest.approx(1.0, abs=1e-13)


def test_stiffness_kernel(space0):
    K = assembly.stiffness_matrix(space0)
    assert np.abs(K @ np.ones(space0.dof_count)).max() < 1e-12


def test_symmetric_positive(space0, rng):
    for A in (assembly.mass_matrix(space0), assembly.stiffness_matrix(space0), assembly.h1_gram(space0)):
        assert abs(A - A.T).max() < 1e-15
    v = rng.standard_normal(space0.dof_count)
    assert v @ (assembly.mass_matrix(space0) @ v) > 0
    assert v @ (assembly.stiffness_matrix(space0) @ v) >= 0


def test_mass_matches_analytic_product(space1):
    u = interpolate(space1, lambda x, y: np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y))
    M = assembly.mass_matrix(space1)
    assert u.coeffs @ (M @ u.coeffs) == pytest.approx(0.25, rel=1e-3)


def test_stiffness_sin_fourth_order():
    errs = []
    for k in range(3):
        s = space_for(k)
        u = interpolate(s, lambda x, y: np.sin(2 * np.pi * x))
        errs.append(abs(u.coeffs @ (assembly.stiffness_matrix(s) @ u.coeffs) - 2 * np.pi**2))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 3.7), orders


def test_weighted_stiffness_constant(space0, params):
    phi = FeField(space0, np.full(space0.dof_count, 0.4))
    B = assembly.mobility_stiffness(space0, phi, params)
    K = assembly.stiffness_matrix(space0)
    assert abs(B - b_eval(params, 0.4) * K).max() < 1e-13
    W = assembly.weighted_stiffness(space0, phi, lambda v: np.ones_like(v))
    assert abs(W - K).max() < 1e-14


def test_weighted_stiffness_lower_bound(space0, params, rng):
    phi = FeField(space0, rng.uniform(-1.5, 1.5, space0.dof_count))
    B = assembly.mobility_stiffness(space0, phi, params)
    assert abs(B - B.T).max() < 1e-14
    K = assembly.stiffness_matrix(space0)
    u = rng.standard_normal(space0.dof_count)
    assert u @ (B @ u) >= params.b_bounds[0] * (u @ (K @ u)) - 1e-12


def test_nonlinear_load_roots(space0, params):
    for c in (0.99, -0.99, 0.0):
        phi = FeField(space0, np.full(space0.dof_count, c))
        assert np.abs(assembly.nonlinear_load(space0, phi, params, 1)).max() < 1e-14


def test_nonlinear_load_total_against_fine_quadrature(space0, params, rng):
    phi = FeField(space0, rng.uniform(-1, 1, space0.dof_count))
    load = assembly.nonlinear_load(space0, phi, params, 1)
    # independent path: a much finer rule on the same piecewise polynomial
    from chfem.fespace import QuadratureData
    from chfem.quadrature import collapsed_gauss
    q = space0._quad(collapsed_gauss(20))
    assert isinstance(q, QuadratureData)
    ref = np.sum(q.weights * f_eval(params, space0.values_at_quad(phi.coeffs, q), 1))
    assert load.sum() == pytest.approx(ref, rel=1e-12, abs=1e-13)


def test_mobility_jacobian_matches_finite_difference(space0, params, rng):
    phi = rng.uniform(-1, 1, space0.dof_count)
    mu = rng.standard_normal(space0.dof_count)
    dphi = rng.standard_normal(space0.dof_count)
    q = space0.quad_nonlin
    w = b_eval(params, space0.values_at_quad(phi, q), 1)
    J = assembly.mobility_jacobian_qp(space0, w, mu)
    eps = 1e-6

    def apply(p):
        return assembly.mobility_stiffness(space0, FeField(space0, p), params) @ mu

    fd = (apply(phi + eps * dphi) - apply(phi - eps * dphi)) / (2 * eps)
    np.testing.assert_allclose(J @ dphi, fd, rtol=1e-6, atol=1e-7)


def test_deterministic_assembly(space0, rng):
    w = rng.uniform(0.5, 2, space0.quad_nonlin.weights.shape)
    A = assembly.weighted_stiffness_qp(space0, w)
    B = assembly.weighted_stiffness_qp(space0, w.copy())
    assert np.array_equal(A.data, B.data) and np.array_equal(A.indices, B.indices)


@settings(max_examples=20, deadline=None)
@given(c=st.floats(-2, 2))
def test_weighted_mass_constant_weight(space0, c):
    W = assembly.weighted_mass_qp(space0, np.full(space0.quad_nonlin.weights.shape, c))
    assert abs(W - c * assembly.mass_matrix(space0)).max() < 1e-14
