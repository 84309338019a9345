import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import roots_legendre

from chfem import assembly
from chfem.config import BENCHMARK_INITIAL
from chfem.fespace import FeField
from chfem.functionals import (dissipation, dual_norm_discrete, energy, gradient_energy, mass,
                               relative_dissipation, relative_energy, residuals)
from chfem.harness import space_for
from chfem.integrator import step
from chfem.model import validate
from chfem.projections import h1_project


def _const(space, c):
    return FeField(space, np.full(space.dof_count, c))


def test_energy_constants(space0, params):
    assert energy(_const(space0, 0.99), params) == pytest.approx(0.0, abs=1e-15)
    assert energy(_const(space0, 0.0), params) == pytest.approx(0.3 * 0.99**4, rel=1e-13)
    assert mass(_const(space0, 0.2)) == pytest.approx(0.2, abs=1e-15)


def test_energy_of_initial_value(params):
    space = space_for(2)
    phi = h1_project(space, BENCHMARK_INITIAL.value, BENCHMARK_INITIAL.gradient)
    assert gradient_energy(phi, params.gamma) == pytest.approx(0.0003 * np.pi**2, rel=1e-4)
    # independent tensor Gauss-Legendre rule per cell for the potential part
    x, w = roots_legendre(12)
    x, w = 0.5 * (x + 1), 0.5 * w
    t = (np.arange(16)[:, None] + x[None, :]).ravel() / 16
    wt = np.tile(w, 16) / 16
    X, Y = np.meshgrid(t, t, indexing="ij")
    ref = np.sum(np.outer(wt, wt) * params.f(BENCHMARK_INITIAL.value(X, Y)))
    total = energy(phi, params)
    assert total == pytest.approx(0.0003 * np.pi**2 + ref, rel=1e-4)


def test_relative_energy_identity_and_quadratic(space0, params, rng):
    a = FeField(space0, rng.uniform(-1, 1, space0.dof_count))
    assert abs(relative_energy(a, a, params)) < 1e-12
    quad = validate(0.01, f_coeffs=(0, 0, 0, 0, 0))
    b = FeField(space0, rng.uniform(-1, 1, space0.dof_count))
    d = a.coeffs - b.coeffs
    K, M = assembly.stiffness_matrix(space0), assembly.mass_matrix(space0)
    expect = 0.5 * quad.gamma * d @ (K @ d) + 0.5 * quad.alpha * d @ (M @ d)
    assert relative_energy(a, b, quad) == pytest.approx(expect, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), scale=st.floats(0.01, 4.0), width=st.floats(0.0, 4.0))
def test_relative_energy_lower_bound(space0, params, seed, scale, width):
    r = np.random.default_rng(seed)
    b = r.uniform(-width, width, space0.dof_count)
    a = np.clip(b + scale * r.standard_normal(space0.dof_count), -4, 4)
    d = a - b
    lower = 0.5 * params.gamma * d @ (assembly.h1_gram(space0) @ d)
    assert relative_energy(FeField(space0, a), FeField(space0, b), params) >= lower - 1e-12


def test_relative_energy_other_space(space0, space1):
    with pytest.raises(ValueError):
        relative_energy(space0.zero(), space1.zero(), None)


def test_dissipation(space0, params, rng):
    mu = FeField(space0, rng.standard_normal(space0.dof_count))
    phi = _const(space0, 0.5)
    K = assembly.stiffness_matrix(space0)
    assert dissipation(phi, _const(space0, 2.0), params) == pytest.approx(0.0, abs=1e-12)
    assert dissipation(phi, mu, params) == pytest.approx(params.b(0.5) * mu.coeffs @ (K @ mu.coeffs), rel=1e-12)
    mh = FeField(space0, rng.standard_normal(space0.dof_count))
    d = mu.coeffs - mh.coeffs
    assert relative_dissipation(phi, mu, mh, params) == pytest.approx(0.5 * params.b(0.5) * d @ (K @ d), rel=1e-12)
    assert relative_dissipation(phi, mu, mu, params) == 0.0
    rough = FeField(space0, rng.uniform(-1.5, 1.5, space0.dof_count))
    assert dissipation(rough, mu, params) >= params.b_bounds[0] * mu.coeffs @ (K @ mu.coeffs) - 1e-12


def test_dual_norm(space0, rng):
    assert dual_norm_discrete(np.zeros(space0.dof_count), space0) == 0.0
    A = assembly.h1_gram(space0)
    for _ in range(5):
        c = rng.standard_normal(space0.dof_count)
        assert dual_norm_discrete(A @ c, space0) == pytest.approx(np.sqrt(c @ (A @ c)), rel=1e-10)


def test_dual_norm_is_supremum(space0, rng):
    A = assembly.h1_gram(space0)
    r = rng.standard_normal(space0.dof_count)
    val = dual_norm_discrete(r, space0)
    for _ in range(200):
        v = rng.standard_normal(space0.dof_count)
        assert r @ v / np.sqrt(v @ (A @ v)) <= val * (1 + 1e-12)


def test_residuals_stationary(space0, params):
    phi = _const(space0, 0.4)
    mu = _const(space0, params.f(0.4, 1))
    r1, r2 = residuals(phi, phi, mu, 0.01, params)
    assert np.abs(r1).max() < 1e-14 and np.abs(r2).max() < 1e-14


def test_residuals_vanish_for_solver_output(space0, params):
    phi0 = h1_project(space0, BENCHMARK_INITIAL.value, BENCHMARK_INITIAL.gradient)
    tau = 0.02
    phi1, mu, _ = step(phi0, tau, params)
    r1, r2 = residuals(phi0, phi1, mu, tau, params)
    assert np.abs(tau * r1).max() < 1e-10
    assert np.abs(r2).max() < 1e-10


def test_residuals_alternative_assembly(space0, params, rng):
    phi = FeField(space0, rng.uniform(-1, 1, space0.dof_count))
    mu = FeField(space0, rng.standard_normal(space0.dof_count))
    _, r2 = residuals(phi, phi, mu, 0.01, params)
    M, K = assembly.mass_matrix(space0), assembly.stiffness_matrix(space0)
    ref = M @ mu.coeffs - params.gamma * (K @ phi.coeffs) - assembly.nonlinear_load(space0, phi, params, 1)
    assert dual_norm_discrete(r2 - ref, space0) < 1e-8
    np.testing.assert_allclose(r2, ref, atol=1e-13)


def test_residuals_background_mobility(space0, params, rng):
    a = FeField(space0, rng.uniform(-1, 1, space0.dof_count))
    mu = FeField(space0, rng.standard_normal(space0.dof_count))
    bg = _const(space0, 0.0)
    r1, _ = residuals(a, a, mu, 0.1, params, phi_background=(bg, bg))
    np.testing.assert_allclose(r1, params.b(0.0) * (assembly.stiffness_matrix(space0) @ mu.coeffs), atol=1e-12)
