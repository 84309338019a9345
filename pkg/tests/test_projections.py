import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chfem import assembly
from chfem.fespace import FeField, interpolate
from chfem.harness import eoc_column, manufactured_pair, projection_study, space_for
from chfem.projections import (TimeGrid, avg_error, error_norms, field_norms, h1_project, interp_error,
                               l2_project, mu_hat, product_projection_defect, time_avg, time_interp)

TP = 2 * np.pi


def sinx(x, y):
    return np.sin(TP * x)


def grad_sinx(x, y):
    return TP * np.cos(TP * x), 0 * y


def test_projection_identity_on_subspace(space0, rng):
    u = FeField(space0, rng.standard_normal(space0.dof_count))
    np.testing.assert_allclose(l2_project(space0, u).coeffs, u.coeffs, atol=1e-12)
    np.testing.assert_allclose(h1_project(space0, u).coeffs, u.coeffs, atol=1e-12)


def test_l2_projection_orthogonality(space0, rng):
    g = lambda x, y: np.exp(np.sin(TP * x)) * np.cos(TP * y)
    p = l2_project(space0, g)
    # residual against random test functions, evaluated with an independent quadrature path
    q = space0.quad_nonlin
    d = space0.values_at_quad(p.coeffs, q) - g(q.points[..., 0], q.points[..., 1])
    for _ in range(5):
        v = rng.standard_normal(space0.dof_count)
        assert abs(np.sum(q.weights * d * space0.values_at_quad(v, q))) < 1e-13


def test_projection_mass(space0):
    g = lambda x, y: 0.3 + np.sin(TP * x) ** 2
    M = assembly.mass_matrix(space0)
    assert np.sum(M @ l2_project(space0, g).coeffs) == pytest.approx(0.8, abs=1e-12)


def test_projection_of_fine_field(space0, space1, rng):
    u = FeField(space0, rng.standard_normal(space0.dof_count))
    from chfem.fespace import prolong
    v = prolong(u, space1)
    np.testing.assert_allclose(l2_project(space0, v).coeffs, u.coeffs, atol=1e-11)
    np.testing.assert_allclose(h1_project(space0, v).coeffs, u.coeffs, atol=1e-11)


def test_h1_needs_gradient(space0):
    with pytest.raises(ValueError):
        h1_project(space0, sinx)


def test_orders_sin():
    l2, h1, h1l2 = [], [], []
    for k in range(4):
        s = space_for(k)
        l2.append(error_norms(l2_project(s, sinx), sinx, grad_sinx)[0])
        e0, e1 = error_norms(h1_project(s, sinx, grad_sinx), sinx, grad_sinx)
        h1.append(e1)
        h1l2.append(e0)
    assert np.all(np.abs(np.array(eoc_column(l2)[1:]) - 3) < 0.3)
    assert np.all(np.abs(np.array(eoc_column(h1)[1:]) - 2) < 0.3)
    assert np.all(np.abs(np.array(eoc_column(h1l2)[1:]) - 3) < 0.3)


def test_mu_hat_on_subspace(space0, params):
    # phi in the space: mu_hat reduces to the L2 projection of mu
    phi = FeField(space0, np.full(space0.dof_count, 0.3))
    mu = lambda x, y: np.cos(TP * y)
    got = mu_hat(space0, params, lambda x, y: 0.3 + 0 * x, lambda x, y: (0 * x, 0 * y), mu, phi_hat=phi)
    np.testing.assert_allclose(got.coeffs, l2_project(space0, mu).coeffs, atol=1e-12)


def test_mu_hat_orthogonality(space0, params, rng):
    phi, gphi, mu, gmu = manufactured_pair(params)
    ph = h1_project(space0, phi, gphi)
    mh = mu_hat(space0, params, phi, gphi, mu, phi_hat=ph)
    q = space0.quad_nonlin
    X, Y = q.points[..., 0], q.points[..., 1]
    for _ in range(5):
        w = rng.standard_normal(space0.dof_count)
        wq, gw = space0.values_at_quad(w, q), space0.gradients_at_quad(w, q)
        gx, gy = gphi(X, Y)
        gd = space0.gradients_at_quad(ph.coeffs, q) - np.stack([gx, gy], axis=-1)
        r = (np.sum(q.weights * (space0.values_at_quad(mh.coeffs, q) - mu(X, Y)) * wq)
             - params.gamma * np.sum(q.weights * np.sum(gd * gw, axis=-1))
             - np.sum(q.weights * (params.f(space0.values_at_quad(ph.coeffs, q), 1) - params.f(phi(X, Y), 1)) * wq))
        assert abs(r) < 1e-10


def test_projection_study_orders(params):
    st_ = projection_study(params, range(4))
    assert np.all(np.abs(np.array(st_["l2_projection"].eoc_l2()[1:]) - 3) < 0.3)
    assert np.all(np.abs(np.array(st_["h1_projection"].eoc_h1()[1:]) - 2) < 0.3)
    assert np.all(np.abs(np.array(st_["mu_hat"].eoc_h1()[1:]) - 2) < 0.3)


def test_field_norms(space0):
    u = interpolate(space0, lambda x, y: 1.0 + 0 * x)
    l2, h1 = field_norms(u)
    assert l2 == pytest.approx(1.0, abs=1e-12) and h1 == pytest.approx(1.0, abs=1e-12)


# -- time operators ---------------------------------------------------------

def test_time_grid():
    g = TimeGrid.from_final_time(0.16, 0.02)
    assert g.n_steps == 8 and abs(g.nodes[-1] - 0.16) < 1e-14
    with pytest.raises(ValueError):
        TimeGrid.from_final_time(0.1, 0.03)


def test_linear_exactness():
    g = TimeGrid(0.125, 8)
    u = lambda t: 2.0 - 3.0 * t
    np.testing.assert_allclose(time_avg(u, g), u(g.midpoints), atol=1e-14)
    lin = time_interp(g, u(g.nodes))
    t = np.linspace(0, 1, 37)
    np.testing.assert_allclose(lin(t), u(t), atol=1e-14)


def test_commuting_identity():
    g = TimeGrid(0.125, 8)
    u = lambda t: t**3
    slope = np.diff(u(g.nodes)) / g.tau
    np.testing.assert_allclose(slope, time_avg(lambda t: 3 * t**2, g), atol=1e-13)


def test_time_interp_vectors():
    g = TimeGrid(0.5, 2)
    vals = np.array([[0.0, 1.0], [1.0, 3.0], [3.0, 3.0]])
    f = time_interp(g, vals)
    np.testing.assert_allclose(f(0.25), [0.5, 2.0])
    np.testing.assert_allclose(f(0.75), [2.0, 3.0])


def test_time_operator_orders():
    taus = [1 / 8, 1 / 16, 1 / 32, 1 / 64]
    grids = [TimeGrid(t, int(round(1 / t))) for t in taus]
    a = [avg_error(np.sin, g) for g in grids]
    b = [interp_error(np.sin, g) for g in grids]
    c = [product_projection_defect(np.sin, np.cos, g) for g in grids]
    for errs, order in ((a, 1), (b, 2), (c, 2)):
        assert np.all(np.abs(np.array(eoc_column(errs)[1:]) - order) < 0.2)


def test_product_defect_closed_form():
    for n in (8, 16, 64):
        g = TimeGrid(1 / n, n)
        t = lambda s: s
        assert product_projection_defect(t, t, g, p=np.inf) == pytest.approx(g.tau**2 / 12, abs=1e-12)
        assert product_projection_defect(t, t, g, p=2) == pytest.approx(g.tau**2 / 12, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(c=st.floats(-5, 5), n=st.integers(1, 20))
def test_product_defect_constant_factor(c, n):
    g = TimeGrid(1.0 / n, n)
    assert product_projection_defect(lambda t: c + 0 * t, np.sin, g) < 1e-14
