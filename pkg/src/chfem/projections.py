"""Spatial projections onto the P2 space and piecewise-in-time operators.

Analytic functions are callables ``g(x, y)`` acting on arrays; gradients are
callables returning ``(gx, gy)``. They enter only through values at the
degree-10 quadrature points.
"""
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from . import assembly
from .errors import SingularSystem
from .fespace import FeField, prolongation_matrix
from .model import f_eval
from .quadrature import gauss_interval


def _factor(space, name, matrix):
    cache = space.__dict__.setdefault("_operator_cache", {})
    key = "lu_" + name
    if key not in cache:
        try:
            cache[key] = spla.splu(matrix().tocsc())
        except RuntimeError as exc:  # singular factor
            raise SingularSystem(f"{name} matrix is singular: {exc}") from exc
    return cache[key]


def mass_solve(space, rhs):
    return _factor(space, "mass", lambda: assembly.mass_matrix(space)).solve(np.asarray(rhs, dtype=float))


def gram_solve(space, rhs):
    return _factor(space, "gram", lambda: assembly.h1_gram(space)).solve(np.asarray(rhs, dtype=float))


def _at_points(g, pts):
    return np.asarray(g(pts[..., 0], pts[..., 1]), dtype=float) * np.ones(pts.shape[:-1])


def _grad_at_points(grad_g, pts):
    gx, gy = grad_g(pts[..., 0], pts[..., 1])
    ones = np.ones(pts.shape[:-1])
    return np.stack([gx * ones, gy * ones], axis=-1)


def load_vector(space, g):
    """Vector <g, psi_i> for an analytic callable or a field on a nested space."""
    if isinstance(g, FeField):
        if g.space is space:
            return assembly.mass_matrix(space) @ g.coeffs
        if g.space.n > space.n:
            P = prolongation_matrix(space, g.space)
            return P.T @ (assembly.mass_matrix(g.space) @ g.coeffs)
        P = prolongation_matrix(g.space, space)
        return assembly.mass_matrix(space) @ (P @ g.coeffs)
    q = space.quad_nonlin
    return assembly.load_qp(space, _at_points(g, q.points))


def grad_load_vector(space, grad_g):
    q = space.quad_nonlin
    return assembly.grad_load_qp(space, _grad_at_points(grad_g, q.points))


def l2_project(space, g):
    """L2-orthogonal projection: one mass-matrix solve."""
    return FeField(space, mass_solve(space, load_vector(space, g)))


def h1_project(space, g, grad_g=None):
    """H1-elliptic projection onto the P2 space.

    For a field argument ``grad_g`` is not needed; for an analytic ``g`` it is.
    """
    if isinstance(g, FeField):
        if g.space is space:
            rhs = assembly.h1_gram(space) @ g.coeffs
        elif g.space.n > space.n:
            P = prolongation_matrix(space, g.space)
            rhs = P.T @ (assembly.h1_gram(g.space) @ g.coeffs)
        else:
            P = prolongation_matrix(g.space, space)
            rhs = assembly.h1_gram(space) @ (P @ g.coeffs)
    else:
        if grad_g is None:
            raise ValueError("h1_project of an analytic function needs its gradient")
        rhs = load_vector(space, g) + grad_load_vector(space, grad_g)
    return FeField(space, gram_solve(space, rhs))


def mu_hat(space, params, phi, grad_phi, mu, phi_hat=None):
    """Discrete chemical potential companion of the elliptic projection of ``phi``.

    Solves <mu_hat - mu, w> - gamma <grad(phi_hat - phi), grad w>
    - <f'(phi_hat) - f'(phi), w> = 0 for all w with one mass solve.
    """
    if phi_hat is None:
        phi_hat = h1_project(space, phi, grad_phi)
    q = space.quad_nonlin
    ph_q = space.values_at_quad(phi_hat.coeffs, q)
    phi_q = _at_points(phi, q.points)
    gdiff = space.gradients_at_quad(phi_hat.coeffs, q) - _grad_at_points(grad_phi, q.points)
    rhs = (assembly.load_qp(space, _at_points(mu, q.points)
                            + f_eval(params, ph_q, 1) - f_eval(params, phi_q, 1))
           + params.gamma * assembly.grad_load_qp(space, gdiff))
    return FeField(space, mass_solve(space, rhs))


def error_norms(fld, g, grad_g=None):
    """(L2 error, H1 error) between a field and an analytic function, degree-10 rule."""
    space = fld.space
    q = space.quad_nonlin
    d = space.values_at_quad(fld.coeffs, q) - _at_points(g, q.points)
    l2sq = float(np.sum(q.weights * d * d))
    if grad_g is None:
        return np.sqrt(l2sq), np.nan
    dg = space.gradients_at_quad(fld.coeffs, q) - _grad_at_points(grad_g, q.points)
    semisq = float(np.sum(q.weights * np.sum(dg * dg, axis=-1)))
    return np.sqrt(l2sq), np.sqrt(l2sq + semisq)


def field_norms(fld):
    """(L2 norm, H1 norm) of a field from the assembled mass and Gram operators."""
    c = fld.coeffs
    m = float(c @ (assembly.mass_matrix(fld.space) @ c))
    g = float(c @ (assembly.h1_gram(fld.space) @ c))
    return np.sqrt(max(m, 0.0)), np.sqrt(max(g, 0.0))


# -- time ------------------------------------------------------------------

@dataclass(frozen=True)
class TimeGrid:
    tau: float
    n_steps: int

    @classmethod
    def from_final_time(cls, T, tau, rtol=1e-9):
        n = int(round(T / tau))
        if n < 1 or abs(n * tau - T) > rtol * max(T, 1.0):
            raise ValueError(f"T={T} is not an integer multiple of tau={tau}")
        return cls(T / n, n)

    @property
    def T(self):
        return self.tau * self.n_steps

    @property
    def nodes(self):
        return self.tau * np.arange(self.n_steps + 1)

    @property
    def midpoints(self):
        return self.tau * (np.arange(self.n_steps) + 0.5)

    def interval_of(self, t):
        return np.clip(np.floor(np.asarray(t) / self.tau).astype(int), 0, self.n_steps - 1)


def time_interp(grid, node_values):
    """Piecewise linear interpolant through values at the grid nodes.

    ``node_values`` has leading dimension ``n_steps + 1`` (scalars or coefficient vectors).
    Returns a callable ``t -> value``.
    """
    vals = np.asarray(node_values, dtype=float)
    if vals.shape[0] != grid.n_steps + 1:
        raise ValueError("need one value per time node")

    def evaluate(t):
        t = np.asarray(t, dtype=float)
        n = grid.interval_of(t)
        s = (t - n * grid.tau) / grid.tau
        s = s.reshape(s.shape + (1,) * (vals.ndim - 1))
        return (1.0 - s) * vals[n] + s * vals[n + 1]

    return evaluate


def time_avg(g, grid, n_gauss=3):
    """Per-interval means (1/tau) int g dt by Gauss-Legendre quadrature."""
    x, w = gauss_interval(n_gauss)
    t0 = grid.nodes[:-1]
    out = 0.0
    for xi, wi in zip(x, w):
        out = out + wi * np.asarray(g(t0 + xi * grid.tau), dtype=float)
    return np.asarray(out, dtype=float)


def _interval_lp(values_fn, grid, p, n_gauss=8):
    x, w = gauss_interval(n_gauss)
    t = grid.nodes[:-1, None] + x[None, :] * grid.tau
    d = np.abs(values_fn(t))
    if np.isinf(p):
        return float(d.max())
    return float((grid.tau * np.sum(w * d**p)) ** (1.0 / p))


def avg_error(u, grid, p=2):
    """||u - piecewise-constant average of u||_{Lp(0,T)}."""
    bar = time_avg(u, grid)
    return _interval_lp(lambda t: u(t) - bar[:, None], grid, p)


def interp_error(u, grid, p=2):
    """||u - piecewise-linear nodal interpolant of u||_{Lp(0,T)}."""
    lin = time_interp(grid, u(grid.nodes))
    return _interval_lp(lambda t: u(t) - lin(t), grid, p)


def product_projection_defect(u, v, grid, p=2):
    """||avg(u) avg(v) - avg(u v)||_{Lp(0,T)}; the integrand is piecewise constant."""
    d = np.abs(time_avg(u, grid) * time_avg(v, grid) - time_avg(lambda t: u(t) * v(t), grid))
    if np.isinf(p):
        return float(d.max())
    return float((grid.tau * np.sum(d**p)) ** (1.0 / p))
