"""Energy, dissipation, relative energy, discrete dual norm and residual functionals."""
from dataclasses import dataclass, asdict

import numpy as np

from . import assembly
from .model import b_eval, f_eval
from .projections import gram_solve
from .quadrature import gauss_interval


@dataclass
class DiagnosticsRecord:
    t: float
    mass: float
    energy: float
    cumulative_dissipation: float
    newton_iters: int = 0
    linear_residual: float = 0.0

    def as_dict(self):
        return asdict(self)


def _c(x):
    return getattr(x, "coeffs", x)


def mass(phi):
    space = phi.space
    return float(np.sum(assembly.mass_matrix(space) @ phi.coeffs))


def gradient_energy(phi, gamma):
    c = phi.coeffs
    return 0.5 * gamma * float(c @ (assembly.stiffness_matrix(phi.space) @ c))


def potential_energy(phi, params):
    space = phi.space
    q = space.quad_nonlin
    return float(np.sum(q.weights * f_eval(params, space.values_at_quad(phi.coeffs, q))))


def energy(phi, params):
    """int gamma/2 |grad phi|^2 + f(phi) dx."""
    return gradient_energy(phi, params.gamma) + potential_energy(phi, params)


def relative_energy(phi, phi_hat, params):
    """Bregman distance of the alpha-regularised energy between two fields."""
    space = phi.space
    if phi_hat.space is not space and phi_hat.space.mesh.level != space.mesh.level:
        raise ValueError("fields live on different spaces")
    d = phi.coeffs - phi_hat.coeffs
    K = assembly.stiffness_matrix(space)
    M = assembly.mass_matrix(space)
    derivative = params.gamma * float(phi_hat.coeffs @ (K @ d)) \
        + float(assembly.nonlinear_load(space, phi_hat, params, 1) @ d)
    return (energy(phi, params) - energy(phi_hat, params) - derivative
            + 0.5 * params.alpha * float(d @ (M @ d)))


def dissipation(phi, mu, params):
    """|| b(phi)^(1/2) grad mu ||^2."""
    space = mu.space
    q = space.quad_nonlin
    w = b_eval(params, space.values_at_quad(_c(phi), q))
    g = space.gradients_at_quad(mu.coeffs, q)
    return float(np.sum(q.weights * w * np.sum(g * g, axis=-1)))


def interval_dissipation(phi_prev, phi_next, mu, params, n_gauss=3):
    """Mean over one interval of the dissipation along the linear trajectory phi(s)."""
    space = mu.space
    q = space.quad_nonlin
    pa = space.values_at_quad(_c(phi_prev), q)
    pb = space.values_at_quad(_c(phi_next), q)
    s, w = gauss_interval(n_gauss)
    mob = sum(wi * b_eval(params, (1 - si) * pa + si * pb) for si, wi in zip(s, w))
    g = space.gradients_at_quad(mu.coeffs, q)
    return float(np.sum(q.weights * mob * np.sum(g * g, axis=-1)))


def relative_dissipation(phi, mu, mu_hat, params):
    return 0.5 * dissipation(phi, mu - mu_hat, params)


def dual_norm_discrete(r, space):
    """sup_v <r, v> / ||v||_1 over the P2 space, i.e. sqrt(r^T A^-1 r) with A the H1 Gram."""
    r = np.asarray(r, dtype=float)
    val = float(r @ gram_solve(space, r))
    return np.sqrt(max(val, 0.0))


def residuals(phi_prev, phi_next, mu_bar, tau, params, phi_background=None, n_gauss=3):
    """Interval-averaged residual functionals of a perturbed pair on one time interval.

    ``phi_prev``, ``phi_next`` are the end values of a piecewise linear
    trajectory, ``mu_bar`` the constant chemical potential on the interval.
    The mobility is evaluated along ``phi_background`` (a pair of end values,
    defaults to the perturbed trajectory itself). Returns vectors indexed by
    dofs:

    r1_i = <(phi_next - phi_prev)/tau, psi_i> + avg_s <b(background(s)) grad mu_bar, grad psi_i>
    r2_i = <mu_bar, psi_i> - gamma <grad avg phi, grad psi_i> - avg_s <f'(phi(s)), psi_i>
    """
    space = mu_bar.space
    M = assembly.mass_matrix(space)
    K = assembly.stiffness_matrix(space)
    q = space.quad_nonlin
    a, b = _c(phi_prev), _c(phi_next)
    if phi_background is None:
        ba, bb = a, b
    else:
        ba, bb = (_c(x) for x in phi_background)
    pa, pb = space.values_at_quad(a, q), space.values_at_quad(b, q)
    qa, qb = space.values_at_quad(ba, q), space.values_at_quad(bb, q)
    s, w = gauss_interval(n_gauss)
    mob = sum(wi * b_eval(params, (1 - si) * qa + si * qb) for si, wi in zip(s, w))
    fp = sum(wi * f_eval(params, (1 - si) * pa + si * pb, 1) for si, wi in zip(s, w))
    r1 = M @ ((b - a) / tau) + assembly.weighted_stiffness_qp(space, mob) @ mu_bar.coeffs
    r2 = M @ mu_bar.coeffs - params.gamma * (K @ (0.5 * (a + b))) - assembly.load_qp(space, fp)
    return r1, r2
