"""Fully discrete Petrov-Galerkin time stepping.

Per interval the unknowns are ``phi_n`` (end value of the piecewise linear
trajectory) and ``mu`` (constant chemical potential). With
``phi(s) = (1 - s) phi_prev + s phi_n`` and a 3-point Gauss rule in ``s``
the step solves

    F1 = M (phi_n - phi_prev) + tau * avg_s B(phi(s)) mu              = 0
    F2 = M mu - gamma K (phi_n + phi_prev) / 2 - avg_s f'(phi(s))      = 0

by Newton's method with a sparse LU of the full 2 x 2 block Jacobian.
``B(phi)`` is the mobility-weighted stiffness matrix. The Gauss rule is exact
for the polynomial model, which makes the discrete mass and energy
identities hold to solver tolerance.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import assembly
from .errors import LinearSolveFailed, NewtonDiverged
from .fespace import FeField
from .functionals import DiagnosticsRecord, energy, interval_dissipation, mass
from .model import b_eval, f_eval
from .projections import TimeGrid, mass_solve
from .quadrature import gauss_interval

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NewtonSettings:
    tol: float = 1e-10
    max_iter: int = 25
    n_gauss: int = 3


@dataclass
class StepStats:
    iterations: int
    residuals: list
    dissipation: float = 0.0  # tau-free interval mean of the dissipation functional

    @property
    def final_residual(self):
        return self.residuals[-1]


@dataclass
class Trajectory:
    grid: TimeGrid
    space: object
    phi: list  # N + 1 coefficient vectors at time nodes
    mu: list  # N coefficient vectors, one per interval
    diagnostics: list = field(default_factory=list)
    failure: str = None
    meta: dict = field(default_factory=dict)

    def phi_at(self, n):
        return FeField(self.space, self.phi[n])

    def mu_on(self, n):
        return FeField(self.space, self.mu[n])

    @property
    def complete(self):
        return self.failure is None and len(self.phi) == self.grid.n_steps + 1


class _StepOperator:
    """Residual and Jacobian of one interval for fixed ``phi_prev``."""

    def __init__(self, space, phi_prev, tau, params, n_gauss):
        self.space = space
        self.q = space.quad_nonlin
        self.M = assembly.mass_matrix(space)
        self.K = assembly.stiffness_matrix(space)
        self.prev = phi_prev
        self.prev_q = space.values_at_quad(phi_prev, self.q)
        self.Kprev = self.K @ phi_prev
        self.tau = tau
        self.params = params
        self.s, self.w = gauss_interval(n_gauss)

    def _weights(self, phi_n):
        p = self.params
        nq = self.space.values_at_quad(phi_n, self.q)
        mob = jac_b = fp = jac_f = 0.0
        for s, w in zip(self.s, self.w):
            v = (1.0 - s) * self.prev_q + s * nq
            mob = mob + w * b_eval(p, v)
            jac_b = jac_b + (w * s) * b_eval(p, v, 1)
            fp = fp + w * f_eval(p, v, 1)
            jac_f = jac_f + (w * s) * f_eval(p, v, 2)
        return mob, jac_b, fp, jac_f

    def residual(self, phi_n, mu, weights=None):
        mob, _, fp, _ = weights or self._weights(phi_n)
        B = assembly.weighted_stiffness_qp(self.space, mob)
        r1 = self.M @ (phi_n - self.prev) + self.tau * (B @ mu)
        r2 = (self.M @ mu - 0.5 * self.params.gamma * (self.K @ phi_n + self.Kprev)
              - assembly.load_qp(self.space, fp))
        return r1, r2, B

    def jacobian(self, phi_n, mu, weights, B):
        _, jac_b, _, jac_f = weights
        J11 = self.M + self.tau * assembly.mobility_jacobian_qp(self.space, jac_b, mu)
        J12 = self.tau * B
        J21 = -0.5 * self.params.gamma * self.K - assembly.weighted_mass_qp(self.space, jac_f)
        return sp.bmat([[J11, J12], [J21, self.M]], format="csc")


def initial_mu(phi, params):
    """mu solving <mu, w> = gamma <grad phi, grad w> + <f'(phi), w>."""
    space = phi.space
    rhs = params.gamma * (assembly.stiffness_matrix(space) @ phi.coeffs) \
        + assembly.nonlinear_load(space, phi, params, 1)
    return FeField(space, mass_solve(space, rhs))


def step(phi_prev, tau, params, settings=NewtonSettings(), mu_guess=None, phi_guess=None):
    """Advance one interval; returns ``(phi_n, mu, StepStats)``.

    Raises
    ------
    NewtonDiverged
        If the max-norm residual is not below ``settings.tol`` after ``max_iter`` solves.
    LinearSolveFailed
        If the block Jacobian cannot be factorised.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    space = phi_prev.space
    n = space.dof_count
    op = _StepOperator(space, phi_prev.coeffs, tau, params, settings.n_gauss)
    phi = (phi_guess.coeffs if phi_guess is not None else phi_prev.coeffs).copy()
    mu = (mu_guess.coeffs if mu_guess is not None else initial_mu(phi_prev, params).coeffs).copy()

    history = []
    for it in range(settings.max_iter + 1):
        weights = op._weights(phi)
        r1, r2, B = op.residual(phi, mu, weights)
        res = max(np.abs(r1).max(), np.abs(r2).max())
        history.append(float(res))
        if res <= settings.tol:
            phi_n, mu_n = FeField(space, phi), FeField(space, mu)
            diss = interval_dissipation(phi_prev, phi_n, mu_n, params, settings.n_gauss)
            return phi_n, mu_n, StepStats(it, history, diss)
        if it == settings.max_iter or not np.isfinite(res):
            break
        J = op.jacobian(phi, mu, weights, B)
        try:
            delta = spla.splu(J, permc_spec="MMD_AT_PLUS_A").solve(-np.concatenate([r1, r2]))
        except RuntimeError as exc:
            raise LinearSolveFailed(str(exc)) from exc
        if not np.all(np.isfinite(delta)):
            raise LinearSolveFailed("non-finite Newton update")
        phi += delta[:n]
        mu += delta[n:]
    raise NewtonDiverged(f"Newton did not reach tol={settings.tol:g} in {settings.max_iter} "
                         f"iterations (last residual {history[-1]:.3e})", history)


def simulate(phi0, grid, params, settings=NewtonSettings(), extrapolate=False, meta=None):
    """Run ``grid.n_steps`` steps from ``phi0`` and record diagnostics after each."""
    space = phi0.space
    traj = Trajectory(grid, space, [phi0.coeffs.copy()], [], meta=dict(meta or {}))
    e0 = energy(phi0, params)
    traj.diagnostics.append(DiagnosticsRecord(0.0, mass(phi0), e0, 0.0))
    phi = phi0
    mu = None
    cum = 0.0
    for k in range(grid.n_steps):
        guess = None
        if extrapolate and k > 0:
            guess = FeField(space, 2.0 * traj.phi[-1] - traj.phi[-2])
        try:
            phi, mu, stats = step(phi, grid.tau, params, settings, mu_guess=mu, phi_guess=guess)
        except (NewtonDiverged, LinearSolveFailed) as exc:
            traj.failure = f"step {k + 1}: {exc}"
            exc.trajectory = traj
            raise
        cum += grid.tau * stats.dissipation
        traj.phi.append(phi.coeffs.copy())
        traj.mu.append(mu.coeffs.copy())
        traj.diagnostics.append(DiagnosticsRecord(
            (k + 1) * grid.tau, mass(phi), energy(phi, params), cum,
            stats.iterations, stats.final_residual))
        log.debug("step %d: %d Newton iterations, residual %.2e", k + 1, stats.iterations,
                  stats.final_residual)
    return traj
