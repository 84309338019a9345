"""Nested-grid convergence studies, projection-order studies and perturbation probes."""
import csv
import functools
import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import assembly
from .config import RunConfig, initial_field, make_grid
from .errors import GridsNotNested, NonPositiveError
from .fespace import build_space, prolongation_matrix
from .functionals import relative_energy
from .integrator import simulate
from .mesh import build_uniform
from .projections import error_norms, h1_project, l2_project, mu_hat

log = logging.getLogger(__name__)

# Reference errors and orders on the nested grids, keyed by k (final time unknown).
REFERENCE_ERRORS = {
    "semi": {0: (1.4794e0, None), 1: (3.7373e-1, 1.98), 2: (9.2554e-2, 2.01),
             3: (2.3622e-2, 1.97), 4: (5.9391e-3, 1.99)},
    "full": {0: (1.5183e0, None), 1: (3.7896e-1, 2.00), 2: (9.2797e-2, 2.02),
             3: (2.3795e-2, 1.96), 4: (6.0902e-3, 1.96)},
}


def eoc(e_coarse, e_fine, ratio=2.0):
    """Experimental order log_ratio(e_coarse / e_fine)."""
    if not (e_coarse > 0 and e_fine > 0):
        raise NonPositiveError(f"errors must be positive, got {e_coarse!r}, {e_fine!r}")
    return math.log(e_coarse / e_fine) / math.log(ratio)


def eoc_column(errors, ratio=2.0):
    out = [None]
    for a, b in zip(errors[:-1], errors[1:]):
        out.append(eoc(a, b, ratio))
    return out


def error_between(coarse, fine):
    """Error of a trajectory against its nested refinement.

    Maximum over coarse time nodes of the H1 norm of the phi difference plus
    the L2(0,T; H1) norm of the mu difference, all measured in the fine space.
    """
    rc = coarse.grid.n_steps
    rf = fine.grid.n_steps
    if rf % rc or not math.isclose(coarse.grid.T, fine.grid.T, rel_tol=1e-12):
        raise GridsNotNested(f"time grids with {rc} and {rf} steps on T={coarse.grid.T}, {fine.grid.T}")
    if not (coarse.complete and fine.complete):
        raise GridsNotNested("trajectories must be complete")
    ratio = rf // rc
    try:
        P = prolongation_matrix(coarse.space, fine.space)
    except Exception as exc:
        raise GridsNotNested(str(exc)) from exc
    A = assembly.h1_gram(fine.space)

    def h1sq(v):
        return float(v @ (A @ v))

    phi_part = max(math.sqrt(max(h1sq(P @ coarse.phi[n] - fine.phi[ratio * n]), 0.0))
                   for n in range(rc + 1))
    mu_sq = 0.0
    for n in range(rc):
        pm = P @ coarse.mu[n]
        for m in range(ratio * n, ratio * (n + 1)):
            mu_sq += fine.grid.tau * h1sq(pm - fine.mu[m])
    return phi_part + math.sqrt(max(mu_sq, 0.0))


@dataclass
class ConvergenceRow:
    k: int
    h: float
    tau: float
    e: float
    eoc: float = None


@dataclass
class ConvergenceReport:
    kind: str
    rows: list
    config: dict = field(default_factory=dict)

    def errors(self):
        return [r.e for r in self.rows]

    def eocs(self):
        return [r.eoc for r in self.rows[1:]]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "h", "tau", "e", "eoc"])
            for r in self.rows:
                w.writerow([r.k, repr(r.h), repr(r.tau), repr(r.e), "---" if r.eoc is None else repr(r.eoc)])

    def format_table(self, reference=True):
        ref = REFERENCE_ERRORS.get(self.kind, {}) if reference else {}
        lines = [f"{'k':>2} {'h':>10} {'tau':>11} {'e':>11} {'eoc':>6}" + ("   ref. e     eoc" if ref else "")]
        for r in self.rows:
            s = f"{r.k:>2} {r.h:>10.4e} {r.tau:>11.4e} {r.e:>11.4e} {'---' if r.eoc is None else f'{r.eoc:6.2f}':>6}"
            if r.k in ref:
                e_ref, o_ref = ref[r.k]
                s += f"  {e_ref:.4e} {'---' if o_ref is None else f'{o_ref:.2f}':>5}"
            lines.append(s)
        return "\n".join(lines)


@functools.lru_cache(maxsize=8)
def space_for(level):
    """Shared space per level, so operator caches are reused across runs."""
    return build_space(build_uniform(level))


def run_level(cfg, level, tau, T):
    """Simulate the configured problem on ``level`` with step ``tau`` up to ``T``."""
    space = space_for(level)
    grid = make_grid(T, tau)
    run_cfg = replace(cfg, level=level, tau=grid.tau, T=T)
    phi0 = initial_field(run_cfg, space)
    t0 = time.perf_counter()
    traj = simulate(phi0, grid, cfg.model, cfg.settings(), meta={"level": level})
    log.info("level %d, tau=%.4e, %d steps: %.1fs", level, grid.tau, grid.n_steps, time.perf_counter() - t0)
    return traj


def convergence_study(cfg, k_range, mode="full", T=None, tau_factor=None, tau_star_exp=9, level=None):
    """Errors e_k between runs (k, k+1) and their experimental orders.

    mode ``full``: h_k = 2^-(3+k), tau_k = tau_factor h_k.
    mode ``semi``: tau fixed at tau_factor 2^-tau_star_exp on every level.
    mode ``time``: space level fixed at ``level``, tau_k = tau_factor 2^-(3+k).
    """
    T = cfg.T if T is None else T
    tau_factor = cfg.tau_factor if tau_factor is None else tau_factor
    ks = list(k_range)
    if ks != sorted(ks) or len(set(ks)) != len(ks):
        raise ValueError("k_range must be strictly ascending")

    def params(k):
        h = 2.0 ** -(3 + k)
        if mode == "full":
            return k, tau_factor * h
        if mode == "semi":
            return k, tau_factor * 2.0 ** -tau_star_exp
        if mode == "time":
            return (cfg.level if level is None else level), tau_factor * h
        raise ValueError(f"unknown mode {mode!r}")

    runs = {}

    def get(k):
        if k not in runs:
            lev, tau = params(k)
            runs[k] = run_level(cfg, lev, tau, T)
        return runs[k]

    rows = []
    for k in ks:
        e = error_between(get(k), get(k + 1))
        lev, tau = params(k)
        rows.append(ConvergenceRow(k, 2.0 ** -(3 + lev), tau, e))
        runs.pop(k - 1, None)
    for r, o in zip(rows, eoc_column([r.e for r in rows])):
        r.eoc = o
    conf = {"mode": mode, "T": T, "tau_factor": tau_factor, "tau_star_exp": tau_star_exp,
            "model": cfg.model.to_dict()}
    return ConvergenceReport(mode, rows, conf)


@dataclass
class StabilityReport:
    epsilons: list
    times: np.ndarray
    relative_energy: dict  # eps -> array over time nodes
    amplification: dict
    final: dict
    eoc: list


def stability_probe(cfg, epsilons, level=None, T=None):
    """Relative energy between the base run and runs with perturbed initial data.

    The perturbation is ``eps sin(2 pi x)``; the relative energy at the final
    time should scale like eps^2.
    """
    level = cfg.level if level is None else level
    T = cfg.T if T is None else T
    tau = cfg.tau if cfg.tau is not None else cfg.tau_factor * 2.0 ** -(3 + level)
    base = run_level(cfg, level, tau, T)
    rel, amp, final = {}, {}, {}
    for eps in epsilons:
        if eps == 0:
            pert = base
        else:
            pert = run_level(replace(cfg, initial=cfg.initial.perturbed(eps)), level, tau, T)
        series = np.array([relative_energy(base.phi_at(n), pert.phi_at(n), cfg.model)
                           for n in range(base.grid.n_steps + 1)])
        rel[eps] = series
        final[eps] = float(series[-1])
        amp[eps] = float(series.max() / series[0]) if series[0] > 0 else 0.0
    nz = [e for e in epsilons if e > 0]
    orders = [math.log(final[a] / final[b]) / math.log(a / b) for a, b in zip(nz[:-1], nz[1:])]
    return StabilityReport(list(epsilons), base.grid.nodes, rel, amp, final, orders)


# -- projection-order studies ---------------------------------------------

def _trig():
    tp = 2 * np.pi

    def g(x, y):
        return np.sin(tp * x) * np.cos(tp * y)

    def grad(x, y):
        return tp * np.cos(tp * x) * np.cos(tp * y), -tp * np.sin(tp * x) * np.sin(tp * y)

    return g, grad


def manufactured_pair(params, amplitude=0.5):
    """Smooth periodic (phi, grad phi, mu, grad mu) with mu = -gamma lap phi + f'(phi)."""
    g, grad = _trig()
    lap = 8 * np.pi**2  # -lap g = 8 pi^2 g

    def phi(x, y):
        return amplitude * g(x, y)

    def gphi(x, y):
        gx, gy = grad(x, y)
        return amplitude * gx, amplitude * gy

    def mu(x, y):
        return params.gamma * lap * phi(x, y) + params.f(phi(x, y), 1)

    def gmu(x, y):
        gx, gy = gphi(x, y)
        c = params.gamma * lap + params.f(phi(x, y), 2)
        return c * gx, c * gy

    return phi, gphi, mu, gmu


@dataclass
class ProjectionStudy:
    operator: str
    levels: list
    error_l2: list
    error_h1: list

    def eoc_l2(self):
        return eoc_column(self.error_l2)

    def eoc_h1(self):
        return eoc_column(self.error_h1)


def projection_study(params, levels=range(4)):
    """Errors of the L2 projection, the H1 projection and the mu_hat construction per level."""
    g, grad = _trig()
    phi, gphi, mu, gmu = manufactured_pair(params)
    out = {name: ProjectionStudy(name, [], [], []) for name in ("l2_projection", "h1_projection", "mu_hat")}
    for k in levels:
        space = build_space(build_uniform(k))
        for name, (e0, e1) in (
            ("l2_projection", error_norms(l2_project(space, g), g, grad)),
            ("h1_projection", error_norms(h1_project(space, g, grad), g, grad)),
            ("mu_hat", error_norms(mu_hat(space, params, phi, gphi, mu), mu, gmu)),
        ):
            s = out[name]
            s.levels.append(k)
            s.error_l2.append(e0)
            s.error_h1.append(e1)
    return out


def inverse_constants(levels=range(4), samples=5, seed=0):
    """max ||v||_1 h / ||v||_0 over random fields per level (diagnostic, logged)."""
    rng = np.random.default_rng(seed)
    out = {}
    for k in levels:
        space = build_space(build_uniform(k))
        M = assembly.mass_matrix(space)
        A = assembly.h1_gram(space)
        best = 0.0
        for _ in range(samples):
            v = rng.standard_normal(space.dof_count)
            best = max(best, math.sqrt((v @ (A @ v)) / (v @ (M @ v))) * space.h)
        out[k] = best
    return out


def as_run_config(model, level=0, T=0.16, **kw):
    return RunConfig(model=model, level=level, T=T, **kw)
