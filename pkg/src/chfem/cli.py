"""Command-line entry point: ``chfem {run,converge,project-study,diagnose,stability-probe}``."""
import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import io
from .config import config_from_dict, initial_field, benchmark_config, parse_config
from .errors import ChfemError
from .fespace import FeField, build_space
from .functionals import DiagnosticsRecord, energy, interval_dissipation, mass
from .harness import convergence_study, projection_study, stability_probe
from .integrator import simulate
from .mesh import build_uniform

log = logging.getLogger("chfem")


def _load(path):
    return parse_config(path) if path else benchmark_config()


def _snapshot_steps(cfg, grid):
    times = cfg.snapshot_times or [0.0, grid.T]
    return sorted({int(round(t / grid.tau)) for t in times})


def cmd_run(args):
    cfg = _load(args.config)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    space = build_space(build_uniform(cfg.level))
    grid = cfg.time_grid()
    phi0 = initial_field(cfg, space)
    status = 0
    try:
        traj = simulate(phi0, grid, cfg.model, cfg.settings())
    except ChfemError as exc:
        traj = getattr(exc, "trajectory", None)
        if traj is None:
            raise
        log.error("run failed: %s", exc)
        status = 1
    io.write_diagnostics(out / "energy_trace.csv", traj.diagnostics)
    io.write_diagnostics(out / "solver_trace.csv", traj.diagnostics, extended=True)
    for n in _snapshot_steps(cfg, grid):
        if n < len(traj.phi):
            io.write_snapshot(out / f"snapshot_{n:05d}.csv", traj.phi_at(n), cfg.grid)
    if cfg.save_trajectory or status:
        io.save_trajectory(traj, out / "trajectory", cfg.to_dict())
    if cfg.plot_script:
        (out / "plot_snapshots.py").write_text(io.PLOT_SCRIPT)
    last = traj.diagnostics[-1]
    print(f"t={last.t:.6g} steps={len(traj.phi) - 1}/{grid.n_steps} mass={last.mass:.15g} "
          f"energy={last.energy:.15g}")
    return status


def cmd_converge(args):
    cfg = _load(args.config)
    T = args.T if args.T is not None else cfg.T
    report = convergence_study(cfg, range(args.k_min, args.k_max + 1), args.mode, T=T,
                               tau_factor=args.tau_factor, tau_star_exp=args.tau_star_exp)
    if args.out:
        report.write_csv(args.out)
    print(report.format_table())
    return 0


def cmd_project_study(args):
    cfg = _load(args.config)
    studies = projection_study(cfg.model, range(args.k_min, args.k_max + 1))
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["operator", "level", "error_L2", "error_H1", "eoc_L2", "eoc_H1"])
        for name, s in studies.items():
            for k, e0, e1, o0, o1 in zip(s.levels, s.error_l2, s.error_h1, s.eoc_l2(), s.eoc_h1()):
                w.writerow([name, k, repr(e0), repr(e1),
                            "---" if o0 is None else repr(o0), "---" if o1 is None else repr(o1)])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def cmd_diagnose(args):
    """Recompute mass, energy and cumulative dissipation from a stored trajectory."""
    traj, header = io.load_trajectory(args.input)
    if not header.get("config"):
        raise ChfemError("trajectory header carries no model configuration")
    params = config_from_dict(header["config"]).model
    records = []
    cum = 0.0
    for n, c in enumerate(traj.phi):
        phi = FeField(traj.space, c)
        if n > 0:
            cum += traj.grid.tau * interval_dissipation(traj.phi[n - 1], c, traj.mu_on(n - 1), params)
        records.append(DiagnosticsRecord(n * traj.grid.tau, mass(phi), energy(phi, params), cum))
    out = args.out or str(Path(args.input) / "diagnostics.csv")
    io.write_diagnostics(out, records)
    e0 = records[0].energy
    drift = max(abs(r.mass - records[0].mass) for r in records)
    ident = max(abs(r.energy + r.cumulative_dissipation - e0) for r in records)
    print(f"nodes={len(records)} max_mass_drift={drift:.3e} max_energy_identity_error={ident:.3e}")
    return 0


def cmd_stability_probe(args):
    cfg = _load(args.config)
    try:
        eps = [float(e) for e in args.eps.split(",") if e.strip()]
    except ValueError:
        raise ChfemError(f"bad --eps list {args.eps!r}") from None
    if args.level is not None:
        cfg = replace(cfg, level=args.level, tau=None)
    rep = stability_probe(cfg, eps, T=args.T)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["eps", "t", "relative_energy"])
        for e in rep.epsilons:
            for t, v in zip(rep.times, rep.relative_energy[e]):
                w.writerow([repr(e), repr(float(t)), repr(float(v))])
    finally:
        if fh is not sys.stdout:
            fh.close()
    for e in rep.epsilons:
        print(f"# eps={e:g} final={rep.final[e]:.6e} amplification={rep.amplification[e]:.4g}",
              file=sys.stderr)
    print("# eoc in eps: " + ", ".join(f"{o:.3f}" for o in rep.eoc), file=sys.stderr)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="chfem", description=__doc__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one configuration")
    r.add_argument("-c", "--config")
    r.add_argument("-o", "--output", required=True)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("converge", help="nested-grid convergence study")
    c.add_argument("-c", "--config")
    c.add_argument("--mode", choices=["full", "semi", "time"], default="full")
    c.add_argument("--k-min", type=int, default=0)
    c.add_argument("--k-max", type=int, default=2)
    c.add_argument("--T", type=float)
    c.add_argument("--tau-factor", type=float, default=0.16)
    c.add_argument("--tau-star-exp", type=int, default=9)
    c.add_argument("--out")
    c.set_defaults(func=cmd_converge)

    s = sub.add_parser("project-study", help="projection error orders")
    s.add_argument("-c", "--config")
    s.add_argument("--k-min", type=int, default=0)
    s.add_argument("--k-max", type=int, default=3)
    s.add_argument("--out")
    s.set_defaults(func=cmd_project_study)

    d = sub.add_parser("diagnose", help="recompute diagnostics of a stored trajectory")
    d.add_argument("-i", "--input", required=True)
    d.add_argument("-o", "--out")
    d.set_defaults(func=cmd_diagnose)

    b = sub.add_parser("stability-probe", help="relative energy under perturbed initial data")
    b.add_argument("-c", "--config")
    b.add_argument("--eps", default="1e-2,1e-3,1e-4")
    b.add_argument("--level", type=int)
    b.add_argument("--T", type=float)
    b.add_argument("--out")
    b.set_defaults(func=cmd_stability_probe)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ChfemError, OSError) as exc:
        print(f"chfem: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
