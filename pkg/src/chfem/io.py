"""CSV and JSON file formats.

Trajectory directory layout::

    header.json        config echo, level, n, dof_count, tau, n_steps, T, failure
    manifest.csv       kind,index,t_start,t_end,file
    phi/phi_00000.csv  dof_index,value   (one file per time node)
    mu/mu_00000.csv    dof_index,value   (one file per interval)

Floats are written with ``repr`` so a round trip is exact and repeated runs
produce identical bytes.
"""
import csv
import json
from pathlib import Path

import numpy as np

from .fespace import build_space, evaluate
from .mesh import build_uniform
from .projections import TimeGrid

FORMAT_VERSION = 1


def _fmt(x):
    return repr(float(x))


def write_coefficients(path, coeffs):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dof_index", "value"])
        for i, v in enumerate(coeffs):
            w.writerow([i, _fmt(v)])


def read_coefficients(path, size=None):
    idx, vals = [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            idx.append(int(row["dof_index"]))
            vals.append(float(row["value"]))
    n = size if size is not None else max(idx) + 1
    out = np.zeros(n)
    out[np.asarray(idx, dtype=int)] = vals
    return out


def save_trajectory(traj, directory, config=None):
    d = Path(directory)
    (d / "phi").mkdir(parents=True, exist_ok=True)
    (d / "mu").mkdir(parents=True, exist_ok=True)
    g = traj.grid
    header = {
        "format_version": FORMAT_VERSION,
        "level": traj.space.mesh.level,
        "n": traj.space.n,
        "dof_count": traj.space.dof_count,
        "tau": g.tau,
        "n_steps": g.n_steps,
        "T": g.T,
        "saved_nodes": len(traj.phi),
        "failure": traj.failure,
        "config": config,
    }
    (d / "header.json").write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    with open(d / "manifest.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "index", "t_start", "t_end", "file"])
        for n, c in enumerate(traj.phi):
            name = f"phi/phi_{n:05d}.csv"
            write_coefficients(d / name, c)
            w.writerow(["phi", n, _fmt(n * g.tau), _fmt(n * g.tau), name])
        for n, c in enumerate(traj.mu):
            name = f"mu/mu_{n:05d}.csv"
            write_coefficients(d / name, c)
            w.writerow(["mu", n, _fmt(n * g.tau), _fmt((n + 1) * g.tau), name])


def load_trajectory(directory):
    """Read a trajectory directory; returns ``(Trajectory, header)``."""
    from .integrator import Trajectory

    d = Path(directory)
    header = json.loads((d / "header.json").read_text())
    space = build_space(build_uniform(int(header["level"])))
    grid = TimeGrid(float(header["tau"]), int(header["n_steps"]))
    phi, mu = [], []
    with open(d / "manifest.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            c = read_coefficients(d / row["file"], space.dof_count)
            (phi if row["kind"] == "phi" else mu).append((int(row["index"]), c))
    phi = [c for _, c in sorted(phi, key=lambda x: x[0])]
    mu = [c for _, c in sorted(mu, key=lambda x: x[0])]
    return Trajectory(grid, space, phi, mu, failure=header.get("failure")), header


def write_diagnostics(path, records, extended=False):
    cols = ["t", "energy", "mass", "cum_dissipation"]
    if extended:
        cols += ["newton_iters", "linear_residual"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in records:
            row = [_fmt(r.t), _fmt(r.energy), _fmt(r.mass), _fmt(r.cumulative_dissipation)]
            if extended:
                row += [r.newton_iters, _fmt(r.linear_residual)]
            w.writerow(row)


def sample_grid(m):
    """Cell-centred-free uniform m x m sample points (x fastest) on [0, 1)^2."""
    t = np.arange(m) / m
    X, Y = np.meshgrid(t, t, indexing="xy")
    return np.column_stack([X.ravel(), Y.ravel()])


def write_snapshot(path, fld, m):
    pts = sample_grid(m)
    vals = evaluate(fld, pts)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "phi"])
        for (x, y), v in zip(pts, vals):
            w.writerow([_fmt(x), _fmt(y), _fmt(v)])


PLOT_SCRIPT = '''"""Plot snapshots and the energy trace written by `chfem run`."""
import csv
import glob
import sys

import matplotlib.pyplot as plt
import numpy as np

out = sys.argv[1] if len(sys.argv) > 1 else "."
snaps = sorted(glob.glob(f"{out}/snapshot_*.csv"))
fig, axes = plt.subplots(1, len(snaps) + 1, figsize=(4 * (len(snaps) + 1), 4))
axes = np.atleast_1d(axes)
for ax, path in zip(axes, snaps):
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    m = int(round(np.sqrt(len(data))))
    ax.imshow(data[:, 2].reshape(m, m), origin="lower", extent=(0, 1, 0, 1), cmap="coolwarm")
    ax.set_title(path.rsplit("_", 1)[-1][:-4])
trace = np.loadtxt(f"{out}/energy_trace.csv", delimiter=",", skiprows=1)
axes[-1].plot(trace[:, 0], trace[:, 1])
axes[-1].set_xlabel("t")
axes[-1].set_title("energy")
fig.tight_layout()
fig.savefig(f"{out}/snapshots.png", dpi=120)
'''
