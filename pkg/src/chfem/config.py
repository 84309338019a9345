"""Run configuration: YAML schema, defaults and validation.

Example::

    model:
      gamma: 0.003
      f: {factored: {a: 0.99, c: 0.3}}      # or f: {coeffs: [c0, c1, c2, c3, c4]}
      mobility: {coeffs: [1, 0, -2, 0, 1], floor: 1.0e-3}
      admissible_range: 4
    discretization: {level: 0, tau_factor: 0.16, T: 0.16}   # or tau: 0.02
    initial: {preset: benchmark}                 # or amplitude/kx/ky/offset, or file
    solver: {newton_tol: 1.0e-10, max_iter: 25}
    output: {snapshot_times: [0.0, 0.16], grid: 64, save_trajectory: true}
"""
import csv
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
import yaml

from .errors import ParseError, ValidationError
from .integrator import NewtonSettings
from .model import ModelParams, validate
from .projections import TimeGrid


@dataclass(frozen=True)
class InitialCondition:
    """``amplitude sin(2 pi kx x) sin(2 pi ky y) + offset + perturbation sin(2 pi x)``."""

    amplitude: float = 0.2
    kx: int = 2
    ky: int = 1
    offset: float = 0.2
    perturbation: float = 0.0
    file: str = None

    def value(self, x, y):
        a, b = 2 * np.pi * self.kx, 2 * np.pi * self.ky
        v = self.amplitude * np.sin(a * x) * np.sin(b * y) + self.offset
        return v + self.perturbation * np.sin(2 * np.pi * x)

    def gradient(self, x, y):
        a, b = 2 * np.pi * self.kx, 2 * np.pi * self.ky
        gx = self.amplitude * a * np.cos(a * x) * np.sin(b * y) + self.perturbation * 2 * np.pi * np.cos(2 * np.pi * x)
        gy = self.amplitude * b * np.sin(a * x) * np.cos(b * y)
        return gx, gy

    def perturbed(self, eps):
        return InitialCondition(self.amplitude, self.kx, self.ky, self.offset, self.perturbation + eps, self.file)


BENCHMARK_INITIAL = InitialCondition()


@dataclass
class RunConfig:
    model: ModelParams
    level: int = 0
    tau: float = None
    tau_factor: float = 0.16
    T: float = 0.16
    initial: InitialCondition = BENCHMARK_INITIAL
    newton_tol: float = 1e-10
    max_iter: int = 25
    snapshot_times: list = field(default_factory=list)
    grid: int = 64
    save_trajectory: bool = True
    plot_script: bool = False
    source: str = None

    @property
    def h(self):
        return 2.0 ** -(3 + self.level)

    @property
    def step_size(self):
        return self.tau if self.tau is not None else self.tau_factor * self.h

    def time_grid(self):
        return make_grid(self.T, self.step_size, "T")

    def settings(self):
        return NewtonSettings(self.newton_tol, self.max_iter)

    def to_dict(self):
        d = {
            "model": self.model.to_dict(),
            "discretization": {"level": self.level, "tau": self.step_size, "T": self.T},
            "initial": {k: v for k, v in asdict(self.initial).items() if v is not None},
            "solver": {"newton_tol": self.newton_tol, "max_iter": self.max_iter},
            "output": {"snapshot_times": list(self.snapshot_times), "grid": self.grid,
                       "save_trajectory": self.save_trajectory},
        }
        return d


def make_grid(T, tau, key="T"):
    try:
        return TimeGrid.from_final_time(T, tau)
    except ValueError as exc:
        raise ValidationError(key, str(exc)) from None


def _num(block, key, default=None, kind=float, prefix=""):
    if key not in block:
        if default is None:
            raise ValidationError(prefix + key, f"missing required key {prefix + key!r}")
        return default
    val = block[key]
    try:
        out = kind(float(val)) if kind is int else kind(val)
    except (TypeError, ValueError):
        raise ValidationError(prefix + key, f"{prefix + key} must be a number, got {val!r}") from None
    if kind is int and float(val) != out:
        raise ValidationError(prefix + key, f"{prefix + key} must be an integer")
    return out


def _block(data, key):
    val = data.get(key, {}) or {}
    if not isinstance(val, dict):
        raise ValidationError(key, f"{key} must be a mapping")
    return val


def model_from_dict(m):
    if "gamma" not in m:
        raise ValidationError("gamma", "missing required key 'gamma'")
    gamma = _num(m, "gamma")
    f = m.get("f", {"factored": {"a": 0.99, "c": 0.3}})
    if not isinstance(f, dict):
        raise ValidationError("f", "f must be a mapping with 'factored' or 'coeffs'")
    factored = coeffs = None
    if "factored" in f:
        fac = f["factored"]
        factored = (_num(fac, "a", prefix="f.factored."), _num(fac, "c", prefix="f.factored."))
    if "coeffs" in f:
        try:
            coeffs = [float(c) for c in f["coeffs"]]
        except (TypeError, ValueError):
            raise ValidationError("f.coeffs", "f.coeffs must be a list of numbers") from None
    if factored is None and coeffs is None:
        raise ValidationError("f", "f needs 'factored' or 'coeffs'")
    mob = m.get("mobility", {}) or {}
    try:
        b_coeffs = [float(c) for c in mob.get("coeffs", [1, 0, -2, 0, 1])]
    except (TypeError, ValueError):
        raise ValidationError("mobility.coeffs", "mobility.coeffs must be a list of numbers") from None
    floor = _num(mob, "floor", 1e-3, prefix="mobility.")
    rng = _num(m, "admissible_range", 4.0)
    return validate(gamma, f_coeffs=coeffs, b_coeffs=b_coeffs, b_floor=floor,
                    admissible_range=rng, f_factored=factored)


def config_from_dict(data, source=None):
    if not isinstance(data, dict):
        raise ValidationError("config", "top level must be a mapping")
    m = _block(data, "model")
    # model keys may also sit at the top level
    for key in ("gamma", "f", "mobility", "admissible_range"):
        if key in data and key not in m:
            m = {**m, key: data[key]}
    model = model_from_dict(m)

    d = _block(data, "discretization")
    level = _num(d, "level", 0, int)
    if level < 0:
        raise ValidationError("level", "level must be nonnegative")
    tau = _num(d, "tau", kind=float) if "tau" in d else None
    tau_factor = _num(d, "tau_factor", 0.16)
    T = _num(d, "T", 0.16)
    if T <= 0:
        raise ValidationError("T", "T must be positive")
    if tau is not None and tau <= 0:
        raise ValidationError("tau", "tau must be positive")

    ic = _block(data, "initial")
    preset = ic.get("preset", "benchmark" if not ic else None)
    if preset not in (None, "benchmark", "paper"):
        raise ValidationError("initial.preset", f"unknown preset {preset!r}")
    initial = InitialCondition(
        amplitude=_num(ic, "amplitude", 0.2), kx=_num(ic, "kx", 2, int), ky=_num(ic, "ky", 1, int),
        offset=_num(ic, "offset", 0.2), perturbation=_num(ic, "perturbation", 0.0),
        file=ic.get("file"))

    s = _block(data, "solver")
    out = _block(data, "output")
    times = out.get("snapshot_times", [])
    try:
        times = [float(t) for t in times]
    except (TypeError, ValueError):
        raise ValidationError("snapshot_times", "snapshot_times must be numbers") from None
    cfg = RunConfig(
        model=model, level=level, tau=tau, tau_factor=tau_factor, T=T, initial=initial,
        newton_tol=_num(s, "newton_tol", 1e-10), max_iter=_num(s, "max_iter", 25, int),
        snapshot_times=times, grid=_num(out, "grid", 64, int),
        save_trajectory=bool(out.get("save_trajectory", True)),
        plot_script=bool(out.get("plot_script", False)), source=source,
    )
    grid = cfg.time_grid()
    for t in times:
        n = t / grid.tau
        if t < 0 or t > grid.T * (1 + 1e-12) or abs(n - round(n)) > 1e-9:
            raise ValidationError("snapshot_times", f"snapshot time {t} is not on the time grid")
    if cfg.grid < 1:
        raise ValidationError("grid", "sample grid size must be positive")
    return cfg


def parse_config(path):
    """Read a YAML run configuration; raises ParseError or ValidationError."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ParseError(f"malformed config {path}: {getattr(exc, 'problem', exc)}",
                         mark.line + 1 if mark is not None else None) from None
    return config_from_dict(data or {}, source=str(path))


def initial_field(cfg, space):
    """Initial value: elliptic projection of the analytic initial condition, or a coefficient file."""
    from .fespace import FeField
    from .projections import h1_project

    ic = cfg.initial
    if ic.file:
        values = np.zeros(space.dof_count)
        seen = np.zeros(space.dof_count, dtype=bool)
        base = Path(cfg.source).parent if cfg.source else Path(".")
        with open(base / ic.file, newline="") as fh:
            for row in csv.DictReader(fh):
                i = int(row["dof_index"])
                values[i] = float(row["value"])
                seen[i] = True
        if not seen.all():
            raise ValidationError("initial.file", f"coefficient file does not match dof_count={space.dof_count}")
        return FeField(space, values)
    return h1_project(space, ic.value, ic.gradient)


def benchmark_config(level=0, T=0.16, **kw):
    from .model import benchmark_model

    return RunConfig(model=benchmark_model(), level=level, T=T, **kw)
