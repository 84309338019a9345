"""P2 finite elements with variational time stepping for Cahn-Hilliard with variable mobility."""
from .config import RunConfig, parse_config, benchmark_config
from .errors import ChfemError
from .fespace import FeField, FeSpace, build_space, evaluate, interpolate, prolong
from .functionals import dual_norm_discrete, energy, mass, relative_energy
from .harness import convergence_study, projection_study, stability_probe
from .integrator import NewtonSettings, Trajectory, simulate, step
from .mesh import Mesh, build_uniform, refine
from .model import ModelParams, benchmark_model, validate

__version__ = "0.1.0"
