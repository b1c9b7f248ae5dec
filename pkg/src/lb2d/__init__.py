"""lb2d: a tunable two-dimensional lattice-Boltzmann mini-app.

One fused gather-collide kernel drives three canonical flows (lid-driven
cavity, Taylor-Green vortex, cylinder wake) across four precision modes,
two memory layouts, and pluggable traversal schedules, with helpers to
measure throughput and performance portability.
"""

from .boundaries import FLUID, INLET, MOVING_WALL, OUTLET, SOLID
from .cases import CaseSpec, init
from .engine import (DivergenceError, RunConfig, RunStats, Schedule,
                     SimState, checkpoint, restore, run, step)
from .fields import Layout, Precision
from .lattice import (C, CS2, OPP, W, RelaxationParams, equilibrium,
                      moments, omega_from_reynolds)
from .perfport import (arithmetic_intensity, bytes_per_cell, flops_per_cell,
                       mlups, pp_metric, roofline_efficiency)

__version__ = "0.1.0"

__all__ = [
    "C", "CS2", "OPP", "W",
    "CaseSpec", "DivergenceError", "Layout", "Precision",
    "RelaxationParams", "RunConfig", "RunStats", "Schedule", "SimState",
    "FLUID", "SOLID", "MOVING_WALL", "INLET", "OUTLET",
    "arithmetic_intensity", "bytes_per_cell", "checkpoint", "equilibrium",
    "flops_per_cell", "init", "mlups", "moments", "omega_from_reynolds",
    "pp_metric", "restore", "roofline_efficiency", "run", "step",
    "__version__",
]
