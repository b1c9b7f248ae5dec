"""Time stepping, precision policy, run orchestration, checkpoints.

A simulation state owns two population fields (pre and post), the cell
mask, and the physics parameters.  One step is: fused collide-stream
over fluid cells, inlet/outlet column refresh if the mask has open
boundaries, buffer swap.  The run loop times nothing but that update;
output and checkpoint hooks fire outside the clock.

Checkpoint wire format (little-endian): magic "MLB1", u32 version, u32
nx, u32 ny, u8 precision code, u8 layout code, u64 timestep, then the
nine pre-buffer planes in layout order, then the mask, one byte per
cell.  Physics parameters are not serialized; a resumed state gets them
re-attached from the run configuration.
"""

import struct
import time
from dataclasses import dataclass, field

import numpy as np

from . import boundaries
from .fields import Layout, PopulationField, Precision, convert_precision
from .kernels import HAS_NUMBA, BACKEND, KernelPlan
from .lattice import RelaxationParams, equilibrium

MAGIC = b"MLB1"
VERSION = 1
_HEADER = struct.Struct("<4sIIIBBQ")


class DivergenceError(RuntimeError):
    """Raised when a safety check finds non-finite populations."""


@dataclass
class Schedule:
    """Traversal policy: 'auto' (one contiguous line per parallel task)
    or 'tiled' with explicit tile sizes."""

    kind: str = "auto"
    tx: int = 0
    ty: int = 0

    def __post_init__(self):
        if self.kind not in ("auto", "tiled"):
            raise ValueError(f"unknown schedule '{self.kind}'")
        if self.kind == "tiled" and (self.tx < 1 or self.ty < 1):
            raise ValueError("tiled schedule needs positive tile sizes")

    def resolve(self, nx, ny, layout):
        if self.kind == "auto":
            return None  # KernelPlan picks the layout-aligned line tiling
        if self.tx > nx or self.ty > ny:
            raise ValueError(
                f"tile {self.tx}x{self.ty} exceeds the {nx}x{ny} grid")
        return (self.tx, self.ty)

    def label(self):
        return "auto" if self.kind == "auto" else f"tiled({self.tx},{self.ty})"


@dataclass
class RunConfig:
    """Everything a run needs beyond the initial state."""

    steps: int
    precision: Precision = Precision.SINGLE
    layout: Layout = Layout.COL
    schedule: Schedule = field(default_factory=Schedule)
    threads: int = 0  # 0 = leave the pool alone
    output_every: int = 0
    checkpoint_every: int = 0
    out_dir: str = "out"

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        for name in ("threads", "output_every", "checkpoint_every"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass
class SimState:
    """Populations, geometry, and physics of one simulation."""

    f_pre: PopulationField
    f_post: PopulationField
    mask: np.ndarray
    nx: int
    ny: int
    layout: Layout
    precision: Precision
    t: int = 0
    params: RelaxationParams | None = None
    wall_u: tuple = (0.0, 0.0)
    inlet_u: float = 0.0
    case: str = ""

    def swap(self):
        self.f_pre, self.f_post = self.f_post, self.f_pre

    def macro(self):
        """Density and velocity as float64 x,y grids."""
        f = self.f_pre.data.astype(np.float64)
        rho = f[0] + f[1] + f[2] + f[3] + f[4] + f[5] + f[6] + f[7] + f[8]
        mx = f[1] - f[3] + f[5] - f[6] - f[7] + f[8]
        my = f[2] - f[4] + f[5] + f[6] - f[7] - f[8]
        with np.errstate(divide="ignore", invalid="ignore"):
            ux = np.where(rho != 0.0, mx / rho, 0.0)
            uy = np.where(rho != 0.0, my / rho, 0.0)
        shape = ((self.ny, self.nx) if self.layout is Layout.ROW
                 else (self.nx, self.ny))
        def xy(p):
            grid = p.reshape(shape)
            return grid.T if self.layout is Layout.ROW else grid
        return xy(rho), xy(ux), xy(uy)

    def fluid_cells(self):
        return int(np.count_nonzero(self.mask == boundaries.FLUID))

    def check_finite(self):
        if not np.isfinite(self.f_pre.data).all():
            raise DivergenceError(f"divergence at step {self.t}")


def state_from_macroscopic(rho, ux, uy, mask_grid, layout, precision,
                           params=None, wall_u=(0.0, 0.0), inlet_u=0.0,
                           case=""):
    """Build a state from x,y macroscopic grids at local equilibrium.

    Initial populations are evaluated in float64 and converted once to
    the storage precision under the strict overflow policy.  Both
    buffers start identical so never-written cells stay well defined.
    """
    rho = np.asarray(rho, dtype=np.float64)
    nx, ny = rho.shape
    feq = equilibrium(rho, ux, uy)  # (9, nx, ny) in x,y indexing
    planes = np.empty((9, nx * ny), dtype=np.float64)
    from .fields import flatten_xy
    for i in range(9):
        planes[i] = flatten_xy(feq[i], layout)
    stored = convert_precision(planes, precision.storage, policy="strict")
    f_pre = PopulationField(np.ascontiguousarray(stored), nx, ny, layout)
    state = SimState(
        f_pre=f_pre,
        f_post=f_pre.copy(),
        mask=boundaries.flatten_mask(mask_grid, layout),
        nx=nx, ny=ny, layout=layout, precision=precision,
        params=params, wall_u=tuple(wall_u), inlet_u=float(inlet_u),
        case=case)
    return state


class _OpenBoundaryPass:
    """Per-step refresh of inlet and outlet columns, if any exist.

    Inlet cells hold the equilibrium of (rho=1, u_in, 0), precomputed
    once in compute precision and stored; outlet cells copy their west
    neighbor's fresh populations (zero-gradient)."""

    def __init__(self, state):
        mask = state.mask
        self.inlet = np.nonzero(mask == boundaries.INLET)[0]
        self.outlet = np.nonzero(mask == boundaries.OUTLET)[0]
        if self.inlet.size:
            vals = equilibrium(1.0, state.inlet_u, 0.0,
                               dtype=state.precision.compute)
            self.inlet_vals = convert_precision(
                vals, state.precision.storage).reshape(9, 1)
        if self.outlet.size:
            sx, _ = state.layout.strides(state.nx, state.ny)
            self.outlet_src = self.outlet - sx  # one cell west

    def apply(self, fpost):
        if self.inlet.size:
            fpost[:, self.inlet] = self.inlet_vals
        if self.outlet.size:
            fpost[:, self.outlet] = fpost[:, self.outlet_src]


def build_plan(state, config):
    if state.params is None:
        raise ValueError("state has no relaxation parameters attached")
    if state.params.has_source:
        raise ValueError("the fused kernel runs the zero-source path only")
    tile = config.schedule.resolve(state.nx, state.ny, state.layout)
    return KernelPlan(state.nx, state.ny, state.layout, state.precision,
                      state.mask, state.params.omega, state.wall_u, tile)


def step(state, config=None, plan=None, open_pass=None):
    """Advance the state one time step (convenience, builds plans ad hoc)."""
    if plan is None:
        plan = build_plan(state, config or RunConfig(steps=1,
                                                     precision=state.precision,
                                                     layout=state.layout))
    if open_pass is None:
        open_pass = _OpenBoundaryPass(state)
    plan.step(state.f_pre.data, state.f_post.data)
    open_pass.apply(state.f_post.data)
    state.swap()
    state.t += 1
    return state


@dataclass
class RunStats:
    steps: int
    seconds: float
    nx: int
    ny: int
    mlups: float
    probe_series: np.ndarray | None = None


def run(state, config, on_output=None, on_checkpoint=None, probe=None):
    """Run `config.steps` steps, timing only the update loop.

    Hooks fire on multiples of their cadence: output hooks at every
    multiple including the final step, checkpoint hooks only mid-run so
    checkpoint_every = steps/2 yields exactly one checkpoint.  A finite
    check runs at output cadence and raises DivergenceError on NaN/inf.
    When `probe` is an (x, y) cell, its y-velocity is sampled every step
    into RunStats.probe_series.
    """
    plan = build_plan(state, config)
    open_pass = _OpenBoundaryPass(state)
    end_t = state.t + config.steps
    series = [] if probe is not None else None
    probe_flat = (state.f_pre.flat(probe[0], probe[1])
                  if probe is not None else -1)

    threads_token = None
    if config.threads and plan.backend == "numba" and HAS_NUMBA:
        import numba
        threads_token = numba.get_num_threads()
        numba.set_num_threads(
            max(1, min(config.threads, numba.config.NUMBA_NUM_THREADS)))
    seconds = 0.0
    try:
        fpre, fpost = state.f_pre.data, state.f_post.data
        for _ in range(config.steps):
            t0 = time.perf_counter()
            plan.step(fpre, fpost)
            open_pass.apply(fpost)
            fpre, fpost = fpost, fpre
            seconds += time.perf_counter() - t0
            state.swap()
            state.t += 1
            if series is not None:
                c = fpre[:, probe_flat].astype(np.float64)
                rho = (c[0] + c[1] + c[2] + c[3] + c[4]
                       + c[5] + c[6] + c[7] + c[8])
                my = c[2] - c[4] + c[5] + c[6] - c[7] - c[8]
                series.append(my / rho if rho != 0.0 else 0.0)
            if config.output_every and state.t % config.output_every == 0:
                state.check_finite()
                if on_output is not None:
                    on_output(state)
            if (config.checkpoint_every and state.t < end_t
                    and state.t % config.checkpoint_every == 0):
                if on_checkpoint is not None:
                    on_checkpoint(state)
    finally:
        if threads_token is not None:
            import numba
            numba.set_num_threads(threads_token)
    updates = state.nx * state.ny * config.steps
    mlups = updates / (seconds * 1e6) if seconds > 0.0 else float("inf")
    return RunStats(steps=config.steps, seconds=seconds, nx=state.nx,
                    ny=state.ny, mlups=mlups,
                    probe_series=(np.array(series) if series is not None
                                  else None))


def checkpoint(state, path):
    """Write the state in the binary checkpoint format."""
    le_storage = state.precision.storage.newbyteorder("<")
    planes = np.ascontiguousarray(state.f_pre.data, dtype=le_storage)
    header = _HEADER.pack(MAGIC, VERSION, state.nx, state.ny,
                          state.precision.code, state.layout.code, state.t)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(planes.tobytes())
        fh.write(np.ascontiguousarray(state.mask, dtype=np.uint8).tobytes())


def restore(path):
    """Read a checkpoint back into a state.

    The returned state carries params=None; callers re-attach physics
    (relaxation, wall and inlet velocities) from their configuration
    before stepping.  Header and payload sizes are validated and errors
    name the offending byte offset.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise ValueError(
            f"truncated checkpoint: {len(blob)} bytes is shorter than the "
            f"{_HEADER.size}-byte header")
    magic, version, nx, ny, pcode, lcode, t = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise ValueError(f"not a checkpoint file (magic {magic!r} at offset 0)")
    if version != VERSION:
        raise ValueError(f"unsupported checkpoint version {version} "
                         f"(offset 4), expected {VERSION}")
    precision = Precision.from_code(pcode)
    layout = Layout.from_code(lcode)
    n = nx * ny
    le_storage = precision.storage.newbyteorder("<")
    plane_bytes = 9 * n * le_storage.itemsize
    expected = _HEADER.size + plane_bytes + n
    if len(blob) != expected:
        raise ValueError(
            f"checkpoint payload mismatch for declared {nx}x{ny} grid: "
            f"expected {expected} bytes, found {len(blob)} "
            f"(payload starts at offset {_HEADER.size})")
    planes = np.frombuffer(
        blob, dtype=le_storage, count=9 * n, offset=_HEADER.size)
    planes = planes.reshape(9, n).astype(precision.storage)
    mask = np.frombuffer(blob, dtype=np.uint8, count=n,
                         offset=_HEADER.size + plane_bytes).copy()
    if mask.max(initial=0) > boundaries.OUTLET:
        raise ValueError("checkpoint mask holds unknown cell codes")
    f_pre = PopulationField(np.ascontiguousarray(planes), nx, ny, layout)
    return SimState(f_pre=f_pre, f_post=f_pre.copy(), mask=mask,
                    nx=nx, ny=ny, layout=layout, precision=precision, t=t)
