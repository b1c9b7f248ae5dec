"""Throughput, arithmetic intensity, roofline, and portability metrics.

The update-rate currency is MLUPs: million lattice-site updates per
second, grid cells times steps over kernel seconds.  Cost models below
are per fused cell update and assume the pull kernel's ideal traffic
(each population plane read once and written once, mask effects and
caches not modeled); they feed the roofline estimate, not the timer.
"""

import itertools
import statistics
from dataclasses import dataclass, replace

from .fields import Layout, Precision

#: Arithmetic cost of one fused cell update, counted on the canonical
#: per-cell expression (lattice.collide_cell), adds/subs + muls + divs:
#:
#:   moments (rho, momentum, 1/rho, u)           21
#:   speed-square and common factor (1 - 1.5u^2)  5
#:   equilibrium, opposite pairs sharing terms   38
#:   BGK relaxation, 9 directions x 3            27
#:   total                                       91
#:
#: The identical tally is re-derived in the test suite by replaying the
#: expression with operation-counting numbers.
FLOPS_PER_CELL = 91


def flops_per_cell(precision=None):
    """Floating-point operations per fused cell update.

    The count is the same in every precision mode; only the width of
    each operation changes.  `precision` is accepted for symmetry with
    bytes_per_cell.
    """
    return FLOPS_PER_CELL


def bytes_per_cell(precision):
    """Ideal memory traffic per cell update: 9 planes read + 9 written
    in storage precision."""
    if not isinstance(precision, Precision):
        precision = Precision.from_token(precision)
    return 18 * precision.storage.itemsize


def arithmetic_intensity(flops, nbytes):
    """Flops per byte moved."""
    if nbytes <= 0:
        raise ValueError("byte count must be positive")
    return flops / nbytes


def mlups(nx, ny, steps, seconds):
    """Million lattice-site updates per second."""
    if seconds <= 0.0:
        raise ValueError("elapsed seconds must be positive")
    if nx < 1 or ny < 1 or steps < 1:
        raise ValueError("grid sizes and steps must be positive")
    return nx * ny * steps / (seconds * 1e6)


def roofline_peak(fr_peak, bandwidth, ai):
    """Attainable rate under the roofline: min(FR, BW * AI).

    fr_peak and the result share one unit (e.g. GFLOP/s), bandwidth is
    bytes per that unit's time base (e.g. GB/s).
    """
    if fr_peak <= 0 or bandwidth <= 0 or ai <= 0:
        raise ValueError("roofline inputs must be positive")
    return min(fr_peak, bandwidth * ai)


def roofline_efficiency(achieved, peak):
    """Fraction of the attainable rate actually reached."""
    if peak <= 0:
        raise ValueError("peak rate must be positive")
    if achieved < 0:
        raise ValueError("achieved rate cannot be negative")
    return achieved / peak


def estimate_cross_platform_flop_rate(fr_ref, time_ref, time_other):
    """Transfer a measured flop rate to another platform's timing.

    Both platforms execute the same kernel on the same grid, hence the
    same operation count: FR_other = FR_ref * time_ref / time_other, so
    the faster machine reports the higher rate.
    """
    if fr_ref <= 0 or time_ref <= 0 or time_other <= 0:
        raise ValueError("rates and times must be positive")
    return fr_ref * time_ref / time_other


def pp_metric(efficiencies):
    """Harmonic-mean performance portability over a platform set.

    `efficiencies` holds one entry per platform: a fraction in (0, 1],
    or None for a platform the application does not support.  Any
    unsupported platform pins the metric to exactly 0.
    """
    effs = list(efficiencies)
    if not effs:
        raise ValueError("platform set is empty")
    if any(e is None for e in effs):
        return 0.0
    total = 0.0
    for e in effs:
        if not (0.0 < e <= 1.0):
            raise ValueError(f"efficiency {e} outside (0, 1]")
        total += 1.0 / e
    return len(effs) / total


@dataclass
class PerfRecord:
    """One benchmark outcome, ready for the CSV surface."""

    case: str
    nx: int
    ny: int
    precision: str
    layout: str
    schedule: str
    tx: int
    ty: int
    steps: int
    seconds: float = 0.0
    mlups: float = 0.0
    flops_per_cell: int = 0
    bytes_per_cell: int = 0
    ai: float = 0.0
    error: str = ""


def _record_for(spec, config):
    try:
        tile = config.schedule.resolve(spec.nx, spec.ny, config.layout)
    except ValueError:
        # unfit tile: record it as requested, the run annotates the error
        tile = (config.schedule.tx, config.schedule.ty)
    if tile is None:
        sx, _ = config.layout.strides(spec.nx, spec.ny)
        tile = (spec.nx, 1) if sx == 1 else (1, spec.ny)
    f = flops_per_cell(config.precision)
    b = bytes_per_cell(config.precision)
    return PerfRecord(
        case=spec.name, nx=spec.nx, ny=spec.ny,
        precision=config.precision.token, layout=config.layout.token,
        schedule=config.schedule.label(), tx=tile[0], ty=tile[1],
        steps=config.steps, flops_per_cell=f, bytes_per_cell=b,
        ai=arithmetic_intensity(f, b))


def bench_sweep(jobs, reps=3, progress=None):
    """Benchmark (CaseSpec, RunConfig) jobs: one discarded warm-up run,
    then the median of `reps` timed runs, each from a fresh state.

    A failing configuration yields a record annotated with the error
    instead of aborting the sweep.
    """
    from . import cases, engine  # local: keeps metric-only use lightweight

    if reps < 1:
        raise ValueError("reps must be >= 1")
    records = []
    for spec, config in jobs:
        rec = _record_for(spec, config)
        try:
            engine.run(cases.init(spec, config.precision, config.layout),
                       config)  # warm-up: JIT + page faults land here
            times = []
            for _ in range(reps):
                state = cases.init(spec, config.precision, config.layout)
                times.append(engine.run(state, config).seconds)
            rec.seconds = statistics.median(times)
            rec.mlups = mlups(spec.nx, spec.ny, config.steps, rec.seconds)
        except Exception as e:  # noqa: BLE001 - sweep must survive any job
            rec.error = f"{type(e).__name__}: {e}"
        records.append(rec)
        if progress is not None:
            progress(rec)
    return records


def expand_axes(base_spec, base_config, axes):
    """Cartesian product of tuning-axis values over a base job.

    Supported axes: precision, layout, schedule, tx, ty.  Schedule
    'tiled' picks up tile sizes from the tx/ty axes when present, else
    from the base schedule, else 16x16 clamped to the grid.
    """
    from .engine import Schedule

    allowed = ("precision", "layout", "schedule", "tx", "ty")
    for k in axes:
        if k not in allowed:
            raise ValueError(f"unknown axis '{k}', expected one of {allowed}")
    keys = list(axes)
    jobs = []
    for combo in itertools.product(*(axes[k] for k in keys)):
        pick = dict(zip(keys, combo))
        precision = (Precision.from_token(pick["precision"])
                     if "precision" in pick else base_config.precision)
        layout = (Layout.from_token(pick["layout"])
                  if "layout" in pick else base_config.layout)
        kind = pick.get("schedule", base_config.schedule.kind)
        if kind == "tiled":
            if base_config.schedule.kind == "tiled":
                tx, ty = base_config.schedule.tx, base_config.schedule.ty
            else:
                tx, ty = min(16, base_spec.nx), min(16, base_spec.ny)
            tx = int(pick.get("tx", tx))
            ty = int(pick.get("ty", ty))
            schedule = Schedule("tiled", tx, ty)
        else:
            schedule = Schedule("auto")
        jobs.append((base_spec,
                     replace(base_config, precision=precision, layout=layout,
                             schedule=schedule)))
    return jobs
