"""File surfaces: VTK snapshots, benchmark CSV, efficiency CSV, CLI config.

The VTK writer emits legacy ASCII structured points, one density scalar
and one velocity vector per cell, x fastest.  Values are written as
float32 with shortest-round-trip formatting, so identical states always
serialize to identical bytes.
"""

import argparse
import csv
import json
import sys

import numpy as np

from .cases import CaseSpec
from .engine import RunConfig, Schedule
from .fields import Layout, Precision


def _fmt(v):
    return "%.9g" % float(v)


def write_vtk(path, state):
    """Write one legacy ASCII snapshot of density and velocity."""
    rho, ux, uy = state.macro()
    rho32 = rho.astype(np.float32)
    ux32 = ux.astype(np.float32)
    uy32 = uy.astype(np.float32)
    nx, ny = state.nx, state.ny
    lines = [
        "# vtk DataFile Version 3.0",
        f"miniLB t={state.t}",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {nx} {ny} 1",
        "ORIGIN 0 0 0",
        "SPACING 1 1 1",
        f"POINT_DATA {nx * ny}",
        "SCALARS density float 1",
        "LOOKUP_TABLE default",
    ]
    for y in range(ny):
        for x in range(nx):
            lines.append(_fmt(rho32[x, y]))
    lines.append("VECTORS velocity float")
    for y in range(ny):
        for x in range(nx):
            lines.append(f"{_fmt(ux32[x, y])} {_fmt(uy32[x, y])} 0")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


BENCH_FIELDS = ["case", "nx", "ny", "precision", "layout", "schedule",
                "tx", "ty", "steps", "seconds", "mlups", "flops_per_cell",
                "bytes_per_cell", "ai", "error"]


def write_bench_csv(records, path):
    """One row per benchmarked configuration; failures carry their error
    message in the trailing column and empty metric fields."""
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=BENCH_FIELDS)
        w.writeheader()
        for r in records:
            row = {k: getattr(r, k) for k in BENCH_FIELDS}
            if r.error:
                for k in ("seconds", "mlups", "flops_per_cell",
                          "bytes_per_cell", "ai"):
                    row[k] = ""
            else:
                row["seconds"] = repr(float(r.seconds))
                row["mlups"] = repr(float(r.mlups))
                row["ai"] = repr(float(r.ai))
            w.writerow(row)


def read_efficiency_csv(path):
    """Parse platform efficiencies: columns `platform, efficiency`,
    the literal NA marking an unsupported platform.  Returns a list of
    (platform, efficiency-or-None)."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        if "platform" not in cols or "efficiency" not in cols:
            raise ValueError(
                f"efficiency CSV needs 'platform' and 'efficiency' columns, "
                f"found {cols}")
        for k, row in enumerate(reader, start=2):
            token = (row["efficiency"] or "").strip()
            if token.upper() == "NA":
                out.append((row["platform"], None))
                continue
            try:
                out.append((row["platform"], float(token)))
            except ValueError:
                raise ValueError(
                    f"line {k}: efficiency '{token}' is neither a number "
                    f"nor NA") from None
    if not out:
        raise ValueError("efficiency CSV lists no platforms")
    return out


class CliError(ValueError):
    """Bad command-line input; the CLI maps this to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def run_parser(prog="lb2d run"):
    p = _Parser(prog=prog, description="run one simulation")
    p.add_argument("--case", choices=["ldc", "tgv", "vks"], default="ldc")
    p.add_argument("--nx", type=int, default=128)
    p.add_argument("--ny", type=int, default=None,
                   help="defaults to --nx")
    p.add_argument("--re", type=float, default=100.0)
    p.add_argument("--u0", type=float, default=0.1)
    p.add_argument("--omega", type=float, default=None,
                   help="explicit relaxation rate (required when u0=0)")
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--precision",
                   choices=[x.token for x in Precision], default="single")
    p.add_argument("--layout", choices=[x.token for x in Layout],
                   default="col")
    p.add_argument("--schedule", choices=["auto", "tiled"], default="auto")
    p.add_argument("--tile-x", type=int, default=None)
    p.add_argument("--tile-y", type=int, default=None)
    p.add_argument("--threads", type=int, default=0)
    p.add_argument("--output-every", type=int, default=0)
    p.add_argument("--checkpoint-every", type=int, default=0)
    p.add_argument("--out-dir", default="out")
    p.add_argument("--config", default=None,
                   help="JSON file of defaults; flags given here win")
    return p


def parse_run_config(argv, config_file=None):
    """Turn run-style flags (plus an optional JSON defaults file) into a
    validated (CaseSpec, RunConfig) pair."""
    parser = run_parser()
    ns, extras = parser.parse_known_args(list(argv))
    if extras:
        raise CliError(f"unknown flag {extras[0]!r}")
    path = config_file or ns.config
    if path:
        with open(path) as fh:
            raw = json.load(fh)
        allowed = {a.dest for a in parser._actions if a.dest != "help"}
        unknown = set(raw) - allowed
        if unknown:
            raise CliError(f"unknown config keys {sorted(unknown)}")
        parser.set_defaults(**raw)
        ns, _ = parser.parse_known_args(list(argv))
    if ns.ny is None:
        ns.ny = ns.nx
    if ns.schedule == "tiled":
        if ns.tile_x is None or ns.tile_y is None:
            raise CliError("--schedule tiled needs --tile-x and --tile-y")
        schedule = Schedule("tiled", ns.tile_x, ns.tile_y)
    else:
        if ns.tile_x is not None or ns.tile_y is not None:
            raise CliError("tile sizes only apply to --schedule tiled")
        schedule = Schedule("auto")
    try:
        spec = CaseSpec(name=ns.case, nx=ns.nx, ny=ns.ny, re=ns.re,
                        u0=ns.u0, omega=ns.omega)
        config = RunConfig(steps=ns.steps,
                           precision=Precision.from_token(ns.precision),
                           layout=Layout.from_token(ns.layout),
                           schedule=schedule,
                           threads=ns.threads,
                           output_every=ns.output_every,
                           checkpoint_every=ns.checkpoint_every,
                           out_dir=ns.out_dir)
    except ValueError as e:
        raise CliError(str(e)) from None
    return spec, config


def print_usage_error(prog, err, stream=None):
    print(f"{prog}: error: {err}", file=stream or sys.stderr)
