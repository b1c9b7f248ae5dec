"""Command-line front end: run, validate, bench, pp.

Exit codes: 0 success, 1 bad usage or configuration, 2 numerical
failure (divergence or a failed validation check).  Machine-readable
results are single lines with stable key= prefixes (MLUPS=, L2=, PP=,
ST=); everything else goes to stderr.
"""

import os
import sys

import numpy as np

from . import cases, engine, io, perfport
from .fields import Layout, Precision
from .io import CliError

USAGE = """\
usage: lb2d <command> [flags]

commands:
  run        advance one configured simulation, write snapshots
  validate   physics checks (tgv accuracy/convergence, ldc rest, vks wake)
  bench      sweep tuning axes and write a CSV of MLUPs
  pp         performance-portability metric from an efficiency CSV
Run `lb2d <command> --help` for per-command flags.
"""


def _cmd_run(argv):
    spec, config = io.parse_run_config(argv)
    state = cases.init(spec, config.precision, config.layout)
    on_output = None
    on_checkpoint = None
    if config.output_every or config.checkpoint_every:
        os.makedirs(config.out_dir, exist_ok=True)
    if config.output_every:
        def on_output(s):
            io.write_vtk(os.path.join(config.out_dir,
                                      f"{spec.name}_{s.t:06d}.vtk"), s)
    if config.checkpoint_every:
        def on_checkpoint(s):
            engine.checkpoint(s, os.path.join(config.out_dir,
                                              f"{spec.name}_{s.t:06d}.ckpt"))
    stats = engine.run(state, config, on_output=on_output,
                       on_checkpoint=on_checkpoint)
    print(f"MLUPS={stats.mlups:.3f}")
    return 0


def _validate_tgv(ns):
    sizes = [int(s) for s in ns.sizes.split(",")]
    if len(sizes) != 2 or sizes[0] >= sizes[1]:
        raise CliError("--sizes needs two increasing grid sizes, e.g. 32,64")
    n_lo, n_hi = sizes
    nu = ns.nu
    u0_hi = ns.u0
    steps_hi = ns.steps
    failures = 0

    # decay rate and accuracy at the finer grid
    omega = 1.0 / (3.0 * nu + 0.5)
    spec = cases.CaseSpec("tgv", n_hi, n_hi, u0=u0_hi, omega=omega)
    state = cases.init(spec, Precision.DOUBLE, Layout.COL)
    sample = max(1, steps_hi // 40)
    amps = [(0, u0_hi)]
    config = engine.RunConfig(steps=sample, precision=Precision.DOUBLE)
    plan = engine.build_plan(state, config)
    done = 0
    while done < steps_hi:
        for _ in range(min(sample, steps_hi - done)):
            engine.step(state, plan=plan)
            done += 1
        _, ux, uy = state.macro()
        amps.append((done, float(np.max(np.hypot(ux, uy)))))
    t = np.array([a[0] for a in amps], dtype=np.float64)
    amp = np.array([a[1] for a in amps], dtype=np.float64)
    fit = np.polyfit(t, np.log(amp), 1)[0]
    expected = -cases.tgv_decay_rate(n_hi, state.params.nu)
    decay_err = abs(fit - expected) / abs(expected)
    print(f"DECAY={fit:.6e} expected {expected:.6e} rel.err {decay_err:.3%}")
    ok = decay_err <= 0.05
    failures += not ok
    print(("PASS" if ok else "FAIL") + " decay rate within 5%")

    _, uxr, uyr = cases.tgv_fields(n_hi, u0_hi, state.params.nu, state.t)
    _, ux, uy = state.macro()
    err_hi = cases.l2_velocity_error(ux, uy, uxr, uyr)
    print(f"L2={n_hi}:{err_hi:.6e}")
    ok = err_hi <= 0.02
    failures += not ok
    print(("PASS" if ok else "FAIL") + " relative L2 error <= 2%")

    # second-order convergence under diffusive scaling
    scale = n_hi // n_lo
    spec_lo = cases.CaseSpec("tgv", n_lo, n_lo, u0=u0_hi * scale, omega=omega)
    state_lo = cases.init(spec_lo, Precision.DOUBLE, Layout.COL)
    config_lo = engine.RunConfig(steps=max(1, steps_hi // (scale * scale)),
                                 precision=Precision.DOUBLE)
    engine.run(state_lo, config_lo)
    _, uxr, uyr = cases.tgv_fields(n_lo, spec_lo.u0, state_lo.params.nu,
                                   state_lo.t)
    _, ux, uy = state_lo.macro()
    err_lo = cases.l2_velocity_error(ux, uy, uxr, uyr)
    print(f"L2={n_lo}:{err_lo:.6e}")
    ratio = err_lo / err_hi
    print(f"RATIO={ratio:.3f}")
    ok = 3.0 <= ratio <= 5.0
    failures += not ok
    print(("PASS" if ok else "FAIL") + " error ratio in [3, 5]")
    return failures


def _validate_ldc(ns):
    spec = cases.CaseSpec("ldc", ns.n, ns.n, u0=0.0, omega=1.0)
    state = cases.init(spec, Precision.DOUBLE, Layout.COL)
    mass0 = float(state.f_pre.data.astype(np.float64).sum())
    engine.run(state, engine.RunConfig(steps=ns.steps,
                                       precision=Precision.DOUBLE))
    mass1 = float(state.f_pre.data.astype(np.float64).sum())
    drift = abs(mass1 - mass0) / mass0
    _, ux, uy = state.macro()
    umax = float(np.max(np.hypot(ux, uy)))
    print(f"MASS_DRIFT={drift:.3e}")
    print(f"UMAX={umax:.3e}")
    ok = drift <= 1e-12 and umax <= 1e-12
    print(("PASS" if ok else "FAIL")
          + " resting cavity is a fixed point (mass drift and velocity)")
    return 0 if ok else 1


def _validate_vks(ns):
    spec = cases.CaseSpec("vks", ns.nx, ns.ny, re=ns.re, u0=ns.u0)
    state = cases.init(spec, Precision.DOUBLE, Layout.COL)
    stats = engine.run(state,
                       engine.RunConfig(steps=ns.steps,
                                        precision=Precision.DOUBLE),
                       probe=spec.probe_xy)
    tail = stats.probe_series[stats.probe_series.size // 3:]
    try:
        st, crossings = cases.strouhal(tail, spec.diameter, spec.u0)
    except ValueError as e:
        print("ST=nan CROSSINGS=0")
        print(f"FAIL vortex shedding ({e})")
        return 1
    print(f"ST={st:.4f}")
    print(f"CROSSINGS={crossings}")
    ok = 0.1 <= st <= 0.3 and crossings >= 10
    print(("PASS" if ok else "FAIL")
          + " established shedding with Strouhal number in [0.1, 0.3]")
    return 0 if ok else 1


def _cmd_validate(argv):
    p = io._Parser(prog="lb2d validate", description="physics checks")
    p.add_argument("--case", choices=["tgv", "ldc", "vks"], required=True)
    p.add_argument("--sizes", default="32,64", help="tgv: coarse,fine grids")
    p.add_argument("--nu", type=float, default=0.0259,
                   help="tgv: lattice viscosity")
    p.add_argument("--u0", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--n", type=int, default=64, help="ldc: cavity size")
    p.add_argument("--nx", type=int, default=240, help="vks: channel length")
    p.add_argument("--ny", type=int, default=80, help="vks: channel height")
    p.add_argument("--re", type=float, default=100.0, help="vks: Reynolds")
    ns = p.parse_args(argv)
    if ns.case == "tgv":
        ns.u0 = 0.04 if ns.u0 is None else ns.u0
        ns.steps = 2000 if ns.steps is None else ns.steps
        failures = _validate_tgv(ns)
    elif ns.case == "ldc":
        ns.steps = 200 if ns.steps is None else ns.steps
        failures = _validate_ldc(ns)
    else:
        ns.u0 = 0.1 if ns.u0 is None else ns.u0
        ns.steps = 12000 if ns.steps is None else ns.steps
        failures = _validate_vks(ns)
    return 0 if failures == 0 else 2


def _cmd_bench(argv):
    p = io.run_parser(prog="lb2d bench")
    # append, not plain nargs="*": a repeated --axes flag must add an axis,
    # not silently replace the previous one
    p.add_argument("--axes", nargs="*", action="append", default=[],
                   help="axis=v1,v2 pairs over precision/layout/schedule/tx/ty")
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--out", default="bench.csv")
    p.add_argument("--matrix", default=None,
                   help="JSON list of flag objects, one job each")
    ns, extras = p.parse_known_args(argv)
    if extras:
        raise CliError(f"unknown flag {extras[0]!r}")
    if ns.reps < 1:
        raise CliError("--reps must be >= 1")
    if ns.reps == 1:
        print("bench: reps=1 gives a single sample, no median smoothing",
              file=sys.stderr)

    spec, config = io.parse_run_config(_strip_bench_flags(argv))
    if ns.matrix:
        import json
        with open(ns.matrix) as fh:
            rows = json.load(fh)
        if not isinstance(rows, list):
            raise CliError("--matrix must hold a JSON list of flag objects")
        jobs = []
        for row in rows:
            row_argv = _strip_bench_flags(argv)
            for k, v in row.items():
                row_argv += [f"--{k.replace('_', '-')}", str(v)]
            jobs.append(io.parse_run_config(row_argv))
    else:
        axes = {}
        for token in (t for group in ns.axes for t in group):
            if "=" not in token:
                raise CliError(f"bad axis '{token}', expected name=v1,v2")
            key, vals = token.split("=", 1)
            axes[key] = vals.split(",")
        try:
            jobs = perfport.expand_axes(spec, config, axes)
        except ValueError as e:
            raise CliError(str(e)) from None

    def progress(rec):
        label = f"{rec.precision}/{rec.layout}/{rec.schedule}"
        if rec.error:
            print(f"bench: {label}: ERROR {rec.error}", file=sys.stderr)
        else:
            print(f"bench: {label}: {rec.mlups:.2f} MLUPs", file=sys.stderr)

    records = perfport.bench_sweep(jobs, reps=ns.reps, progress=progress)
    io.write_bench_csv(records, ns.out)
    print(f"CSV={ns.out}")
    return 0


def _strip_bench_flags(argv):
    """Drop bench-only flags (and their values) before run-config parsing."""
    out = []
    skip = 0
    for i, a in enumerate(argv):
        if skip:
            skip -= 1
            continue
        if a in ("--reps", "--out", "--matrix"):
            skip = 1
            continue
        if a == "--axes":
            j = i + 1
            while j < len(argv) and not argv[j].startswith("--"):
                j += 1
            skip = j - i - 1
            continue
        out.append(a)
    return out


def _cmd_pp(argv):
    p = io._Parser(prog="lb2d pp", description="portability metric")
    p.add_argument("--in", dest="path", required=True,
                   help="CSV with columns platform,efficiency (NA allowed)")
    ns = p.parse_args(argv)
    rows = io.read_efficiency_csv(ns.path)
    value = perfport.pp_metric([e for _, e in rows])
    unsupported = [name for name, e in rows if e is None]
    if unsupported:
        print(f"PP=0.0% (unsupported platform: {', '.join(unsupported)})")
    else:
        print(f"PP={100.0 * value:.1f}%")
    return 0


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ("-h", "--help"):
        print(USAGE, end="")
        return 0
    cmd, rest = argv[0], argv[1:]
    table = {"run": _cmd_run, "validate": _cmd_validate,
             "bench": _cmd_bench, "pp": _cmd_pp}
    if cmd not in table:
        print(f"lb2d: unknown command '{cmd}'\n{USAGE}", file=sys.stderr,
              end="")
        return 1
    try:
        return table[cmd](rest)
    except CliError as e:
        print(f"lb2d {cmd}: error: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"lb2d {cmd}: error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"lb2d {cmd}: error: {e}", file=sys.stderr)
        return 1
    except engine.DivergenceError as e:
        print(f"lb2d {cmd}: numerical failure: {e}", file=sys.stderr)
        return 2
    except SystemExit as e:  # argparse --help inside subcommands
        return int(e.code or 0)


if __name__ == "__main__":
    sys.exit(main())
