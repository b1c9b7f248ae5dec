"""Compare the compiled kernel against the pure-numpy fallback.

Runs the same lid-driven cavity problem through both code paths and
reports the median MLUPs of each, plus the speedup.  The numpy path is
the portability floor: it must produce bit-identical populations, just
slower.

Usage: python3 benchmarks/compare_backends.py [N] [STEPS]
"""

import statistics
import sys
import time

import numpy as np

from lb2d import cases, engine
from lb2d.fields import Layout, Precision
from lb2d.kernels import HAS_NUMBA, KernelPlan


def time_backend(backend, n, steps, reps=3):
    spec = cases.CaseSpec("ldc", n, n, re=1000.0, u0=0.1)
    results = []
    final = None
    for rep in range(reps + 1):  # first rep warms up (JIT compile, caches)
        state = cases.init(spec, Precision.SINGLE, Layout.COL)
        plan = KernelPlan(state.nx, state.ny, state.layout, state.precision,
                          state.mask, state.params.omega, state.wall_u,
                          tile=None, backend=backend)
        fpre, fpost = state.f_pre.data, state.f_post.data
        t0 = time.perf_counter()
        for _ in range(steps):
            plan.step(fpre, fpost)
            fpre, fpost = fpost, fpre
        dt = time.perf_counter() - t0
        if rep:
            results.append(n * n * steps / (dt * 1e6))
        final = fpre.copy()
    return statistics.median(results), final


def main(argv):
    n = int(argv[1]) if len(argv) > 1 else 256
    steps = int(argv[2]) if len(argv) > 2 else 50
    print(f"lid-driven cavity, {n}x{n}, {steps} steps, single/col")

    numpy_mlups, numpy_f = time_backend("numpy", n, steps)
    print(f"numpy   {numpy_mlups:10.2f} MLUPs")

    if not HAS_NUMBA:
        print("numba not installed; nothing to compare")
        return

    numba_mlups, numba_f = time_backend("numba", n, steps)
    print(f"numba   {numba_mlups:10.2f} MLUPs")
    print(f"speedup {numba_mlups / numpy_mlups:10.2f}x")

    if np.array_equal(numpy_f, numba_f):
        print("bitwise  identical populations")
    else:
        diff = int(np.sum(numpy_f != numba_f))
        print(f"bitwise  MISMATCH in {diff} of {numpy_f.size} entries")
        sys.exit(1)


if __name__ == "__main__":
    main(sys.argv)
