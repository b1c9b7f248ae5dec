"""Fused pull-scheme collide-and-stream kernels.

One pass per time step: every fluid destination cell gathers its nine
incoming populations from the pre-step buffer (bouncing off walls as it
goes), collides them, and writes nine post-step values.  Each cell is
written exactly once and nothing reads the post buffer, so the result is
independent of traversal order; tiling and thread count are pure
performance knobs.

Two backends ship. The default compiles per-cell loops with numba; a
vectorized numpy fallback covers numba-free installs and is forced with
LB2D_BACKEND=numpy.  Both spell the arithmetic of lattice.collide_cell
in the same operation order with dtype-true constants, so for a given
precision mode their outputs match bit for bit.
"""

import os

import numpy as np

from .boundaries import FLUID, INLET, MOVING_WALL, OUTLET, SOLID
from .fields import Layout, Precision

try:
    from numba import njit, prange
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only on bare installs
    HAS_NUMBA = False
    prange = range

    def njit(*args, **kwargs):
        # signature-compatible no-op decorator
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn
        return wrap


def _pick_backend():
    token = os.environ.get("LB2D_BACKEND", "auto").strip().lower() or "auto"
    if token == "auto":
        return "numba" if HAS_NUMBA else "numpy"
    if token == "numpy":
        return "numpy"
    if token == "numba":
        if not HAS_NUMBA:
            raise RuntimeError("LB2D_BACKEND=numba but numba is not importable")
        return "numba"
    raise ValueError(f"LB2D_BACKEND must be 'auto', 'numba', or 'numpy', "
                     f"got '{token}'")


BACKEND = _pick_backend()

# compute dtype -> compiled dispatcher; store dtype specializations are
# numba's business
_FUSED = {}


def _build_fused(compute_dtype):
    ct = np.dtype(compute_dtype).type
    one = ct(1.0)
    zero = ct(0.0)
    c3 = ct(3.0)
    c45 = ct(4.5)
    c15 = ct(1.5)
    w0 = ct(4.0 / 9.0)
    ws = ct(1.0 / 9.0)
    wd = ct(1.0 / 36.0)
    ms = ct(2.0 / 3.0)  # 2 * w_axis / cs^2
    md = ct(1.0 / 6.0)  # 2 * w_diag / cs^2

    @njit(inline="always")
    def cell(fpre, fpost, mask, x, y, nx, ny, sx, sy, omega,
             kE, kN, kW, kS, kNE, kNW, kSW, kSE):
        d = x * sx + y * sy
        if mask[d] != 0:
            return
        g0 = one * fpre[0, d]

        # E (1,0)
        xs = x - 1
        if xs < 0:
            xs += nx
        s = xs * sx + y * sy
        m = mask[s]
        if m == 1:
            g1 = one * fpre[3, d]
        elif m == 2:
            g1 = one * fpre[3, d] + kE
        else:
            g1 = one * fpre[1, s]

        # N (0,1)
        ys = y - 1
        if ys < 0:
            ys += ny
        s = x * sx + ys * sy
        m = mask[s]
        if m == 1:
            g2 = one * fpre[4, d]
        elif m == 2:
            g2 = one * fpre[4, d] + kN
        else:
            g2 = one * fpre[2, s]

        # W (-1,0)
        xs = x + 1
        if xs >= nx:
            xs -= nx
        s = xs * sx + y * sy
        m = mask[s]
        if m == 1:
            g3 = one * fpre[1, d]
        elif m == 2:
            g3 = one * fpre[1, d] + kW
        else:
            g3 = one * fpre[3, s]

        # S (0,-1)
        ys = y + 1
        if ys >= ny:
            ys -= ny
        s = x * sx + ys * sy
        m = mask[s]
        if m == 1:
            g4 = one * fpre[2, d]
        elif m == 2:
            g4 = one * fpre[2, d] + kS
        else:
            g4 = one * fpre[4, s]

        # NE (1,1)
        xs = x - 1
        if xs < 0:
            xs += nx
        ys = y - 1
        if ys < 0:
            ys += ny
        s = xs * sx + ys * sy
        m = mask[s]
        if m == 1:
            g5 = one * fpre[7, d]
        elif m == 2:
            g5 = one * fpre[7, d] + kNE
        else:
            g5 = one * fpre[5, s]

        # NW (-1,1)
        xs = x + 1
        if xs >= nx:
            xs -= nx
        ys = y - 1
        if ys < 0:
            ys += ny
        s = xs * sx + ys * sy
        m = mask[s]
        if m == 1:
            g6 = one * fpre[8, d]
        elif m == 2:
            g6 = one * fpre[8, d] + kNW
        else:
            g6 = one * fpre[6, s]

        # SW (-1,-1)
        xs = x + 1
        if xs >= nx:
            xs -= nx
        ys = y + 1
        if ys >= ny:
            ys -= ny
        s = xs * sx + ys * sy
        m = mask[s]
        if m == 1:
            g7 = one * fpre[5, d]
        elif m == 2:
            g7 = one * fpre[5, d] + kSW
        else:
            g7 = one * fpre[7, s]

        # SE (1,-1)
        xs = x - 1
        if xs < 0:
            xs += nx
        ys = y + 1
        if ys >= ny:
            ys -= ny
        s = xs * sx + ys * sy
        m = mask[s]
        if m == 1:
            g8 = one * fpre[6, d]
        elif m == 2:
            g8 = one * fpre[6, d] + kSE
        else:
            g8 = one * fpre[8, s]

        # same operation order as lattice.collide_cell
        rho = g0 + g1 + g2 + g3 + g4 + g5 + g6 + g7 + g8
        mx = g1 - g3 + g5 - g6 - g7 + g8
        my = g2 - g4 + g5 + g6 - g7 - g8
        if rho != zero:
            inv = one / rho
        else:
            inv = zero
        ux = mx * inv
        uy = my * inv
        usq = ux * ux + uy * uy
        um = one - c15 * usq
        wr0 = w0 * rho
        wrs = ws * rho
        wrd = wd * rho
        a = ux + uy
        b = ux - uy
        qx = c45 * (ux * ux)
        tx = c3 * ux
        px = um + qx
        e1 = wrs * (px + tx)
        e3 = wrs * (px - tx)
        qy = c45 * (uy * uy)
        ty = c3 * uy
        py = um + qy
        e2 = wrs * (py + ty)
        e4 = wrs * (py - ty)
        qa = c45 * (a * a)
        ta = c3 * a
        pa = um + qa
        e5 = wrd * (pa + ta)
        e7 = wrd * (pa - ta)
        qb = c45 * (b * b)
        tb = c3 * b
        pb = um + qb
        e8 = wrd * (pb + tb)
        e6 = wrd * (pb - tb)
        e0 = wr0 * um
        fpost[0, d] = g0 - omega * (g0 - e0)
        fpost[1, d] = g1 - omega * (g1 - e1)
        fpost[2, d] = g2 - omega * (g2 - e2)
        fpost[3, d] = g3 - omega * (g3 - e3)
        fpost[4, d] = g4 - omega * (g4 - e4)
        fpost[5, d] = g5 - omega * (g5 - e5)
        fpost[6, d] = g6 - omega * (g6 - e6)
        fpost[7, d] = g7 - omega * (g7 - e7)
        fpost[8, d] = g8 - omega * (g8 - e8)

    @njit(parallel=True, nogil=True)
    def fused(fpre, fpost, mask, nx, ny, sx, sy, omega, uwx, uwy, tx, ty):
        kE = ms * uwx
        kN = ms * uwy
        kW = -kE
        kS = -kN
        kNE = md * (uwx + uwy)
        kSW = -kNE
        kNW = md * (uwy - uwx)
        kSE = -kNW
        ntx = (nx + tx - 1) // tx
        nty = (ny + ty - 1) // ty
        if sx == 1:
            # x is the contiguous axis: sweep it innermost
            for t in prange(ntx * nty):
                x0 = (t % ntx) * tx
                y0 = (t // ntx) * ty
                x1 = min(x0 + tx, nx)
                y1 = min(y0 + ty, ny)
                for y in range(y0, y1):
                    for x in range(x0, x1):
                        cell(fpre, fpost, mask, x, y, nx, ny, sx, sy, omega,
                             kE, kN, kW, kS, kNE, kNW, kSW, kSE)
        else:
            for t in prange(ntx * nty):
                y0 = (t % nty) * ty
                x0 = (t // nty) * tx
                x1 = min(x0 + tx, nx)
                y1 = min(y0 + ty, ny)
                for x in range(x0, x1):
                    for y in range(y0, y1):
                        cell(fpre, fpost, mask, x, y, nx, ny, sx, sy, omega,
                             kE, kN, kW, kS, kNE, kNW, kSW, kSE)

    return fused


def _fused_for(compute_dtype):
    key = np.dtype(compute_dtype)
    fn = _FUSED.get(key)
    if fn is None:
        fn = _build_fused(key)
        _FUSED[key] = fn
    return fn


# per-direction factors: gathered value picks up 6 * w_i * (c_i . u_wall)
# when its source is a moving wall (the +-0 split lives in the kernel too)
def _wall_terms(ct, uwx, uwy):
    ms = ct(2.0 / 3.0)
    md = ct(1.0 / 6.0)
    kE = ms * uwx
    kN = ms * uwy
    kNE = md * (uwx + uwy)
    kNW = md * (uwy - uwx)
    return {1: kE, 2: kN, 3: -kE, 4: -kN, 5: kNE, 6: kNW, 7: -kNE, 8: -kNW}


class _GatherPlan:
    """Precomputed flat gather tables for the numpy backend.

    flat_src[i][d] indexes the raveled (9*n) pre buffer; bounce-back
    destinations point at their own opposite plane.  corr[i] lists fluid
    destinations whose source along i is a moving wall.
    """

    def __init__(self, mask, nx, ny, layout):
        from .lattice import C, OPP

        sx, sy = layout.strides(nx, ny)
        n = nx * ny
        d = np.arange(n, dtype=np.int64)
        if sx == 1:
            x = d % nx
            y = d // nx
        else:
            x = d // ny
            y = d % ny
        fluid = mask == FLUID
        self.fluid = np.nonzero(fluid)[0]
        self.flat_src = np.empty((9, n), dtype=np.int64)
        self.flat_src[0] = d
        self.corr = [None] * 9
        for i in range(1, 9):
            xs = (x - C[i, 0]) % nx
            ys = (y - C[i, 1]) % ny
            s = xs * sx + ys * sy
            bounce = (mask[s] == SOLID) | (mask[s] == MOVING_WALL)
            self.flat_src[i] = np.where(bounce, OPP[i] * n + d, i * n + s)
            self.corr[i] = np.nonzero(fluid & (mask[s] == MOVING_WALL))[0]


def _fused_numpy(fpre, fpost, plan, omega, uwx, uwy, compute_dtype):
    ct = np.dtype(compute_dtype).type
    one = ct(1.0)
    zero = ct(0.0)
    c3 = ct(3.0)
    c45 = ct(4.5)
    c15 = ct(1.5)
    w0 = ct(4.0 / 9.0)
    ws = ct(1.0 / 9.0)
    wd = ct(1.0 / 36.0)
    omega = ct(omega)
    wall = _wall_terms(ct, ct(uwx), ct(uwy))

    flat = fpre.reshape(-1)
    g = flat[plan.flat_src]
    if g.dtype != np.dtype(compute_dtype):
        g = g.astype(compute_dtype)
    for i in range(1, 9):
        idx = plan.corr[i]
        if idx.size:
            g[i, idx] += wall[i]
    g0, g1, g2, g3, g4, g5, g6, g7, g8 = g

    rho = g0 + g1 + g2 + g3 + g4 + g5 + g6 + g7 + g8
    mx = g1 - g3 + g5 - g6 - g7 + g8
    my = g2 - g4 + g5 + g6 - g7 - g8
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(rho != zero, one / rho, zero)
    ux = mx * inv
    uy = my * inv
    usq = ux * ux + uy * uy
    um = one - c15 * usq
    wr0 = w0 * rho
    wrs = ws * rho
    wrd = wd * rho
    a = ux + uy
    b = ux - uy
    qx = c45 * (ux * ux)
    tx = c3 * ux
    px = um + qx
    qy = c45 * (uy * uy)
    ty = c3 * uy
    py = um + qy
    qa = c45 * (a * a)
    ta = c3 * a
    pa = um + qa
    qb = c45 * (b * b)
    tb = c3 * b
    pb = um + qb
    eq = (wr0 * um,
          wrs * (px + tx), wrs * (py + ty), wrs * (px - tx), wrs * (py - ty),
          wrd * (pa + ta), wrd * (pb - tb), wrd * (pa - ta), wrd * (pb + tb))

    fl = plan.fluid
    for i in range(9):
        gi = g[i]
        fpost[i, fl] = (gi - omega * (gi - eq[i]))[fl]


class KernelPlan:
    """Everything one run needs to advance the populations one step.

    Captures grid shape, layout strides, precision mode, resolved tile
    sizes, wall velocity, relaxation rate, and the backend-specific
    machinery (compiled kernel or gather tables, plus scratch planes for
    half-precision storage, which the compiled backend cannot address
    directly).
    """

    def __init__(self, nx, ny, layout, precision, mask, omega,
                 wall_u=(0.0, 0.0), tile=None, backend=None):
        self.nx = nx
        self.ny = ny
        self.layout = layout
        self.precision = precision
        self.mask = mask
        self.backend = backend or BACKEND
        if self.backend not in ("numba", "numpy"):
            raise ValueError(f"unknown backend '{self.backend}'")
        if self.backend == "numba" and not HAS_NUMBA:
            raise RuntimeError("numba backend requested but numba is "
                               "not importable")
        self.sx, self.sy = layout.strides(nx, ny)
        if tile is None:
            # one contiguous line per task
            tile = (nx, 1) if self.sx == 1 else (1, ny)
        tx, ty = int(tile[0]), int(tile[1])
        if not (1 <= tx <= nx and 1 <= ty <= ny):
            raise ValueError(f"tile {tx}x{ty} does not fit a {nx}x{ny} grid")
        self.tile = (tx, ty)
        ct = precision.compute.type
        self._omega = ct(omega)
        self._uwx = ct(wall_u[0])
        self._uwy = ct(wall_u[1])
        if self.backend == "numba":
            self._fn = _fused_for(precision.compute)
            if precision.storage == np.dtype(np.float16):
                # bridge planes: f16 -> f32 is exact, f32 -> f16 rounds
                # to nearest, identical to a native half kernel
                self._pre32 = np.empty((9, nx * ny), dtype=np.float32)
                self._post32 = np.empty((9, nx * ny), dtype=np.float32)
            else:
                self._pre32 = None
        else:
            self._plan = _GatherPlan(mask, nx, ny, layout)

    def step(self, fpre, fpost):
        """Advance one step: read fpre, write every fluid cell of fpost."""
        if self.backend == "numba":
            tx, ty = self.tile
            if self._pre32 is not None:
                np.copyto(self._pre32, fpre)
                np.copyto(self._post32, fpost)
                self._fn(self._pre32, self._post32, self.mask,
                         self.nx, self.ny, self.sx, self.sy, self._omega,
                         self._uwx, self._uwy, tx, ty)
                np.copyto(fpost, self._post32)
            else:
                self._fn(fpre, fpost, self.mask, self.nx, self.ny,
                         self.sx, self.sy, self._omega, self._uwx, self._uwy,
                         tx, ty)
        else:
            _fused_numpy(fpre, fpost, self._plan, self._omega,
                         self._uwx, self._uwy, self.precision.compute)
