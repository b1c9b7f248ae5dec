"""Independent reference implementations used as test oracles.

Everything here is derived from first principles and written before (and
apart from) the package code it checks: naive per-direction equilibrium,
an explicit-loop gather/collide step, a compensated mass sum, and a
counting-float type for verifying arithmetic-operation tallies.  Nothing
in this module imports from lb2d.
"""

import numpy as np

# Discrete velocity set, re-derived by hand: index 0 rest, 1..4 the axis
# directions E,N,W,S, 5..8 the diagonals NE,NW,SW,SE.
REF_C = [(0, 0), (1, 0), (0, 1), (-1, 0), (0, -1),
         (1, 1), (-1, 1), (-1, -1), (1, -1)]
REF_W = [4.0 / 9.0,
         1.0 / 9.0, 1.0 / 9.0, 1.0 / 9.0, 1.0 / 9.0,
         1.0 / 36.0, 1.0 / 36.0, 1.0 / 36.0, 1.0 / 36.0]
REF_OPP = [0, 3, 4, 1, 2, 7, 8, 5, 6]

FLUID, SOLID, MOVING, INLET, OUTLET = 0, 1, 2, 3, 4


def ref_equilibrium(rho, ux, uy):
    """Naive second-order equilibrium, one direction at a time."""
    u2 = ux * ux + uy * uy
    out = []
    for i in range(9):
        cu = REF_C[i][0] * ux + REF_C[i][1] * uy
        out.append(REF_W[i] * rho * (1.0 + 3.0 * cu + 4.5 * cu * cu - 1.5 * u2))
    return out


def ref_moments(f):
    rho = 0.0
    mx = 0.0
    my = 0.0
    for i in range(9):
        rho += f[i]
        mx += f[i] * REF_C[i][0]
        my += f[i] * REF_C[i][1]
    if rho == 0.0:
        return 0.0, 0.0, 0.0
    return rho, mx / rho, my / rho


def ref_step(f, mask, omega, wall_u=(0.0, 0.0)):
    """One fused gather + collide pass over an (nx, ny, 9) float64 array.

    Explicit loops, periodic wrap, half-way bounce-back against solid and
    moving cells.  Non-fluid cells are left untouched.  Inlet/outlet cells
    are readable as plain neighbors; their own refresh is the caller's
    problem, same division of labor the engine uses.
    """
    nx, ny, _ = f.shape
    out = f.copy()
    uwx, uwy = wall_u
    for x in range(nx):
        for y in range(ny):
            if mask[x, y] != FLUID:
                continue
            g = [0.0] * 9
            for i in range(9):
                cx, cy = REF_C[i]
                xs = (x - cx) % nx
                ys = (y - cy) % ny
                m = mask[xs, ys]
                if m == SOLID:
                    g[i] = f[x, y, REF_OPP[i]]
                elif m == MOVING:
                    # reflected population picks up wall momentum:
                    # incident direction is OPP[i], correction
                    # -2 w rho_w (c_opp . u_w) / cs2 with cs2 = 1/3
                    cu = REF_C[REF_OPP[i]][0] * uwx + REF_C[REF_OPP[i]][1] * uwy
                    g[i] = f[x, y, REF_OPP[i]] - 2.0 * REF_W[i] * cu * 3.0
                else:
                    g[i] = f[xs, ys, i]
            rho, ux, uy = ref_moments(g)
            eq = ref_equilibrium(rho, ux, uy)
            for i in range(9):
                out[x, y, i] = g[i] - omega * (g[i] - eq[i])
    return out


def kahan_mass(values):
    """Compensated sum in fixed order; the mass-conservation yardstick."""
    s = 0.0
    c = 0.0
    for v in np.asarray(values, dtype=np.float64).ravel():
        y = v - c
        t = s + y
        c = (t - s) - y
        s = t
    return s


def ref_tgv(n, u0, nu, t):
    """Analytic decaying-vortex fields on an n x n grid, integer coords."""
    k = 2.0 * np.pi / n
    x = np.arange(n, dtype=np.float64)[:, None]
    y = np.arange(n, dtype=np.float64)[None, :]
    damp = np.exp(-2.0 * nu * k * k * t)
    ux = -u0 * np.cos(k * x) * np.sin(k * y) * damp
    uy = u0 * np.sin(k * x) * np.cos(k * y) * damp
    rho = 1.0 - (3.0 * u0 * u0 / 4.0) * (np.cos(2 * k * x) + np.cos(2 * k * y)) * damp * damp
    return rho, ux, uy


class CountingFloat:
    """Float proxy that tallies add/sub, mul, and div as they happen."""

    __slots__ = ("v", "ops")

    def __init__(self, v, ops):
        self.v = float(v)
        self.ops = ops

    def _wrap(self, v):
        return CountingFloat(v, self.ops)

    def _val(self, other):
        return other.v if isinstance(other, CountingFloat) else float(other)

    def __add__(self, other):
        self.ops["add"] += 1
        return self._wrap(self.v + self._val(other))

    __radd__ = __add__

    def __sub__(self, other):
        self.ops["add"] += 1
        return self._wrap(self.v - self._val(other))

    def __rsub__(self, other):
        self.ops["add"] += 1
        return self._wrap(self._val(other) - self.v)

    def __mul__(self, other):
        self.ops["mul"] += 1
        return self._wrap(self.v * self._val(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        self.ops["div"] += 1
        return self._wrap(self.v / self._val(other))

    def __rtruediv__(self, other):
        self.ops["div"] += 1
        return self._wrap(self._val(other) / self.v)

    def __neg__(self):
        self.ops["add"] += 1
        return self._wrap(-self.v)

    def __ne__(self, other):
        return self.v != self._val(other)

    def __eq__(self, other):
        return self.v == self._val(other)

    def __hash__(self):
        return hash(self.v)

    def __float__(self):
        return self.v
