"""D2Q9 lattice definitions and the Bhatnagar-Gross-Krook collision model.

The velocity set is fixed project-wide: index 0 is the rest particle,
indices 1..4 are the axis directions E, N, W, S and indices 5..8 the
diagonals NE, NW, SW, SE.  Lattice units throughout (dx = dt = 1), so the
speed of sound satisfies cs^2 = 1/3.

Everything in this module is small, pure, and precision-agnostic: the
hot kernels in :mod:`lb2d.kernels` re-express the same arithmetic with
typed constants, and `collide_cell` below is the canonical statement of
that per-cell update, kept in plain scalars so tests can replay it
against the compiled kernels bit for bit.
"""

from dataclasses import dataclass, field

import numpy as np

# Velocity set, weights, and the opposite-direction involution.
C = np.array([(0, 0), (1, 0), (0, 1), (-1, 0), (0, -1),
              (1, 1), (-1, 1), (-1, -1), (1, -1)], dtype=np.int64)
CX = np.ascontiguousarray(C[:, 0])
CY = np.ascontiguousarray(C[:, 1])
W = np.array([4.0 / 9.0,
              1.0 / 9.0, 1.0 / 9.0, 1.0 / 9.0, 1.0 / 9.0,
              1.0 / 36.0, 1.0 / 36.0, 1.0 / 36.0, 1.0 / 36.0])
OPP = np.array([0, 3, 4, 1, 2, 7, 8, 5, 6], dtype=np.int64)
CS2 = 1.0 / 3.0
Q = 9


def moments(f):
    """Density and velocity of one cell or a batch of cells.

    `f` has shape (9,) or (9, n).  Returns (rho, ux, uy).  Cells with
    zero density (masked-out storage) report zero velocity rather than
    dividing by zero.

    Raises ValueError on non-finite populations: a NaN here means the
    simulation already diverged and any downstream number would be noise.
    """
    f = np.asarray(f)
    if not np.isfinite(f).all():
        raise ValueError("non-finite population")
    rho = f[0] + f[1] + f[2] + f[3] + f[4] + f[5] + f[6] + f[7] + f[8]
    mx = f[1] - f[3] + f[5] - f[6] - f[7] + f[8]
    my = f[2] - f[4] + f[5] + f[6] - f[7] - f[8]
    # reciprocal multiply, not two divisions: keeps the arithmetic
    # bitwise-identical to collide_cell and the fused kernels
    if f.ndim == 1:
        if rho == 0.0:
            return rho, rho * 0.0, rho * 0.0
        inv = 1.0 / rho
        return rho, mx * inv, my * inv
    with np.errstate(divide="ignore"):
        inv = np.where(rho != 0.0, 1.0 / rho, 0.0)
    return rho, mx * inv, my * inv


def equilibrium(rho, ux, uy, dtype=np.float64):
    """Second-order truncated Maxwell-Boltzmann equilibrium.

    f_i^eq = w_i rho (1 + 3 c.u + 9/2 (c.u)^2 - 3/2 u^2)

    Accepts scalars or same-shape arrays; returns an array of shape
    (9,) + shape(rho).  All arithmetic runs in `dtype`, with constants
    typed to match, so the result is reproducible per precision mode.
    Opposite directions share their quadratic term: the expression is
    factored exactly like the fused kernel's, which keeps the two
    bitwise interchangeable.
    """
    ct = np.dtype(dtype).type
    rho = np.asarray(rho, dtype=dtype)
    ux = np.asarray(ux, dtype=dtype)
    uy = np.asarray(uy, dtype=dtype)
    one, c3, c45, c15 = ct(1.0), ct(3.0), ct(4.5), ct(1.5)
    w0, ws, wd = ct(4.0 / 9.0), ct(1.0 / 9.0), ct(1.0 / 36.0)

    usq = ux * ux + uy * uy
    um = one - c15 * usq
    wr0 = w0 * rho
    wrs = ws * rho
    wrd = wd * rho
    a = ux + uy
    b = ux - uy

    out = np.empty((9,) + rho.shape, dtype=dtype)
    qx = c45 * (ux * ux)
    tx = c3 * ux
    px = um + qx
    out[1] = wrs * (px + tx)
    out[3] = wrs * (px - tx)
    qy = c45 * (uy * uy)
    ty = c3 * uy
    py = um + qy
    out[2] = wrs * (py + ty)
    out[4] = wrs * (py - ty)
    qa = c45 * (a * a)
    ta = c3 * a
    pa = um + qa
    out[5] = wrd * (pa + ta)
    out[7] = wrd * (pa - ta)
    qb = c45 * (b * b)
    tb = c3 * b
    pb = um + qb
    out[8] = wrd * (pb + tb)
    out[6] = wrd * (pb - tb)
    out[0] = wr0 * um
    return out


def collide(f, feq, omega, source=None):
    """BGK relaxation toward equilibrium: f' = f - omega (f - feq) + S.

    The source term S defaults to zero and is carried so the full
    collision equation is available; the fused grid kernels run the
    zero-source path only.
    """
    f = np.asarray(f)
    feq = np.asarray(feq)
    out = f - omega * (f - feq)
    if source is not None:
        out = out + np.asarray(source)
    return out


def collide_cell(g, omega):
    """One fused-cell update on nine gathered populations, plain scalars.

    This is the canonical statement of the arithmetic the grid kernels
    perform per fluid cell: moments, shared-term equilibrium, BGK
    relaxation, in exactly this operation order.  It is duck-typed on
    purpose; the operation-counting oracle in the test suite feeds it
    instrumented numbers to certify the arithmetic cost.
    """
    g0, g1, g2, g3, g4, g5, g6, g7, g8 = g
    rho = g0 + g1 + g2 + g3 + g4 + g5 + g6 + g7 + g8
    mx = g1 - g3 + g5 - g6 - g7 + g8
    my = g2 - g4 + g5 + g6 - g7 - g8
    if rho != 0.0:
        inv = 1.0 / rho
    else:
        inv = 0.0
    ux = mx * inv
    uy = my * inv
    usq = ux * ux + uy * uy
    um = 1.0 - 1.5 * usq
    wr0 = (4.0 / 9.0) * rho
    wrs = (1.0 / 9.0) * rho
    wrd = (1.0 / 36.0) * rho
    a = ux + uy
    b = ux - uy
    qx = 4.5 * (ux * ux)
    tx = 3.0 * ux
    px = um + qx
    e1 = wrs * (px + tx)
    e3 = wrs * (px - tx)
    qy = 4.5 * (uy * uy)
    ty = 3.0 * uy
    py = um + qy
    e2 = wrs * (py + ty)
    e4 = wrs * (py - ty)
    qa = 4.5 * (a * a)
    ta = 3.0 * a
    pa = um + qa
    e5 = wrd * (pa + ta)
    e7 = wrd * (pa - ta)
    qb = 4.5 * (b * b)
    tb = 3.0 * b
    pb = um + qb
    e8 = wrd * (pb + tb)
    e6 = wrd * (pb - tb)
    e0 = wr0 * um
    return [g0 - omega * (g0 - e0),
            g1 - omega * (g1 - e1),
            g2 - omega * (g2 - e2),
            g3 - omega * (g3 - e3),
            g4 - omega * (g4 - e4),
            g5 - omega * (g5 - e5),
            g6 - omega * (g6 - e6),
            g7 - omega * (g7 - e7),
            g8 - omega * (g8 - e8)]


def _check_omega(omega):
    if not (0.0 < omega < 2.0):
        raise ValueError(
            f"relaxation rate omega={omega} outside the stable "
            f"open interval (0, 2)")


@dataclass(frozen=True)
class RelaxationParams:
    """Relaxation rate, the kinematic viscosity it encodes, and an
    optional per-direction source term.

    omega and nu are redundant by construction (nu = cs^2 (1/omega - 1/2));
    both are stored so either view is available without recomputation.
    """

    omega: float
    nu: float
    source: np.ndarray | None = field(default=None)

    def __post_init__(self):
        _check_omega(self.omega)
        expected = CS2 * (1.0 / self.omega - 0.5)
        if abs(self.nu - expected) > 1e-12 * max(1.0, abs(expected)):
            raise ValueError(
                f"viscosity nu={self.nu} inconsistent with omega={self.omega}")
        if self.source is not None:
            src = np.asarray(self.source, dtype=np.float64)
            if src.shape != (9,):
                raise ValueError("source term must have shape (9,)")
            object.__setattr__(self, "source", src)

    @classmethod
    def from_omega(cls, omega, source=None):
        omega = float(omega)
        _check_omega(omega)  # before the division below, omega=0 is legal input
        return cls(omega=omega, nu=CS2 * (1.0 / omega - 0.5), source=source)

    @classmethod
    def from_viscosity(cls, nu, source=None):
        nu = float(nu)
        if nu <= 0.0:
            raise ValueError(f"viscosity must be positive, got {nu}")
        return cls(omega=1.0 / (3.0 * nu + 0.5), nu=nu, source=source)

    @property
    def has_source(self):
        return self.source is not None and bool(np.any(self.source != 0.0))


def omega_from_reynolds(re, u0, length):
    """Relaxation parameters for a target Reynolds number.

    nu = u0 L / Re, omega = 1 / (3 nu + 1/2).  All three inputs must be
    positive; omega then lands strictly inside (0, 2) automatically.

    omega_from_reynolds(1000, 0.1, 100) -> omega = 1.8867924528301885
    omega_from_reynolds(6, 0.1, 10)     -> omega = 1.0
    """
    if re <= 0.0 or u0 <= 0.0 or length <= 0.0:
        raise ValueError(
            f"reynolds number, velocity, and length must all be positive, "
            f"got re={re}, u0={u0}, length={length}")
    return RelaxationParams.from_viscosity(float(u0) * float(length) / float(re))
