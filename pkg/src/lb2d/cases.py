"""Flow cases: lid-driven cavity, decaying vortex sheet, cylinder wake.

Each case couples a geometry builder, an initial condition, and the
physics parameters derived from its Reynolds number:

* cavity: closed box, top lid sliding east at u0, characteristic
  length ny.  Starts at rest.
* vortex (square periodic): the classic decaying Taylor-Green field,
  whose exact solution makes it the accuracy yardstick.  Length N.
* wake: channel with a rasterized disk, equilibrium inlet at u0,
  zero-gradient outlet, characteristic length the disk diameter.
  Sheds a vortex street whose frequency is the measured observable.

Coordinates are integer lattice indices; x grows east, y grows north.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import boundaries, engine
from .fields import Layout, Precision
from .lattice import CS2, RelaxationParams, omega_from_reynolds

U_MAX = 0.3 * math.sqrt(CS2)  # Mach guard: u0 <= 0.3 c_s


@dataclass
class CaseSpec:
    """Geometry and physics of one run, validated eagerly."""

    name: str
    nx: int
    ny: int
    re: float = 100.0
    u0: float = 0.1
    omega: float | None = None  # explicit override, needed when u0 = 0
    diameter: float | None = None
    cyl_x: float | None = None
    cyl_y: float | None = None
    perturb: bool = True

    def __post_init__(self):
        if self.name not in ("ldc", "tgv", "vks"):
            raise ValueError(f"unknown case '{self.name}'")
        if self.nx < 4 or self.ny < 4:
            raise ValueError(f"grid {self.nx}x{self.ny} is too small")
        if self.u0 < 0.0 or self.u0 > U_MAX:
            raise ValueError(
                f"u0={self.u0} outside [0, {U_MAX:.4f}] (0.3 of the lattice "
                f"speed of sound)")
        if self.u0 == 0.0 and self.omega is None:
            raise ValueError("u0=0 cannot derive omega from a Reynolds "
                             "number; pass an explicit omega")
        if self.name == "tgv":
            if self.nx != self.ny:
                raise ValueError("the periodic vortex case needs a square "
                                 f"grid, got {self.nx}x{self.ny}")
            if self.u0 == 0.0:
                raise ValueError("the vortex case needs u0 > 0")
        if self.name == "vks":
            if self.diameter is None:
                if self.ny % 8:
                    raise ValueError(
                        f"ny={self.ny} is not a multiple of 8; pass an "
                        f"explicit diameter instead")
                self.diameter = self.ny // 8
            if self.diameter < 4:
                raise ValueError(f"disk diameter {self.diameter} is too "
                                 f"small to rasterize")
            if self.cyl_x is None:
                self.cyl_x = 6.0 * self.diameter
            if self.cyl_y is None:
                self.cyl_y = self.ny / 2 + 0.5
            r = self.diameter / 2.0
            up = self.cyl_x - r
            down = (self.nx - 1) - self.cyl_x - r
            lo = self.cyl_y - r
            hi = (self.ny - 1) - self.cyl_y - r
            if min(up, lo, hi) < self.diameter:
                raise ValueError(
                    f"disk at ({self.cyl_x}, {self.cyl_y}) needs at least "
                    f"one diameter of clearance to the walls and inlet")
            if down < 4 * self.diameter:
                raise ValueError(
                    f"disk needs >= 4 diameters of downstream clearance, "
                    f"has {down:.1f}")

    @property
    def length(self):
        """Characteristic length feeding the Reynolds number."""
        if self.name == "ldc":
            return self.ny
        if self.name == "tgv":
            return self.nx
        return self.diameter

    def relaxation(self):
        if self.omega is not None:
            return RelaxationParams.from_omega(self.omega)
        return omega_from_reynolds(self.re, self.u0, self.length)

    @property
    def probe_xy(self):
        """Wake sampling point: 3 diameters downstream, 1 above center."""
        if self.name != "vks":
            raise ValueError("probe is defined for the wake case only")
        return (int(round(self.cyl_x + 3 * self.diameter)),
                int(round(self.cyl_y + self.diameter)))


def tgv_fields(n, u0, nu, t):
    """Exact decaying-vortex solution on an n x n grid at time t.

    u_x = -u0 cos(kx) sin(ky) exp(-2 nu k^2 t)
    u_y =  u0 sin(kx) cos(ky) exp(-2 nu k^2 t)
    rho = 1 - (3 u0^2 / 4)(cos 2kx + cos 2ky) exp(-4 nu k^2 t)

    with k = 2 pi / n, sampled at integer cell coordinates.  Returns
    float64 x,y grids (rho, ux, uy).
    """
    k = 2.0 * np.pi / n
    x = np.arange(n, dtype=np.float64)[:, None]
    y = np.arange(n, dtype=np.float64)[None, :]
    damp = math.exp(-2.0 * nu * k * k * t)
    ux = -u0 * np.cos(k * x) * np.sin(k * y) * damp
    uy = u0 * np.sin(k * x) * np.cos(k * y) * damp
    rho = (1.0 - (3.0 * u0 * u0 / 4.0)
           * (np.cos(2.0 * k * x) + np.cos(2.0 * k * y)) * damp * damp)
    return rho, ux, uy


def tgv_decay_rate(n, nu):
    """Analytic amplitude decay rate: |u| ~ exp(-2 nu k^2 t)."""
    k = 2.0 * np.pi / n
    return 2.0 * nu * k * k


def init(spec, precision=Precision.SINGLE, layout=Layout.COL):
    """Build the initial simulation state for a case."""
    params = spec.relaxation()
    nx, ny = spec.nx, spec.ny
    if spec.name == "ldc":
        rho = np.ones((nx, ny))
        zero = np.zeros((nx, ny))
        state = engine.state_from_macroscopic(
            rho, zero, zero, boundaries.cavity_mask(nx, ny), layout,
            precision, params=params, wall_u=(spec.u0, 0.0), case="ldc")
    elif spec.name == "tgv":
        rho, ux, uy = tgv_fields(nx, spec.u0, params.nu, 0)
        state = engine.state_from_macroscopic(
            rho, ux, uy, boundaries.open_mask(nx, ny), layout,
            precision, params=params, case="tgv")
    else:
        rho = np.ones((nx, ny))
        y = np.arange(ny, dtype=np.float64)[None, :]
        if spec.perturb:
            # deterministic 1% streamwise ripple, antisymmetric about the
            # channel centerline, to kick the wake instability
            ux = spec.u0 * (1.0 + 0.01 * np.sin(2.0 * np.pi * y / ny)) \
                 * np.ones((nx, 1))
        else:
            ux = np.full((nx, ny), spec.u0)
        uy = np.zeros((nx, ny))
        disk = boundaries.disk_cells(nx, ny, spec.diameter,
                                     spec.cyl_x, spec.cyl_y)
        state = engine.state_from_macroscopic(
            rho, ux, uy, boundaries.channel_mask(nx, ny, disk), layout,
            precision, params=params, inlet_u=spec.u0, case="vks")
    return state


def attach_params(state, spec):
    """Re-attach physics to a restored state from its case spec."""
    state.params = spec.relaxation()
    if spec.name == "ldc":
        state.wall_u = (spec.u0, 0.0)
    if spec.name == "vks":
        state.inlet_u = spec.u0
    state.case = spec.name
    return state


def l2_velocity_error(ux, uy, ux_ref, uy_ref, where=None):
    """Relative L2 distance between a velocity field and a reference."""
    dx = np.asarray(ux, dtype=np.float64) - ux_ref
    dy = np.asarray(uy, dtype=np.float64) - uy_ref
    if where is not None:
        dx, dy = dx[where], dy[where]
        rx, ry = ux_ref[where], uy_ref[where]
    else:
        rx, ry = ux_ref, uy_ref
    denom = np.sum(rx * rx + ry * ry)
    if denom == 0.0:
        raise ValueError("reference velocity field is identically zero")
    return float(np.sqrt(np.sum(dx * dx + dy * dy) / denom))


def zero_crossing_times(series):
    """Sub-sample zero crossing positions of a 1-d signal."""
    r = np.asarray(series, dtype=np.float64)
    pos = r > 0.0
    flips = np.nonzero(pos[1:] != pos[:-1])[0]
    return flips + r[flips] / (r[flips] - r[flips + 1])


def strouhal(series, diameter, u0, sample_every=1):
    """Dimensionless shedding frequency from a probe time series.

    The series is detrended with a least-squares line, zero crossings
    are located with linear interpolation, and the period is twice the
    mean crossing spacing.  Returns (St, crossing_count) with
    St = f D / u0.  Raises when fewer than four crossings exist (no
    established shedding to measure).
    """
    r = np.asarray(series, dtype=np.float64)
    if r.ndim != 1 or r.size < 8:
        raise ValueError("probe series is too short")
    t = np.arange(r.size, dtype=np.float64)
    slope, intercept = np.polyfit(t, r, 1)
    r = r - (slope * t + intercept)
    crossings = zero_crossing_times(r)
    if crossings.size < 4:
        raise ValueError("no shedding detected (fewer than 4 zero crossings)")
    spacing = (crossings[-1] - crossings[0]) / (crossings.size - 1)
    period = 2.0 * spacing * sample_every
    return float(diameter / (period * u0)), crossings.size
