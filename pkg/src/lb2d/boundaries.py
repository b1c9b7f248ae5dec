"""Cell flags and boundary handling.

The mask is one uint8 per cell: 0 fluid, 1 solid, 2 moving wall, 3
inlet, 4 outlet.  These codes are also the checkpoint wire format, so
they must not be renumbered.

Walls use half-way bounce-back: a population that would stream out of a
fluid cell into a wall comes back to the same cell with reversed
direction, picking up wall momentum when the wall moves.  Inlet and
outlet cells are not bounced; they hold populations refreshed by the
engine's per-step column pass and are gathered from like ordinary
neighbors.
"""

import numpy as np

from .fields import Layout, flatten_xy
from .lattice import C, OPP, W

FLUID = 0
SOLID = 1
MOVING_WALL = 2
INLET = 3
OUTLET = 4

MASK_NAMES = {FLUID: "fluid", SOLID: "solid", MOVING_WALL: "movingWall",
              INLET: "inlet", OUTLET: "outlet"}


def moving_wall_correction(value, i, u_wall, rho_wall=1.0):
    """Reflect population i off a moving wall.

    `value` is the post-collision population traveling along direction i
    into the wall; the return value is the corrected population coming
    back along the opposite direction:

        f_opp = value - 2 w_i rho_wall (c_i . u_wall) / cs^2

    With w_i = 1/36, rho_wall = 1, and c_i . u_wall = 0.1 the correction
    term is -1/60.
    """
    cu = C[i, 0] * u_wall[0] + C[i, 1] * u_wall[1]
    return value - 2.0 * W[i] * rho_wall * cu * 3.0


def gather_cell(field, mask, x, y, wall_u=(0.0, 0.0)):
    """Pull the nine incoming populations for one fluid destination cell.

    Sources wrap periodically; a solid source bounces the cell's own
    opposite post-collision value back, a moving source additionally
    applies the wall correction.  This is the scalar statement of what
    the fused kernels do before colliding.
    """
    nx, ny = field.nx, field.ny
    out = np.empty(9, dtype=np.float64)
    d = field.flat(x, y)
    for i in range(9):
        xs = (x - C[i, 0]) % nx
        ys = (y - C[i, 1]) % ny
        s = field.flat(xs, ys)
        m = mask[s]
        if m == SOLID:
            out[i] = field.data[OPP[i], d]
        elif m == MOVING_WALL:
            out[i] = moving_wall_correction(
                float(field.data[OPP[i], d]), int(OPP[i]), wall_u)
        else:
            out[i] = field.data[i, s]
    return out


def open_mask(nx, ny):
    """All-fluid mask in x,y indexing (fully periodic domain)."""
    return np.full((nx, ny), FLUID, dtype=np.uint8)


def cavity_mask(nx, ny):
    """Closed box: solid border, top row a moving lid minus its end cells.

    The lid's end cells stay plain solid so the corners belong to the
    stationary side walls.
    """
    m = open_mask(nx, ny)
    m[0, :] = SOLID
    m[-1, :] = SOLID
    m[:, 0] = SOLID
    m[:, -1] = SOLID
    m[1:-1, -1] = MOVING_WALL
    return m


def channel_mask(nx, ny, disk=None):
    """Channel: solid top/bottom walls, inlet column west, outlet east."""
    m = open_mask(nx, ny)
    m[:, 0] = SOLID
    m[:, -1] = SOLID
    m[0, 1:-1] = INLET
    m[-1, 1:-1] = OUTLET
    if disk is not None:
        m[disk] = SOLID
    return m


def disk_cells(nx, ny, diameter, cx, cy):
    """Boolean x,y raster of a disk: cell centers within diameter/2."""
    x = np.arange(nx, dtype=np.float64)[:, None]
    y = np.arange(ny, dtype=np.float64)[None, :]
    r = diameter / 2.0
    return (x - cx) ** 2 + (y - cy) ** 2 <= r * r


def flatten_mask(mask_grid, layout: Layout):
    """Flatten an x,y mask into a layout-ordered uint8 cell array."""
    return flatten_xy(np.asarray(mask_grid, dtype=np.uint8), layout)
