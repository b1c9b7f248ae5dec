"""Storage policy: precision modes, memory layouts, and population fields.

A population field is nine structure-of-arrays planes, one unit-strided
vector per discrete velocity, flattened over the grid by the active
layout.  Row-major places x fastest (flat = y*nx + x), column-major
places y fastest (flat = x*ny + y); both are bijections and everything
downstream works through the (sx, sy) stride pair.

Precision modes split storage from compute: Single and Double are
uniform, Mixed1 stores half and computes in single, Mixed2 stores single
and computes in double.
"""

import enum
from dataclasses import dataclass

import numpy as np


class Precision(enum.Enum):
    # token, wire code, storage dtype, compute dtype
    SINGLE = ("single", 0, np.float32, np.float32)
    DOUBLE = ("double", 1, np.float64, np.float64)
    MIXED1 = ("mixed1", 2, np.float16, np.float32)
    MIXED2 = ("mixed2", 3, np.float32, np.float64)

    def __init__(self, token, code, storage, compute):
        self.token = token
        self.code = code
        self.storage = np.dtype(storage)
        self.compute = np.dtype(compute)

    @classmethod
    def from_token(cls, token):
        for p in cls:
            if p.token == token:
                return p
        raise ValueError(f"unknown precision '{token}', expected one of "
                         f"{[p.token for p in cls]}")

    @classmethod
    def from_code(cls, code):
        for p in cls:
            if p.code == code:
                return p
        raise ValueError(f"unknown precision code {code}")


class Layout(enum.Enum):
    ROW = ("row", 0)
    COL = ("col", 1)

    def __init__(self, token, code):
        self.token = token
        self.code = code

    @classmethod
    def from_token(cls, token):
        for l in cls:
            if l.token == token:
                return l
        raise ValueError(f"unknown layout '{token}', expected 'row' or 'col'")

    @classmethod
    def from_code(cls, code):
        for l in cls:
            if l.code == code:
                return l
        raise ValueError(f"unknown layout code {code}")

    def strides(self, nx, ny):
        """Flat index = x*sx + y*sy."""
        if self is Layout.ROW:
            return 1, nx
        return ny, 1


def flat_index(x, y, nx, ny, layout):
    sx, sy = layout.strides(nx, ny)
    return x * sx + y * sy


def convert_precision(values, dtype, policy="strict"):
    """Convert populations between storage and compute representations.

    Upcasts are exact.  Downcasts round to nearest; a finite value whose
    magnitude exceeds the target's finite range is an error under the
    default "strict" policy and saturates to the largest finite value
    under "permissive".
    """
    if policy not in ("strict", "permissive"):
        raise ValueError(f"unknown conversion policy '{policy}'")
    values = np.asarray(values)
    dtype = np.dtype(dtype)
    src_max = np.finfo(values.dtype).max if values.dtype.kind == "f" else None
    dst_max = np.finfo(dtype).max
    if src_max is not None and src_max > dst_max:
        over = np.isfinite(values) & (np.abs(values) > dst_max)
        if np.any(over):
            if policy == "strict":
                raise OverflowError(
                    f"{int(over.sum())} values exceed the finite range of "
                    f"{dtype} (max {dst_max})")
            values = np.clip(values, -dst_max, dst_max)
    return values.astype(dtype)


@dataclass
class PopulationField:
    """Nine SoA planes over an nx-by-ny grid in one contiguous block."""

    data: np.ndarray  # shape (9, nx*ny), C-contiguous
    nx: int
    ny: int
    layout: Layout

    def __post_init__(self):
        if self.data.shape != (9, self.nx * self.ny):
            raise ValueError(
                f"population block has shape {self.data.shape}, expected "
                f"(9, {self.nx * self.ny}) for a {self.nx}x{self.ny} grid")
        if not self.data.flags.c_contiguous:
            raise ValueError("population block must be C-contiguous")

    @classmethod
    def alloc(cls, nx, ny, layout, dtype):
        return cls(np.zeros((9, nx * ny), dtype=dtype), nx, ny, layout)

    def flat(self, x, y):
        return flat_index(x, y, self.nx, self.ny, self.layout)

    def cell(self, x, y):
        """The nine populations of one cell, as a copy."""
        return self.data[:, self.flat(x, y)].copy()

    def set_cell(self, x, y, values):
        self.data[:, self.flat(x, y)] = values

    def plane_xy(self, i):
        """Plane i reindexed to a[x, y], whatever the storage layout."""
        if self.layout is Layout.ROW:
            return self.data[i].reshape(self.ny, self.nx).T
        return self.data[i].reshape(self.nx, self.ny)

    def copy(self):
        return PopulationField(self.data.copy(), self.nx, self.ny, self.layout)


def mask_xy(mask, nx, ny, layout):
    """Flat cell-flag array reindexed to m[x, y]."""
    if layout is Layout.ROW:
        return mask.reshape(ny, nx).T
    return mask.reshape(nx, ny)


def flatten_xy(grid_xy, layout):
    """Flatten an a[x, y] array into the layout's cell order."""
    grid_xy = np.asarray(grid_xy)
    if layout is Layout.ROW:
        return np.ascontiguousarray(grid_xy.T).reshape(-1)
    return np.ascontiguousarray(grid_xy).reshape(-1)
