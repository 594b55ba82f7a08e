import logging
from typing import Optional, Tuple

import numpy as np
from scipy import ndimage

from base_grid import BaseGrid
from errors import GridError
from mesh.cell_grid import SUPPORTED_DIMENSIONS

logger = logging.getLogger(__name__)

MASK_SHAPES = ("unit_square", "l_shape")


class DomainGrid(BaseGrid):
    """
    Fine Q1 grid of a cell-aligned domain made of closed ε-cells, ε = 1/N.

    Every ε-cell is split into s fine elements per axis, so the fine step is h = ε/s.

    Attributes:
        cells_per_axis: N.
        subdivisions: s.
        eps: Cell size 1/N.
        cell_mask: Boolean occupancy of the N^n macro-cell lattice.
        cells: Multi-indices of the masked cells, shape (cells, n), C order.
        element_cells: Masked-cell id owning every fine element.
    """

    def __init__(self, dimension: int, cells_per_axis: int, subdivisions: int, mask: np.ndarray):
        self.cells_per_axis = int(cells_per_axis)
        self.subdivisions = int(subdivisions)
        self.eps = 1.0 / self.cells_per_axis
        self.cell_mask = np.array(mask, dtype=bool)
        self.cell_mask.setflags(write=False)
        fine_mask = np.kron(self.cell_mask, np.ones((self.subdivisions,) * dimension, dtype=bool))
        super().__init__(dimension, self.cells_per_axis * self.subdivisions, fine_mask)

        self.cells = np.argwhere(self.cell_mask)
        self.cell_index = np.full(self.cell_mask.shape, -1, dtype=np.int64)
        self.cell_index[self.cell_mask] = np.arange(self.cells.shape[0])
        self.element_cells = self.cell_index[tuple((self.element_lattice // self.subdivisions).T)]
        for array in (self.cells, self.cell_index, self.element_cells):
            array.setflags(write=False)

    @property
    def num_cells(self) -> int:
        return self.cells.shape[0]

    def cell_coordinates(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        Splits every fine node into its macro-cell index [x/ε] and local coordinate {x/ε}.

        Both parts come from integer lattice arithmetic, so x = ε[x/ε] + ε{x/ε} holds exactly
        for dyadic ε and h.

        Returns:
            Macro indices (nodes, n) as integers and local coordinates (nodes, n) in [0,1).
        """
        macro = self.node_lattice // self.subdivisions
        local = (self.node_lattice % self.subdivisions) / self.subdivisions
        return macro, local

    def has_cell(self, index: np.ndarray) -> np.ndarray:
        """
        Whether macro multi-indices (P, n) name masked cells; out-of-range indices give False.
        """
        index = np.asarray(index)
        inside = np.all((index >= 0) & (index < self.cells_per_axis), axis=-1)
        clipped = np.clip(index, 0, self.cells_per_axis - 1)
        return inside & self.cell_mask[tuple(np.moveaxis(clipped, -1, 0))]

    def reflection_offsets(self) -> np.ndarray:
        """
        Offsets tried, in order, when a macro index falls outside the mask: first the index
        itself, then one step back along e_1, e_2, ..., then along pairs of axes.
        """
        offsets = [np.array(o) for o in np.ndindex(*(2,) * self.dimension)]
        offsets.sort(key=lambda o: (int(o.sum()), [-int(v) for v in o]))
        return np.array(offsets)

    def resolve_cells(self, index: np.ndarray,
                      allowed: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
        """
        Maps macro multi-indices to masked cells through the reflection order.

        Args:
            index: Candidate macro multi-indices, shape (P, n).
            allowed: Optional boolean mask (P, n) of the axes along which a step back may be
                taken. A fine node may only step back along axes where it sits on the lower
                face of its cell, otherwise it would be read outside the closed cell.

        Returns:
            Masked cell ids (P,) (-1 where no candidate is masked) and the offsets used (P, n).
        """
        index = np.asarray(index, dtype=np.int64)
        if allowed is None:
            allowed = np.ones(index.shape, dtype=bool)
        cell_ids = np.full(index.shape[0], -1, dtype=np.int64)
        used = np.zeros_like(index)
        for offset in self.reflection_offsets():
            candidate = index - offset
            permitted = np.all(allowed | (offset == 0), axis=1)
            hit = (cell_ids < 0) & permitted & self.has_cell(candidate)
            clipped = np.clip(candidate[hit], 0, self.cells_per_axis - 1)
            cell_ids[hit] = self.cell_index[tuple(clipped.T)]
            used[hit] = offset
        return cell_ids, used

    def with_cells_per_axis(self, cells_per_axis: int, mask: np.ndarray) -> "DomainGrid":
        """
        Same fine lattice viewed with a different cell size; the fine step must not change.
        """
        total = self.divisions
        if total % cells_per_axis:
            raise GridError("problem.inverse_eps", f"{cells_per_axis} does not divide {total}")
        grid = build_domain_grid(self.dimension, cells_per_axis, total // cells_per_axis, mask)
        if not grid.same_lattice(self):
            raise GridError("domain.shape", "mask is not compatible across the ε ladder")
        return grid


def unit_square_mask(n: int, cells_per_axis: int) -> np.ndarray:
    return np.ones((cells_per_axis,) * n, dtype=bool)


def l_shape_mask(cells_per_axis: int) -> np.ndarray:
    """
    Unit square minus its upper-right quadrant.
    """
    if cells_per_axis % 2:
        raise GridError("problem.inverse_eps", "the L-shape needs an even number of cells per axis")
    mask = np.ones((cells_per_axis, cells_per_axis), dtype=bool)
    half = cells_per_axis // 2
    mask[half:, half:] = False
    return mask


def named_mask(shape: str, n: int, cells_per_axis: int) -> np.ndarray:
    if shape == "unit_square":
        return unit_square_mask(n, cells_per_axis)
    if shape == "l_shape":
        if n != 2:
            raise GridError("domain.shape", "the L-shape is two dimensional")
        return l_shape_mask(cells_per_axis)
    raise GridError("domain.shape", f"unknown shape {shape!r}")


def build_domain_grid(n: int, N: int, s: int, mask: np.ndarray) -> DomainGrid:
    """
    Builds the fine grid of the cell-aligned domain selected by a macro-cell mask.

    Args:
        n: Dimension, 1 or 2.
        N: Macro cells per axis (ε = 1/N), at least 2.
        s: Fine cells per ε-cell, at least 2.
        mask: Boolean array of shape (N,)*n; must be non-empty and face-connected.

    Returns:
        The DomainGrid of step 1/(N·s).
    """
    if n not in SUPPORTED_DIMENSIONS:
        raise GridError("domain.dimension", f"unsupported dimension {n}")
    if N < 2:
        raise GridError("problem.inverse_eps", f"need at least 2 cells per axis, got {N}")
    if s < 2:
        raise GridError("domain.s", f"need at least 2 fine cells per ε-cell, got {s}")
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (N,) * n:
        raise GridError("domain.mask", f"mask shape {mask.shape} does not match {(N,) * n}")
    if not mask.any():
        raise GridError("domain.mask", "mask is empty")
    _, components = ndimage.label(mask)
    if components != 1:
        raise GridError("domain.mask", f"mask is disconnected ({components} components)")
    return DomainGrid(n, N, s, mask)
