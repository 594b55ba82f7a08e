"""
Unfolding T_ε, cell means M_Y^ε, the scale-splitting interpolation Q_ε and averaging U_ε on
cell-aligned domains.
"""
import logging
from typing import Optional, Tuple

import numpy as np

from errors import GridError
from mesh.cell_grid import CellGrid, build_cell_grid
from mesh.domain_grid import DomainGrid
from mesh.fields import CellField, Field, ScalarField, VectorField
from unfold.unfolded_field import UnfoldedField, UnfoldedVectorField

logger = logging.getLogger(__name__)


def _y_grid(grid: DomainGrid, m_y: Optional[int]) -> CellGrid:
    return build_cell_grid(grid.dimension, m_y or grid.subdivisions)


def unfold(phi: ScalarField, m_y: Optional[int] = None) -> UnfoldedField:
    """
    T_ε(φ)(x, y) = φ(ε[x/ε] + εy), stored per ε-cell on a y-grid.

    Args:
        phi: Nodal field on a DomainGrid.
        m_y: y-resolution, defaults to the fine subdivision s. When it divides s the y-nodes
            are fine nodes and values are copied; otherwise they are Q1-interpolated.
    """
    grid = phi.grid
    y_grid = _y_grid(grid, m_y)
    s = grid.subdivisions
    if s % y_grid.divisions == 0:
        stride = s // y_grid.divisions
        lattice_index = grid.cells[:, None, :] * s + y_grid.node_lattice[None, :, :] * stride
        values = phi.lattice()[tuple(np.moveaxis(lattice_index, -1, 0))]
    else:
        points = grid.eps * (grid.cells[:, None, :] + y_grid.coordinates[None, :, :])
        values = phi.evaluate(points)
    return UnfoldedField(grid, y_grid, values)


def unfold_gradient(phi: ScalarField, m_y: Optional[int] = None) -> UnfoldedVectorField:
    """
    T_ε(∇φ) sampled at the Gauss points of the y-grid.
    """
    grid = phi.grid
    y_grid = _y_grid(grid, m_y)
    points = grid.eps * (grid.cells[:, None, None, :] + y_grid.quadrature_points()[None])
    return UnfoldedVectorField(grid, y_grid, phi.evaluate_gradient(points))


def cell_mean(field: Field) -> CellField:
    """
    M_Y^ε: the mean of a scalar field over every ε-cell.
    """
    grid = field.grid
    integrals = grid.element_integrals(field.at_quadrature())
    sums = np.bincount(grid.element_cells, weights=integrals, minlength=grid.num_cells)
    return CellField(grid, sums / grid.eps ** grid.dimension)


def macro_node_values(grid: DomainGrid, means: np.ndarray) -> np.ndarray:
    """
    Cell means attached to the macro nodes εξ, on the (N+1)^n lattice.

    Node ξ takes the mean of cell ξ. When that cell is missing (outside the mask or past the
    last row) the first masked cell among ξ − e_1, ξ − e_2, ξ − e_1 − e_2 is used, which is
    the even reflection of φ across the cell-aligned boundary.
    """
    shape = (grid.cells_per_axis + 1,) * grid.dimension
    nodes = np.argwhere(np.ones(shape, dtype=bool))
    cell_ids, _ = grid.resolve_cells(nodes)
    values = np.where(cell_ids >= 0, np.asarray(means)[np.maximum(cell_ids, 0)], 0.0)
    return values.reshape(shape)


def _macro_to_fine(cells_per_axis: int, subdivisions: int) -> np.ndarray:
    fine = np.arange(cells_per_axis * subdivisions + 1)
    macro = np.minimum(fine // subdivisions, cells_per_axis - 1)
    t = (fine - macro * subdivisions) / subdivisions
    matrix = np.zeros((fine.size, cells_per_axis + 1))
    matrix[fine, macro] = 1.0 - t
    matrix[fine, macro + 1] += t
    return matrix


def q_interp(field: Field) -> ScalarField:
    """
    Q_ε: continuous field, multilinear on every ε-cell, whose value at the macro node εξ is
    the mean of φ over the cell with lower corner εξ.
    """
    grid = field.grid
    lattice = macro_node_values(grid, cell_mean(field).values)
    interpolation = _macro_to_fine(grid.cells_per_axis, grid.subdivisions)
    for axis in range(grid.dimension):
        lattice = np.moveaxis(np.tensordot(interpolation, lattice, axes=(1, axis)), 0, axis)
    return ScalarField(grid, lattice[tuple(grid.node_lattice.T)])


def remainder_split(phi: ScalarField) -> Tuple[ScalarField, ScalarField]:
    """
    Splits φ = Φ + ε·φ_under with Φ = Q_ε(φ).
    """
    macro = q_interp(phi)
    return macro, (phi - macro) / phi.grid.eps


def average(field: UnfoldedField) -> ScalarField:
    """
    U_ε on two-scale fields that are constant in x per cell: every fine node x reads the
    array of its cell [x/ε] at y = {x/ε}.

    Nodes on the upper faces of the domain fall back to the neighbouring masked cell with
    the same reflection order as Q_ε, reading it at local coordinate 1. Only axes along
    which the node lies on a cell face are stepped back.
    """
    grid = field.domain_grid
    macro, local = grid.cell_coordinates()
    cell_ids, used = grid.resolve_cells(macro, local == 0)
    return ScalarField(grid, field.evaluate(cell_ids, local + used))


def average_gradient(field: UnfoldedVectorField) -> VectorField:
    """
    U_ε on Gauss-sampled two-scale fields; needs a y-grid equal to the fine cell subdivision.
    """
    grid = field.domain_grid
    s = grid.subdivisions
    if field.y_grid.divisions != s:
        raise GridError("m_y", f"averaging Gauss samples needs m_y = s = {s}")
    local_elements = grid.element_lattice % s
    y_elements = np.ravel_multi_index(tuple(local_elements.T), (s,) * grid.dimension)
    return VectorField(grid, field.values[grid.element_cells, y_elements])
