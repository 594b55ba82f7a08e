"""
Vectorized Q1 assembly on structured grids.

Element matrices for all elements are built at once with einsum and summed into COO
triplets; duplicates are added up on conversion to CSR.
"""
import logging
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse as sp

from base_grid import BaseGrid
from errors import GridError
from fem.sparse_operator import SparseOperator

logger = logging.getLogger(__name__)

BOUNDARY_CONDITIONS = ("dirichlet", "periodic", "neumann")

CoefficientEvaluator = Union[None, np.ndarray, Callable[[np.ndarray], np.ndarray]]


def coefficient_at_quadrature(grid: BaseGrid, coefficient: CoefficientEvaluator) -> np.ndarray:
    """
    Samples a coefficient at all quadrature points, shape (elements, 2^n, n, n).

    The coefficient is None (identity), a constant n x n matrix, or a callable taking
    physical points (..., n).
    """
    shape = (grid.num_elements, grid.quadrature_weights.size, grid.dimension, grid.dimension)
    if coefficient is None:
        return np.broadcast_to(np.eye(grid.dimension), shape)
    if isinstance(coefficient, np.ndarray):
        if coefficient.shape != (grid.dimension, grid.dimension):
            raise GridError("coefficient", f"constant coefficient must be {grid.dimension}x{grid.dimension}")
        return np.broadcast_to(coefficient, shape)
    values = np.asarray(coefficient(grid.quadrature_points()), dtype=float)
    if values.shape != shape:
        raise GridError("coefficient", f"evaluator returned {values.shape}, expected {shape}")
    return values


def _scatter_matrix(grid: BaseGrid, local: np.ndarray) -> sp.csr_matrix:
    rows = np.broadcast_to(grid.connectivity[:, :, None], local.shape)
    cols = np.broadcast_to(grid.connectivity[:, None, :], local.shape)
    matrix = sp.coo_matrix((local.ravel(), (rows.ravel(), cols.ravel())),
                           shape=(grid.num_nodes, grid.num_nodes))
    return matrix.tocsr()


def assemble_full_stiffness(grid: BaseGrid, coefficient: CoefficientEvaluator = None) -> sp.csr_matrix:
    """
    Stiffness matrix of ∫ A∇u·∇v over all active nodes, no boundary condition applied.
    """
    a = coefficient_at_quadrature(grid, coefficient)
    local = np.einsum('q,qad,eqdk,qbk->eab', grid.quadrature_weights,
                      grid.shape_gradients, a, grid.shape_gradients)
    return _scatter_matrix(grid, local)


def assemble_mass(grid: BaseGrid) -> sp.csr_matrix:
    local = np.einsum('q,qa,qb->ab', grid.quadrature_weights, grid.shape_values, grid.shape_values)
    return _scatter_matrix(grid, np.broadcast_to(local, (grid.num_elements,) + local.shape))


def assemble_load(grid: BaseGrid, source: np.ndarray) -> np.ndarray:
    """
    Nodal load vector ∫ f N_c for f given at the quadrature points (elements, 2^n).
    """
    local = np.einsum('eq,q,qc->ec', source, grid.quadrature_weights, grid.shape_values)
    return np.bincount(grid.connectivity.ravel(), weights=local.ravel(), minlength=grid.num_nodes)


def assemble_flux_load(grid: BaseGrid, flux: np.ndarray) -> np.ndarray:
    """
    Nodal vector ∫ F·∇N_c for a flux F given at the quadrature points (elements, 2^n, n).
    """
    local = np.einsum('eqd,q,qcd->ec', flux, grid.quadrature_weights, grid.shape_gradients)
    return np.bincount(grid.connectivity.ravel(), weights=local.ravel(), minlength=grid.num_nodes)


def boundary_prolongation(grid: BaseGrid, boundary: str) -> sp.csr_matrix:
    """
    Nodes-by-unknowns 0/1 matrix realizing a boundary condition.

    Dirichlet drops boundary nodes, periodic identifies opposite faces of a CellGrid by index
    folding, Neumann keeps every node.
    """
    nodes = grid.num_nodes
    if boundary == "neumann":
        return sp.identity(nodes, format='csr')
    if boundary == "dirichlet":
        free = np.flatnonzero(~grid.boundary_mask)
        return sp.csr_matrix((np.ones(free.size), (free, np.arange(free.size))), shape=(nodes, free.size))
    if boundary == "periodic":
        if not hasattr(grid, "periodic_fold"):
            raise GridError("boundary", "periodic conditions need a cell grid")
        fold = grid.periodic_fold()
        return sp.csr_matrix((np.ones(nodes), (np.arange(nodes), fold)), shape=(nodes, grid.periodic_size))
    raise GridError("boundary", f"unknown boundary condition {boundary!r}")


def assemble_stiffness(grid: BaseGrid, coefficient: CoefficientEvaluator = None,
                       boundary: str = "dirichlet",
                       full: Optional[sp.csr_matrix] = None) -> SparseOperator:
    """
    Assembles the Q1 stiffness operator reduced to the unknowns of a boundary condition.

    Args:
        grid: Any structured grid.
        coefficient: None for the identity, a constant matrix, or an evaluator of physical points.
        boundary: "dirichlet" (eliminate ∂Ω nodes), "periodic" or "neumann".
        full: Optional pre-assembled full stiffness matrix to reuse.

    Returns:
        The SparseOperator on the reduced unknowns.
    """
    prolongation = boundary_prolongation(grid, boundary)
    if full is None:
        full = assemble_full_stiffness(grid, coefficient)
    reduced = (prolongation.T @ full @ prolongation).tocsr()
    reduced.sum_duplicates()
    logger.debug("Assembled %s stiffness with %d unknowns and %d nonzeros",
                 boundary, reduced.shape[0], reduced.nnz)
    return SparseOperator(reduced, prolongation.tocsr(), boundary)
