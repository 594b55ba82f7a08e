"""
Discrete Sobolev norms: L², H¹, H⁻¹ through a Dirichlet Riesz solve, a spectral H^{1/2}
norm on cell faces, and the mixed L²(Y; H⁻¹(Ω)) norm of two-scale fields.
"""
import logging
from functools import lru_cache
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from base_grid import BaseGrid
from fem.assembly import assemble_full_stiffness, assemble_load, assemble_mass, assemble_stiffness
from fem.cg_solver import SolverConfig, cg_solve
from mesh.cell_grid import CellGrid
from mesh.domain_grid import DomainGrid
from mesh.fields import Field, ScalarField, VectorField

logger = logging.getLogger(__name__)

_RIESZ_BATCH = 64


def l2_norm(field: Field) -> float:
    """
    Quadrature-exact L² norm of any field; vector fields use the Euclidean norm pointwise.
    """
    samples = field.at_quadrature()
    squares = np.sum(samples ** 2, axis=-1) if samples.ndim == 3 else samples ** 2
    return float(np.sqrt(max(field.grid.integrate(squares), 0.0)))


def h1_seminorm(field: ScalarField) -> float:
    return l2_norm(field.gradient())


def h1_norm(field: ScalarField) -> float:
    return float(np.hypot(l2_norm(field), h1_seminorm(field)))


class RieszMap:
    """
    Dirichlet Laplacian on a grid, used to turn loads into H⁻¹ norms.

    ||g||_{H⁻¹} = ||∇z|| where -Δz = g, z = 0 on the boundary, so ||g||² = b·z for the
    assembled load b.
    """

    def __init__(self, grid: BaseGrid, solver_config: SolverConfig = SolverConfig()):
        self.grid = grid
        self.solver_config = solver_config.deflated(False)
        self.operator = assemble_stiffness(grid, None, "dirichlet")

    def solve(self, loads: np.ndarray):
        """
        Riesz representers of nodal loads (nodes,) or (nodes, k), on the free unknowns.
        """
        reduced = self.operator.restrict(loads)
        return reduced, cg_solve(self.operator, reduced, self.solver_config, stage="h_minus1")

    def norms(self, loads: np.ndarray) -> np.ndarray:
        loads = np.asarray(loads, dtype=float).reshape(self.grid.num_nodes, -1)
        result = np.empty(loads.shape[1])
        for start in range(0, loads.shape[1], _RIESZ_BATCH):
            reduced, solve = self.solve(loads[:, start:start + _RIESZ_BATCH])
            values = solve.values.reshape(reduced.shape)
            result[start:start + _RIESZ_BATCH] = np.sqrt(np.maximum(np.sum(reduced * values, axis=0), 0.0))
        return result

    def norm(self, field: Field) -> float:
        return float(self.norms(assemble_load(self.grid, field.at_quadrature()))[0])


def h_minus1_norm(g: Field, cfg: SolverConfig = SolverConfig(), riesz: Optional[RieszMap] = None) -> float:
    """
    Dual norm of a scalar field against H¹₀ test functions.

    Args:
        g: Scalar field (nodal, quadrature or cellwise) on a DomainGrid.
        cfg: Solver settings for the Riesz solve.
        riesz: Optional prebuilt RieszMap of g's grid.
    """
    riesz = riesz or RieszMap(g.grid, cfg)
    return riesz.norm(g)


@lru_cache(maxsize=None)
def _face_weight_matrix(divisions: int) -> np.ndarray:
    # generalized eigenpairs of the 1D Neumann Q1 Laplacian are the discrete cosine modes
    face = CellGrid(1, divisions)
    stiffness = assemble_full_stiffness(face).toarray()
    mass = assemble_mass(face).toarray()
    eigenvalues, modes = scipy.linalg.eigh(stiffness, mass)
    weights = np.sqrt(1.0 + np.clip(eigenvalues, 0.0, None))
    projector = mass @ modes
    matrix = projector @ np.diag(weights) @ projector.T
    matrix.setflags(write=False)
    return matrix


def face_h_half_norm(values: np.ndarray) -> float:
    """
    Spectral H^{1/2} norm of nodal values on a face of Y.

    ||v||² = Σ_k (1+λ_k)^{1/2} v̂_k² over the Neumann eigenpairs of the face; a single
    point (n = 1) gives |v|.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 1:
        return float(abs(v[0]))
    return float(np.sqrt(max(v @ _face_weight_matrix(v.size - 1) @ v, 0.0)))


def cell_load_matrix(grid: DomainGrid) -> sp.csr_matrix:
    """
    Nodes-by-cells matrix of ∫_{cell} N_c; maps cellwise constants to nodal loads.
    """
    local = grid.quadrature_weights @ grid.shape_values
    rows = grid.connectivity
    cols = np.broadcast_to(grid.element_cells[:, None], rows.shape)
    data = np.broadcast_to(local, rows.shape)
    return sp.coo_matrix((data.ravel(), (rows.ravel(), cols.ravel())),
                         shape=(grid.num_nodes, grid.num_cells)).tocsr()


def mixed_l2y_hminus1x_norm(field, x_part: Optional[VectorField] = None,
                            cfg: SolverConfig = SolverConfig(),
                            riesz: Optional[RieszMap] = None) -> float:
    """
    Norm of G(x, y) - g(x) in [L²(Y; H⁻¹(Ω))]^n.

    G is cellwise constant in x and sampled at the Gauss points of the y-grid; for every
    such point and component the H⁻¹ norm in x is taken, and the squares are integrated
    over Y with the Gauss weights.

    Args:
        field: UnfoldedVectorField holding G.
        x_part: Optional y-independent vector field g on the same DomainGrid.
        cfg: Solver settings for the Riesz solves.
        riesz: Optional prebuilt RieszMap.

    Returns:
        The mixed norm.
    """
    grid = field.domain_grid
    riesz = riesz or RieszMap(grid, cfg)
    loads_per_cell = cell_load_matrix(grid)
    y_weights = np.broadcast_to(field.y_grid.quadrature_weights, field.values.shape[1:3]).ravel()
    total = 0.0
    for axis in range(grid.dimension):
        samples = field.values[..., axis].reshape(grid.num_cells, -1)
        loads = loads_per_cell @ samples
        if x_part is not None:
            loads = loads - assemble_load(grid, x_part.values[..., axis])[:, None]
        total += float(y_weights @ riesz.norms(loads) ** 2)
    logger.debug("Mixed norm evaluated with %d Riesz solves", grid.dimension * y_weights.size)
    return float(np.sqrt(total))
