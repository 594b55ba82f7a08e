"""
Turning non-periodic cell fields into periodic ones.

Two constructions are provided: the inductive cutoff lift, which removes the face defect one
axis at a time, and the orthogonal projection onto periodic fields for the inner product
∫∇u·∇v + (∫u)(∫v).
"""
import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from fem.assembly import assemble_full_stiffness, assemble_stiffness
from fem.cg_solver import SolveResult, SolverConfig, cg_solve
from mesh.cell_grid import CellGrid
from mesh.fields import ScalarField
from norms.sobolev_norms import face_h_half_norm, h1_norm
from periodize.cutoff_profile import CutoffProfile
from unfold.unfolded_field import UnfoldedField

logger = logging.getLogger(__name__)


def face_defect(phi: ScalarField, axis: int) -> np.ndarray:
    """
    Values on the face y_axis = 1 minus values on y_axis = 0, ordered by the other coordinates.
    """
    grid = phi.grid
    return phi.values[grid.face_nodes(axis, 1)] - phi.values[grid.face_nodes(axis, 0)]


def periodize_lift_steps(phi: ScalarField, theta: CutoffProfile = CutoffProfile()) -> List[ScalarField]:
    """
    Runs the lift one axis at a time and returns every intermediate field.

    Step k adds ½(θ(y_k) − θ(1 − y_k)) times the face defect along axis k, extended
    constantly in y_k. Afterwards both faces carry the average of the two old traces.
    Earlier axes stay periodic because the added term is built from periodic face values.

    Returns:
        [φ, φ̂_1, ..., φ̂_n]; the last entry is periodic in every axis.
    """
    grid = phi.grid
    m, n = grid.divisions, grid.dimension
    bracket = theta.bracket(np.arange(m + 1) / m)
    lattice = phi.lattice()
    steps = [phi]
    for axis in range(n):
        defect = np.take(lattice, m, axis=axis) - np.take(lattice, 0, axis=axis)
        shape = [1] * n
        shape[axis] = m + 1
        lattice = lattice + bracket.reshape(shape) * np.expand_dims(defect, axis)
        steps.append(ScalarField(grid, lattice[tuple(grid.node_lattice.T)]))
    return steps


def periodize_lift(phi: ScalarField, theta: CutoffProfile = CutoffProfile()) -> ScalarField:
    return periodize_lift_steps(phi, theta)[-1]


class PeriodicProjector:
    """
    Orthogonal projection onto periodic Q1 fields of a cell grid.

    The projection φ̂ matches φ's gradient against every periodic test field and keeps its
    mean, which is the orthogonality condition of the inner product ∫∇u·∇v + (∫u)(∫v).
    The operator is assembled once and can be applied to many fields at a time.
    """

    def __init__(self, grid: CellGrid, solver_config: SolverConfig = SolverConfig()):
        self.grid = grid
        self.solver_config = solver_config.deflated()
        self.full_stiffness = assemble_full_stiffness(grid)
        self.operator = assemble_stiffness(grid, boundary="periodic", full=self.full_stiffness)
        self.node_weights = grid.node_weights()

    def apply(self, values: np.ndarray) -> Tuple[np.ndarray, SolveResult]:
        """
        Projects nodal values of shape (nodes,) or (nodes, k), column by column.
        """
        values = np.asarray(values, dtype=float)
        rhs = self.operator.restrict(self.full_stiffness @ values)
        result = cg_solve(self.operator, rhs, self.solver_config, stage="periodize_project")
        periodic = self.operator.prolong(result.values)
        shift = (self.node_weights @ values - self.node_weights @ periodic) / self.grid.measure()
        return periodic + shift, result

    def inner_product(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(u @ (self.full_stiffness @ v) + (self.node_weights @ u) * (self.node_weights @ v))

    def norm(self, u: np.ndarray) -> float:
        return float(np.sqrt(max(self.inner_product(u, u), 0.0)))

    def orthogonality_residual(self, values: np.ndarray, projected: np.ndarray) -> float:
        """
        Relative size of ∫∇(φ − φ̂)·∇ψ over all periodic hat functions ψ.
        """
        residual = self.operator.restrict(self.full_stiffness @ (values - projected))
        scale = np.linalg.norm(self.operator.restrict(self.full_stiffness @ values))
        return float(np.linalg.norm(residual) / scale) if scale > 0 else float(np.linalg.norm(residual))


def periodize_project(phi: ScalarField, cfg: SolverConfig = SolverConfig(),
                      projector: Optional[PeriodicProjector] = None) -> ScalarField:
    projector = projector or PeriodicProjector(phi.grid, cfg)
    values, _ = projector.apply(phi.values)
    return ScalarField(phi.grid, values)


def periodize_project_columns(field: UnfoldedField, cfg: SolverConfig = SolverConfig(),
                              projector: Optional[PeriodicProjector] = None) -> UnfoldedField:
    """
    Applies the periodic projection to the y-array of every ε-cell.

    All cells are projected together as the columns of one blocked CG solve.
    """
    projector = projector or PeriodicProjector(field.y_grid, cfg)
    projected, result = projector.apply(field.values.T)
    logger.debug("Projected %d cell columns in %d iterations", field.num_cells, result.iterations)
    return field.with_values(projected.T)


def defect_summary(phi: ScalarField, theta: CutoffProfile = CutoffProfile(),
                   cfg: SolverConfig = SolverConfig()) -> Dict[str, float]:
    """
    Per-axis face H^{1/2} defects and the H¹ distances to both periodizations.

    lift_ratio is the lift distance over the summed face defects, the constant of the lift
    bound for this field; it is 0 when every face defect vanishes.
    """
    summary = {f"defect_axis_{axis + 1}": face_h_half_norm(face_defect(phi, axis))
               for axis in range(phi.grid.dimension)}
    summary["lift_distance"] = h1_norm(phi - periodize_lift(phi, theta))
    summary["projection_distance"] = h1_norm(phi - periodize_project(phi, cfg))
    total = sum(summary[f"defect_axis_{axis + 1}"] for axis in range(phi.grid.dimension))
    summary["lift_ratio"] = summary["lift_distance"] / total if total > 0 else 0.0
    return summary
