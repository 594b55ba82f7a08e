import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from cell.corrector_set import CorrectorSet, HomogenizedTensor
from errors import GridError, ResolutionMismatchError
from fem.assembly import CoefficientEvaluator, assemble_load, assemble_stiffness
from fem.cg_solver import cg_solve
from homog.problem_spec import ProblemSpec, inverse_of
from mesh.domain_grid import DomainGrid
from mesh.fields import ScalarField, VectorField
from mesh.geometry import distances_to_boundary
from unfold.unfolding import q_interp

logger = logging.getLogger(__name__)

MIN_RESOLVED_SUBDIVISIONS = 8


@dataclass(frozen=True)
class GalerkinSolution:
    """
    A discrete solution with its solver record.
    """
    field: ScalarField
    iterations: int
    relative_residual: float


class FirstOrderApproximation(NamedTuple):
    field: ScalarField
    corrected_gradient: VectorField


def _solve_elliptic(grid: DomainGrid, coefficient: CoefficientEvaluator, spec: ProblemSpec,
                    stage: str) -> GalerkinSolution:
    operator = assemble_stiffness(grid, coefficient, spec.boundary)
    source = spec.source_function()(grid.quadrature_points())
    neumann = spec.boundary == "neumann"
    if neumann:
        source = source - grid.integrate(source) / grid.measure()
    rhs = operator.restrict(assemble_load(grid, source))
    result = cg_solve(operator, rhs, spec.solver.deflated(neumann), stage=stage)
    solution = ScalarField(grid, operator.prolong(result.values))
    if neumann:
        solution = solution - solution.mean()
    return GalerkinSolution(solution, result.iterations, result.relative_residual)


def solve_oscillatory(spec: ProblemSpec, eps: float, grid: Optional[DomainGrid] = None) -> GalerkinSolution:
    """
    Galerkin solution of -div(A({x/ε})∇φ^ε) = f with A sampled at every quadrature point.

    Args:
        spec: The problem.
        eps: Cell size, the reciprocal of a ladder entry.
        grid: Optional grid; defaults to the study's fine grid viewed with this ε.
    """
    cells = inverse_of(eps)
    grid = grid or spec.grid(cells)
    if grid.cells_per_axis != cells:
        raise GridError("problem.inverse_eps", f"grid has ε = 1/{grid.cells_per_axis}, expected 1/{cells}")
    if grid.subdivisions < MIN_RESOLVED_SUBDIVISIONS:
        logger.warning("Oscillation under-resolved at ε=1/%d: %d fine cells per period",
                       cells, grid.subdivisions)
    coefficient = spec.coefficient_field()
    solution = _solve_elliptic(grid, coefficient.oscillating(eps), spec, stage=f"oscillatory ε=1/{cells}")
    logger.info("Oscillatory problem ε=1/%d solved in %d iterations", cells, solution.iterations)
    return solution


def solve_homogenized(spec: ProblemSpec, tensor: HomogenizedTensor,
                      grid: Optional[DomainGrid] = None) -> GalerkinSolution:
    """
    Constant-coefficient solution of -div(𝒜∇Φ) = f, by default on the finest grid of the study.
    """
    grid = grid or spec.grid(spec.finest)
    if np.any(tensor.eigenvalues() <= 0):
        raise GridError("tensor", "homogenized tensor is not positive definite")
    solution = _solve_elliptic(grid, np.asarray(tensor.matrix, dtype=float), spec, stage="homogenized")
    logger.info("Homogenized problem solved in %d iterations", solution.iterations)
    return solution


def cutoff_rho_eps(grid: DomainGrid, eps: float, alpha: float = 1.0) -> ScalarField:
    """
    Nodal cutoff min(dist(x, ∂Ω)/ε^α, 1); zero on the boundary, one away from it.
    """
    if not 0 < alpha <= 1:
        raise GridError("lipschitz.alpha", f"must lie in (0, 1], got {alpha}")
    distance = distances_to_boundary(grid, grid.coordinates)
    return ScalarField(grid, np.minimum(distance / eps ** alpha, 1.0))


def first_order_approx(macro: ScalarField, correctors: CorrectorSet, eps: float,
                       alpha: float = 1.0) -> FirstOrderApproximation:
    """
    Corrector approximation of the oscillatory solution built from the homogenized one.

    field = Φ + Σ_i ε ρ_{ε,α} Q_ε(∂_iΦ) χ_i({x/ε}), interpolated at the fine nodes.
    corrected_gradient = ∇Φ + Σ_i Q_ε(∂_iΦ) ∇_yχ_i({x/ε}), without the cutoff, at the
    fine quadrature points.

    Args:
        macro: Φ on the DomainGrid whose cell size is ε.
        correctors: Correctors on a cell grid whose resolution divides the fine subdivision.
        eps: Cell size.
        alpha: Cutoff exponent.

    Returns:
        The FirstOrderApproximation (field, corrected_gradient).
    """
    grid = macro.grid
    if grid.cells_per_axis != inverse_of(eps):
        raise GridError("problem.inverse_eps", "Φ lives on a grid with a different ε")
    if grid.subdivisions % correctors.grid.divisions:
        raise ResolutionMismatchError(f"corrector resolution {correctors.grid.divisions} does not divide "
                                      f"{grid.subdivisions} fine cells per ε-cell")
    gradient = macro.gradient()
    rho = cutoff_rho_eps(grid, eps, alpha)
    _, local = grid.cell_coordinates()
    scaled = grid.quadrature_points() / eps
    periodic_points = scaled - np.floor(scaled)

    values = macro.values.copy()
    corrected = gradient.values.copy()
    for axis, corrector in enumerate(correctors.correctors):
        weight = q_interp(gradient.component(axis))
        values += eps * rho.values * weight.values * corrector.evaluate(local)
        corrected += weight.at_quadrature()[..., None] * corrector.evaluate_gradient(periodic_points)
    return FirstOrderApproximation(ScalarField(grid, values), VectorField(grid, corrected))
