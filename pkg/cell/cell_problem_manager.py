import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence, Tuple

import numpy as np

from cell.corrector_set import CorrectorSet, HomogenizedTensor
from errors import GridError
from fem.assembly import assemble_flux_load, assemble_stiffness, coefficient_at_quadrature
from fem.cg_solver import SolveResult, SolverConfig, cg_solve
from mesh.cell_grid import CellGrid
from mesh.coefficients import MatrixField
from mesh.fields import ScalarField

logger = logging.getLogger(__name__)


class CellProblemManager:
    """
    Solves the periodic cell problems of one coefficient on one cell grid.

    The coefficient samples and the periodic stiffness operator are built once and shared by
    the n corrector solves.
    """

    def __init__(self, coefficient: MatrixField, grid: CellGrid, solver_config: SolverConfig = SolverConfig()):
        """
        Initializes a new CellProblemManager instance.

        Args:
            coefficient: The periodic coefficient A(y).
            grid: The cell grid; A's discontinuities must fall on element faces.
            solver_config: CG settings; deflation is switched on for the periodic system.
        """
        if coefficient.dimension != grid.dimension:
            raise GridError("coefficient", "coefficient and cell grid dimensions differ")
        self.coefficient = coefficient
        self.grid = grid
        self.solver_config = solver_config.deflated()
        self.coefficient_values = coefficient_at_quadrature(grid, coefficient.evaluate)
        self.operator = assemble_stiffness(grid, lambda _: self.coefficient_values, "periodic")

    def _corrector_load(self, direction: int) -> np.ndarray:
        flux = self.coefficient_values[..., :, direction]
        return -self.operator.restrict(assemble_flux_load(self.grid, flux))

    def solve_corrector(self, direction: int) -> Tuple[ScalarField, SolveResult]:
        """
        Solves ∫_Y A(e_i + ∇χ_i)·∇ψ = 0 for all periodic ψ, with χ_i of zero mean.

        Args:
            direction: Index i in 0..n-1.

        Returns:
            The corrector and the solve record.
        """
        if not 0 <= direction < self.grid.dimension:
            raise GridError("direction", f"direction {direction} outside 0..{self.grid.dimension - 1}")
        result = cg_solve(self.operator, self._corrector_load(direction), self.solver_config,
                          stage=f"corrector_{direction + 1}")
        corrector = ScalarField(self.grid, self.operator.prolong(result.values))
        corrector = corrector - corrector.mean()
        logger.info("Corrector %d solved on m=%d in %d iterations",
                    direction + 1, self.grid.divisions, result.iterations)
        return corrector, result

    def solve_all(self, workers: int = 1) -> CorrectorSet:
        """
        Solves every corrector; the n solves run in a thread pool when workers > 1.
        """
        directions = range(self.grid.dimension)
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(self.solve_corrector, directions))
        else:
            outcomes = [self.solve_corrector(i) for i in directions]
        return CorrectorSet(self.grid,
                            tuple(field for field, _ in outcomes),
                            tuple(result.relative_residual for _, result in outcomes),
                            tuple(result.iterations for _, result in outcomes))

    def homogenized_tensor(self, correctors: CorrectorSet) -> HomogenizedTensor:
        """
        Integrates the cell fluxes: column i of the result is ∫_Y A(e_i + ∇χ_i).
        """
        n = self.grid.dimension
        matrix = np.empty((n, n))
        for i, corrector in enumerate(correctors.correctors):
            gradient = corrector.gradient().values + np.eye(n)[i]
            flux = np.einsum('eqkl,eql->eqk', self.coefficient_values, gradient)
            matrix[:, i] = self.grid.integrate(flux)
        return HomogenizedTensor(matrix)

    def flux_residual(self, correctors: CorrectorSet, direction: int) -> float:
        """
        Relative residual of the cell equation tested against every periodic hat function.
        """
        n = self.grid.dimension
        gradient = correctors[direction].gradient().values + np.eye(n)[direction]
        flux = np.einsum('eqkl,eql->eqk', self.coefficient_values, gradient)
        residual = self.operator.restrict(assemble_flux_load(self.grid, flux))
        scale = np.linalg.norm(self._corrector_load(direction))
        return float(np.linalg.norm(residual) / scale) if scale > 0 else float(np.linalg.norm(residual))

    def voigt_reuss_bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        Harmonic-mean matrix (∫A⁻¹)⁻¹ and arithmetic-mean matrix ∫A of the coefficient.
        """
        arithmetic = self.grid.integrate(self.coefficient_values)
        harmonic = np.linalg.inv(self.grid.integrate(np.linalg.inv(self.coefficient_values)))
        return harmonic, arithmetic


def solve_corrector(coefficient: MatrixField, direction: int, grid: CellGrid,
                    cfg: SolverConfig = SolverConfig()) -> ScalarField:
    return CellProblemManager(coefficient, grid, cfg).solve_corrector(direction)[0]


def solve_correctors(coefficient: MatrixField, grid: CellGrid, cfg: SolverConfig = SolverConfig(),
                     workers: int = 1) -> CorrectorSet:
    return CellProblemManager(coefficient, grid, cfg).solve_all(workers)


def homogenized_tensor(coefficient: MatrixField, correctors: CorrectorSet) -> HomogenizedTensor:
    return CellProblemManager(coefficient, correctors.grid).homogenized_tensor(correctors)


def richardson_extrapolate(values: Sequence[np.ndarray]) -> Tuple[np.ndarray, float]:
    """
    Richardson extrapolation of three results on successively halved grids.

    The convergence order is estimated from the entry that changes the most and then used
    for every entry.

    Args:
        values: Results on the coarse, middle and fine grids.

    Returns:
        The extrapolated result and the estimated order (nan when no order could be fitted,
        in which case the fine result is returned).
    """
    coarse, middle, fine = (np.asarray(v, dtype=float) for v in values)
    first = middle - coarse
    second = fine - middle
    pivot = np.unravel_index(np.argmax(np.abs(first)), first.shape)
    if second[pivot] == 0 or first[pivot] == 0 or first[pivot] / second[pivot] <= 1:
        return fine, float('nan')
    order = float(np.log2(first[pivot] / second[pivot]))
    return fine + second / (2.0 ** order - 1.0), order
