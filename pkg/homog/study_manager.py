import logging
import time
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Tuple

import numpy as np

from cell.cell_problem_manager import CellProblemManager
from cell.corrector_set import CorrectorSet, HomogenizedTensor
from errors import ConfigError
from homog.homog_solver import MIN_RESOLVED_SUBDIVISIONS, first_order_approx, solve_homogenized, solve_oscillatory
from homog.problem_spec import ProblemSpec
from homog.study_report import AcceptanceThresholds, StudyReport, StudyRow
from mesh.cell_grid import build_cell_grid
from mesh.fields import ScalarField
from norms.sobolev_norms import h1_seminorm, h_minus1_norm, l2_norm

logger = logging.getLogger(__name__)

MIN_STUDY_ROWS = 3


def run_study_row(spec: ProblemSpec, cells_per_axis: int, macro_values: np.ndarray,
                  correctors: CorrectorSet) -> StudyRow:
    """
    Solves the oscillatory problem for one ε and measures it against Φ and its correction.

    Module-level so that it can be shipped to worker processes.
    """
    started = time.perf_counter()
    eps = 1.0 / cells_per_axis
    grid = spec.grid(cells_per_axis)
    oscillatory = solve_oscillatory(spec, eps, grid)
    macro = ScalarField(grid, macro_values)
    approximation = first_order_approx(macro, correctors, eps, spec.cutoff_exponent)

    gradient = oscillatory.field.gradient()
    difference = oscillatory.field - macro
    row = StudyRow(
        eps=eps,
        h=grid.spacing,
        l2_err=l2_norm(difference),
        h1_corr_err=l2_norm(gradient - approximation.corrected_gradient),
        h1_plain_err=l2_norm(gradient - macro.gradient()),
        approx_h1_err=h1_seminorm(oscillatory.field - approximation.field),
        hminus1_err=h_minus1_norm(difference, spec.solver),
        cg_iters=oscillatory.iterations,
        seconds=time.perf_counter() - started,
        subdivisions=grid.subdivisions,
        under_resolved=grid.subdivisions < MIN_RESOLVED_SUBDIVISIONS,
        relative_residual=oscillatory.relative_residual,
    )
    logger.info("ε=1/%d: L2 %.3e, corrected H1 %.3e, plain H1 %.3e",
                cells_per_axis, row.l2_err, row.h1_corr_err, row.h1_plain_err)
    return row


class StudyManager:
    """
    Runs an error study: cell problems, the homogenized solve, then one row per ε.
    """

    def __init__(self, spec: ProblemSpec, workers: int = 1,
                 thresholds: Optional[AcceptanceThresholds] = None):
        """
        Initializes a new StudyManager instance.

        Args:
            spec: The problem and its ε ladder (at least 3 entries).
            workers: Worker processes for the ε rows; 1 runs them serially.
            thresholds: Acceptance bounds; defaults depend on the domain shape.
        """
        if len(spec.inverse_eps) < MIN_STUDY_ROWS:
            raise ConfigError("problem.inverse_eps", f"an error study needs at least {MIN_STUDY_ROWS} ε values")
        self.spec = spec
        self.workers = max(1, int(workers))
        self.thresholds = thresholds or AcceptanceThresholds.for_shape(spec.shape)

    def solve_cell_problems(self) -> Tuple[CorrectorSet, HomogenizedTensor]:
        grid = build_cell_grid(self.spec.dimension, self.spec.cell_resolution)
        manager = CellProblemManager(self.spec.coefficient_field(), grid, self.spec.solver)
        correctors = manager.solve_all(self.workers)
        tensor = manager.homogenized_tensor(correctors)
        logger.info("Homogenized tensor %s", np.array2string(tensor.matrix, precision=6))
        return correctors, tensor

    def run(self) -> StudyReport:
        correctors, tensor = self.solve_cell_problems()
        homogenized = solve_homogenized(self.spec, tensor)
        macro_values = np.array(homogenized.field.values)
        # coarse ε first
        ladder = list(self.spec.inverse_eps)
        if self.workers > 1:
            with ProcessPoolExecutor(max_workers=self.workers) as pool:
                futures = [pool.submit(run_study_row, self.spec, cells, macro_values, correctors)
                           for cells in ladder]
                rows: List[StudyRow] = [future.result() for future in futures]
        else:
            rows = [run_study_row(self.spec, cells, macro_values, correctors) for cells in ladder]

        report = StudyReport(rows, self.spec.cutoff_exponent, tensor.matrix, self.thresholds,
                             reference_scale=h1_seminorm(homogenized.field))
        for name, ok in report.passed().items():
            if not ok:
                logger.warning("Acceptance check %s failed", name)
        return report


def error_study(spec: ProblemSpec, workers: int = 1,
                thresholds: Optional[AcceptanceThresholds] = None) -> StudyReport:
    return StudyManager(spec, workers, thresholds).run()
