import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from errors import ConfigError, SolverConvergenceError
from fem.sparse_operator import SparseOperator

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    """
    Settings for the Jacobi-preconditioned conjugate gradient solver.

    Attributes:
        tolerance: Relative residual target ||b - Ax|| / ||b||, in (0, 1).
        max_iterations: Iteration cap, at least 1.
        deflate: Project constants out of the right-hand side, the iterates and the solution.
    """
    tolerance: float = 1e-10
    max_iterations: int = 50000
    deflate: bool = False

    def __post_init__(self):
        if not 0.0 < self.tolerance < 1.0:
            raise ConfigError("solver.tolerance", f"must lie in (0, 1), got {self.tolerance}")
        if self.max_iterations < 1:
            raise ConfigError("solver.max_iterations", f"must be at least 1, got {self.max_iterations}")

    def deflated(self, deflate: bool = True) -> "SolverConfig":
        return SolverConfig(self.tolerance, self.max_iterations, deflate)


@dataclass(frozen=True)
class SolveResult:
    """
    Outcome of a solve.

    Attributes:
        values: Solution on the unknowns, shape (unknowns,) or (unknowns, k).
        iterations: Iterations taken by the slowest column.
        relative_residual: Largest final relative residual over the columns.
    """
    values: np.ndarray
    iterations: int
    relative_residual: float


def _project(block: np.ndarray, deflate: bool) -> np.ndarray:
    return block - block.mean(axis=0) if deflate else block


def cg_solve(op: SparseOperator, rhs: np.ndarray, cfg: SolverConfig = SolverConfig(),
             stage: str = "cg_solve",
             callback: Optional[Callable[[int, np.ndarray], None]] = None) -> SolveResult:
    """
    Solves op·x = rhs by Jacobi-preconditioned conjugate gradients.

    A 2-D right-hand side is treated as independent columns that iterate together, each with
    its own step lengths; converged columns stop moving.

    Args:
        op: Symmetric positive (semi)definite operator.
        rhs: Right-hand side on the unknowns, shape (unknowns,) or (unknowns, k).
        cfg: Solver settings. With deflation the constant component of rhs is removed first
            and the solution is returned with zero mean.
        stage: Name reported when the solve fails.
        callback: Called as callback(iteration, x) after every iteration.

    Returns:
        The SolveResult.
    """
    rhs = np.asarray(rhs, dtype=float)
    single = rhs.ndim == 1
    b = _project(rhs.reshape(rhs.shape[0], -1), cfg.deflate)

    diagonal = op.diagonal()
    inverse_diagonal = np.divide(1.0, diagonal, out=np.ones_like(diagonal), where=diagonal > 0)[:, None]

    b_norm = np.linalg.norm(b, axis=0)
    targets = cfg.tolerance * b_norm
    x = np.zeros_like(b)
    r = b.copy()
    z = _project(inverse_diagonal * r, cfg.deflate)
    p = z.copy()
    rz = np.sum(r * z, axis=0)
    residual = b_norm.copy()

    iterations = 0
    working = residual > targets
    while np.any(working):
        if iterations >= cfg.max_iterations:
            worst = float(np.max(residual[b_norm > 0] / b_norm[b_norm > 0]))
            logger.error("%s: CG stalled at relative residual %.3e", stage, worst)
            raise SolverConvergenceError(stage, iterations, worst)
        iterations += 1
        ap = op.matvec(p)
        pap = np.sum(p * ap, axis=0)
        alpha = np.where(working, rz / np.where(pap > 0, pap, 1.0), 0.0)
        x += alpha * p
        r -= alpha * ap
        z = _project(inverse_diagonal * r, cfg.deflate)
        rz_next = np.sum(r * z, axis=0)
        beta = np.where(working, rz_next / np.where(rz > 0, rz, 1.0), 0.0)
        p = z + beta * p
        rz = rz_next
        residual = np.linalg.norm(r, axis=0)
        working = residual > targets
        if callback is not None:
            callback(iterations, x[:, 0] if single else x)

    x = _project(x, cfg.deflate)
    relative = np.divide(residual, b_norm, out=np.zeros_like(residual), where=b_norm > 0)
    logger.debug("%s: converged in %d iterations (relative residual %.3e)",
                 stage, iterations, relative.max(initial=0.0))
    values = x[:, 0] if single else x
    return SolveResult(values, iterations, float(relative.max(initial=0.0)))
