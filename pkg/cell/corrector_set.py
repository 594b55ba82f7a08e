from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from mesh.cell_grid import CellGrid
from mesh.fields import ScalarField


@dataclass(frozen=True)
class CorrectorSet:
    """
    Periodic zero-mean correctors χ_i, one per direction, on a shared cell grid.

    Attributes:
        grid: The cell grid.
        correctors: χ_1, ..., χ_n with face values duplicated from the periodic quotient.
        residuals: Final relative CG residual of every corrector solve.
        iterations: CG iterations of every corrector solve.
    """
    grid: CellGrid
    correctors: Tuple[ScalarField, ...]
    residuals: Tuple[float, ...]
    iterations: Tuple[int, ...]

    def __getitem__(self, direction: int) -> ScalarField:
        return self.correctors[direction]

    def __len__(self) -> int:
        return len(self.correctors)


@dataclass(frozen=True)
class HomogenizedTensor:
    """
    Constant effective matrix, column i holding ∫_Y A(e_i + ∇χ_i).
    """
    matrix: np.ndarray

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def asymmetry(self) -> float:
        """
        Relative size of the antisymmetric part.
        """
        scale = np.abs(self.matrix).max()
        return float(np.abs(self.matrix - self.matrix.T).max() / scale) if scale > 0 else 0.0

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.T))

    def to_dict(self) -> Dict:
        return {"dimension": self.dimension, "row_major": self.matrix.ravel().tolist()}
