from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class SparseOperator:
    """
    Reduced linear operator K = P^T K_full P acting on the unknowns of a boundary condition.

    Attributes:
        matrix: Reduced CSR matrix (unknowns x unknowns).
        prolongation: CSR matrix mapping unknowns to grid nodes (nodes x unknowns). Dirichlet
            nodes get empty rows; periodic images share one column.
        boundary: "dirichlet", "periodic" or "neumann".
        symmetric: Whether the operator comes from a symmetric bilinear form.
    """
    matrix: sp.csr_matrix
    prolongation: sp.csr_matrix
    boundary: str
    symmetric: bool = True

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def constant_nullspace(self) -> bool:
        return self.boundary in ("periodic", "neumann")

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def restrict(self, nodal: np.ndarray) -> np.ndarray:
        """
        Folds a nodal load vector onto the unknowns.
        """
        return self.prolongation.T @ nodal

    def prolong(self, unknowns: np.ndarray) -> np.ndarray:
        return self.prolongation @ unknowns

    def energy(self, x: np.ndarray) -> float:
        return float(x @ (self.matrix @ x))

    def symmetry_defect(self, rng: Optional[np.random.Generator] = None) -> float:
        """
        |<Au, v> - <u, Av>| for random vectors u, v.
        """
        rng = rng or np.random.default_rng(0)
        u = rng.standard_normal(self.dimension)
        v = rng.standard_normal(self.dimension)
        return float(abs((self.matrix @ u) @ v - u @ (self.matrix @ v)))
