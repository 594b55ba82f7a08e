import numpy as np

from base_grid import BaseGrid
from errors import GridError

SUPPORTED_DIMENSIONS = (1, 2)


class CellGrid(BaseGrid):
    """
    Uniform Q1 grid of the unit cell Y = (0,1)^n with m divisions per axis.

    Attributes:
        dimension: Space dimension n.
        divisions: Number of elements per axis m; nodes sit at j/m.
    """

    def __init__(self, dimension: int, divisions: int):
        super().__init__(dimension, divisions, np.ones((divisions,) * dimension, dtype=bool))

    @property
    def periodic_size(self) -> int:
        return self.divisions ** self.dimension

    def periodic_fold(self) -> np.ndarray:
        """
        Maps every node to its unknown on the periodic quotient (opposite faces identified).

        Returns:
            Integer array of length num_nodes with values in [0, m^n).
        """
        folded = self.node_lattice % self.divisions
        return np.ravel_multi_index(tuple(folded.T), (self.divisions,) * self.dimension)

    def face_nodes(self, axis: int, side: int) -> np.ndarray:
        """
        Node ids on the face y_axis = side (side 0 or 1), ordered by the remaining coordinates.
        """
        return np.flatnonzero(self.node_lattice[:, axis] == side * self.divisions)


def build_cell_grid(n: int, m: int) -> CellGrid:
    """
    Builds the uniform grid of the unit cell.

    Args:
        n: Dimension, 1 or 2.
        m: Divisions per axis, at least 2.

    Returns:
        The CellGrid with (m+1)^n nodes.
    """
    if n not in SUPPORTED_DIMENSIONS:
        raise GridError("cell.dimension", f"unsupported dimension {n}")
    if int(m) != m or m < 2:
        raise GridError("cell.m", f"need at least 2 divisions, got {m}")
    return CellGrid(n, int(m))
