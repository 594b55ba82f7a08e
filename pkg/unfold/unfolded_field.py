import numpy as np

from errors import GridError
from fem.assembly import assemble_mass
from mesh.cell_grid import CellGrid
from mesh.domain_grid import DomainGrid
from mesh.fields import ScalarField


class _TwoScaleField:
    """
    Shared storage for fields on Ω×Y that are constant in x on every ε-cell.
    """

    def __init__(self, domain_grid: DomainGrid, y_grid: CellGrid, values, expected_shape):
        if y_grid.dimension != domain_grid.dimension:
            raise GridError("m_y", "y-grid and domain dimensions differ")
        self.domain_grid = domain_grid
        self.y_grid = y_grid
        self.values = np.array(values, dtype=float)
        if self.values.shape != expected_shape:
            raise GridError("unfolded", f"expected values of shape {expected_shape}, got {self.values.shape}")
        self.values.setflags(write=False)

    @property
    def eps(self) -> float:
        return self.domain_grid.eps

    @property
    def num_cells(self) -> int:
        return self.domain_grid.num_cells

    @property
    def cell_volume(self) -> float:
        return self.eps ** self.domain_grid.dimension

    def with_values(self, values):
        return type(self)(self.domain_grid, self.y_grid, values)

    def _combine(self, other, op):
        if np.isscalar(other):
            return self.with_values(op(self.values, other))
        if other.y_grid.divisions != self.y_grid.divisions or other.num_cells != self.num_cells:
            raise GridError("unfolded", "two-scale fields live on different grids")
        return self.with_values(op(self.values, other.values))

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, other):
        return self._combine(other, np.multiply)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)


class UnfoldedField(_TwoScaleField):
    """
    Scalar two-scale field: for every masked ε-cell, nodal Q1 values on the y-grid.

    Attributes:
        domain_grid: The DomainGrid providing the ε-cells.
        y_grid: CellGrid of resolution m_y shared by all cells.
        values: Array of shape (cells, y-nodes).
    """

    def __init__(self, domain_grid: DomainGrid, y_grid: CellGrid, values):
        super().__init__(domain_grid, y_grid, values, (domain_grid.num_cells, y_grid.num_nodes))

    def column(self, cell: int) -> ScalarField:
        return ScalarField(self.y_grid, self.values[cell])

    def integral(self) -> float:
        """
        ∫_{Ω×Y}, exact for Q1 data in y.
        """
        return float(self.cell_volume * np.sum(self.values @ self.y_grid.node_weights()))

    def l2_norm(self) -> float:
        mass = assemble_mass(self.y_grid)
        squares = np.sum((mass @ self.values.T) * self.values.T)
        return float(np.sqrt(max(self.cell_volume * squares, 0.0)))

    def y_gradient(self) -> "UnfoldedVectorField":
        """
        ∇_y of every cell array, sampled at the Gauss points of the y-grid.
        """
        local = self.values[:, self.y_grid.connectivity]
        gradient = np.einsum('sec,qcd->seqd', local, self.y_grid.shape_gradients)
        return UnfoldedVectorField(self.domain_grid, self.y_grid, gradient)

    def h1_norm(self) -> float:
        """
        Norm in H¹(Y; L²(Ω)).
        """
        return float(np.hypot(self.l2_norm(), self.y_gradient().l2_norm()))

    def evaluate(self, cell_ids: np.ndarray, y_points: np.ndarray) -> np.ndarray:
        """
        Q1 value of cell arrays at one y-point per entry.

        Args:
            cell_ids: Masked cell ids, shape (P,).
            y_points: Points of the closed cell, shape (P, n).
        """
        grid = self.y_grid
        index, local = grid.locate(y_points)
        shape_values = grid.evaluate_shape(local)
        corner_lattice = index[:, None, :] + grid.corners[None, :, :]
        corner_nodes = grid.node_index[tuple(np.moveaxis(corner_lattice, -1, 0))]
        corner_values = self.values[np.asarray(cell_ids)[:, None], corner_nodes]
        return np.sum(shape_values * corner_values, axis=1)


class UnfoldedVectorField(_TwoScaleField):
    """
    Vector two-scale field sampled at the Gauss points of the y-grid.

    Attributes:
        values: Array of shape (cells, y-elements, 2^n, n).
    """

    def __init__(self, domain_grid: DomainGrid, y_grid: CellGrid, values):
        n = domain_grid.dimension
        super().__init__(domain_grid, y_grid, values,
                         (domain_grid.num_cells, y_grid.num_elements, y_grid.quadrature_weights.size, n))

    def l2_norm(self) -> float:
        squares = np.einsum('seqd,q->', self.values ** 2, self.y_grid.quadrature_weights)
        return float(np.sqrt(max(self.cell_volume * squares, 0.0)))
