"""
Discrete fields on structured grids.

ScalarField holds nodal Q1 values. Gradients of Q1 fields jump across elements, so they
live at element quadrature points (QuadratureField, VectorField). CellField holds one value
per ε-cell of a DomainGrid.
"""
from typing import Callable, Union

import numpy as np

from base_grid import BaseGrid
from errors import GridError

Number = Union[int, float]


def _frozen(values) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


class Field:
    """
    Common arithmetic for fields; mixed combinations fall back to quadrature samples.
    """

    def __init__(self, grid: BaseGrid, values):
        self.grid = grid
        self.values = _frozen(values)

    def at_quadrature(self) -> np.ndarray:
        raise NotImplementedError

    def _like(self, values) -> "Field":
        return type(self)(self.grid, values)

    def _combine(self, other, op: Callable) -> "Field":
        if np.isscalar(other):
            return self._like(op(self.values, other))
        if other.grid is not self.grid and not other.grid.same_lattice(self.grid):
            raise GridError("field", "fields live on different grids")
        if type(other) is type(self):
            return self._like(op(self.values, other.values))
        values = op(self.at_quadrature(), other.at_quadrature())
        if values.ndim == 3:
            return VectorField(self.grid, values)
        return QuadratureField(self.grid, values)

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, other):
        return self._combine(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other: Number):
        return self._like(self.values / other)

    def __neg__(self):
        return self._like(-self.values)

    def integral(self) -> float:
        return float(self.grid.integrate(self.at_quadrature()).sum())

    def mean(self) -> float:
        return self.integral() / self.grid.measure()


class ScalarField(Field):
    """
    Nodal values of a Q1 function, one per active grid node.
    """

    def __init__(self, grid: BaseGrid, values):
        super().__init__(grid, values)
        if self.values.shape != (grid.num_nodes,):
            raise GridError("field", f"expected {grid.num_nodes} nodal values, got {self.values.shape}")

    def at_quadrature(self) -> np.ndarray:
        return self.grid.interpolate_to_quadrature(self.values)

    def gradient(self) -> "VectorField":
        return VectorField(self.grid, self.grid.gradient_at_quadrature(self.values))

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return self.grid.evaluate(self.values, points)

    def evaluate_gradient(self, points: np.ndarray) -> np.ndarray:
        return self.grid.evaluate_gradient(self.values, points)

    def lattice(self, fill: float = 0.0) -> np.ndarray:
        return self.grid.lattice_values(self.values, fill)

    def rebind(self, grid: BaseGrid) -> "ScalarField":
        """
        The same nodal values viewed through another grid on the identical fine lattice.
        """
        if not grid.same_lattice(self.grid):
            raise GridError("field", "cannot rebind a field to a different lattice")
        return ScalarField(grid, self.values)


class QuadratureField(Field):
    """
    Scalar samples at element quadrature points, shape (elements, 2^n).
    """

    def at_quadrature(self) -> np.ndarray:
        return self.values


class VectorField(Field):
    """
    Vector samples at element quadrature points, shape (elements, 2^n, n).
    """

    def at_quadrature(self) -> np.ndarray:
        return self.values

    def component(self, axis: int) -> QuadratureField:
        return QuadratureField(self.grid, self.values[..., axis])

    def integral(self) -> np.ndarray:
        return self.grid.integrate(self.values)


class CellField(Field):
    """
    One constant value per masked ε-cell of a DomainGrid.
    """

    def at_quadrature(self) -> np.ndarray:
        per_element = self.values[self.grid.element_cells]
        return np.repeat(per_element[:, None], self.grid.quadrature_weights.size, axis=1)


def interpolate(grid: BaseGrid, function: Callable[[np.ndarray], np.ndarray]) -> ScalarField:
    """
    Nodal interpolant of a closed-form function evaluated on node coordinates (nodes, n).
    """
    return ScalarField(grid, function(grid.coordinates))


def zeros(grid: BaseGrid) -> ScalarField:
    return ScalarField(grid, np.zeros(grid.num_nodes))
