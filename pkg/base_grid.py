import itertools
import logging
from typing import Tuple

import numpy as np

logger = logging.getLogger(__name__)

# two-point Gauss rule on [0, 1]
GAUSS_POINTS = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])
GAUSS_WEIGHTS = np.array([0.5, 0.5])


def reference_shape_functions(local: np.ndarray, corners: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Evaluates the multilinear shape functions of the reference element [0,1]^n.

    :param local: Points in reference coordinates, shape (P, n).
    :param corners: Corner multi-indices in {0,1}^n, shape (2^n, n).
    :return: Values of shape (P, 2^n) and reference gradients of shape (P, 2^n, n).
    """
    local = np.asarray(local, dtype=float)
    factors = np.where(corners[None, :, :] == 1, local[:, None, :], 1.0 - local[:, None, :])
    values = np.prod(factors, axis=2)
    signs = np.where(corners == 1, 1.0, -1.0)
    gradients = np.empty(factors.shape)
    for axis in range(corners.shape[1]):
        others = np.delete(factors, axis, axis=2)
        gradients[:, :, axis] = signs[None, :, axis] * np.prod(others, axis=2)
    return values, gradients


class BaseGrid:
    """
    Base grid class that handles the Q1 discretization of a union of lattice boxes in [0,1]^n.

    Nodes sit on the lattice {0, 1/d, ..., 1}^n. Only nodes touching an active element are
    kept, numbered in C order of their lattice multi-index.
    """

    def __init__(self, dimension: int, divisions: int, element_mask: np.ndarray):
        """
        Initializes the grid and precomputes connectivity and the reference element.

        :param dimension: Space dimension n.
        :param divisions: Number of elements per axis d.
        :param element_mask: Boolean array of shape (d,)*n selecting the active elements.
        """
        self.dimension = int(dimension)
        self.divisions = int(divisions)
        self.spacing = 1.0 / self.divisions
        self.element_mask = np.array(element_mask, dtype=bool)
        self._build_nodes()
        self._build_elements()
        self._build_reference_element()
        for array in (self.element_mask, self.node_index, self.node_lattice, self.coordinates,
                      self.boundary_mask, self.element_lattice, self.connectivity):
            array.setflags(write=False)
        logger.debug("Built %s with %d nodes and %d elements",
                     type(self).__name__, self.num_nodes, self.num_elements)

    def _build_nodes(self):
        n, d = self.dimension, self.divisions
        padded = np.pad(self.element_mask, 1, constant_values=False)
        touching = np.zeros((d + 1,) * n, dtype=bool)
        surrounded = np.ones((d + 1,) * n, dtype=bool)
        # node i is shared by elements i - 1 and i along every axis
        for offset in itertools.product((0, 1), repeat=n):
            window = padded[tuple(slice(o, o + d + 1) for o in offset)]
            touching |= window
            surrounded &= window
        self.node_index = np.full(touching.shape, -1, dtype=np.int64)
        self.node_index[touching] = np.arange(np.count_nonzero(touching))
        self.node_lattice = np.argwhere(touching)
        self.coordinates = self.node_lattice * self.spacing
        self.boundary_mask = ~surrounded[touching]

    def _build_elements(self):
        self.element_lattice = np.argwhere(self.element_mask)
        self.corners = np.array(list(itertools.product((0, 1), repeat=self.dimension)))
        corner_lattice = self.element_lattice[:, None, :] + self.corners[None, :, :]
        self.connectivity = self.node_index[tuple(np.moveaxis(corner_lattice, -1, 0))]

    def _build_reference_element(self):
        n = self.dimension
        self.quadrature_reference = np.array(list(itertools.product(GAUSS_POINTS, repeat=n)))
        weights = np.array(list(itertools.product(GAUSS_WEIGHTS, repeat=n)))
        self.quadrature_weights = np.prod(weights, axis=1) * self.spacing ** n
        values, gradients = reference_shape_functions(self.quadrature_reference, self.corners)
        self.shape_values = values
        self.shape_gradients = gradients / self.spacing

    @property
    def num_nodes(self) -> int:
        return self.node_lattice.shape[0]

    @property
    def num_elements(self) -> int:
        return self.element_lattice.shape[0]

    @property
    def lattice_shape(self) -> Tuple[int, ...]:
        return (self.divisions + 1,) * self.dimension

    def boundary_nodes(self) -> np.ndarray:
        """
        Returns the ids of the active nodes lying on the boundary of the active region.
        """
        return np.flatnonzero(self.boundary_mask)

    def measure(self) -> float:
        return float(self.num_elements * self.quadrature_weights.sum())

    def same_lattice(self, other: "BaseGrid") -> bool:
        return (self.dimension == other.dimension and self.divisions == other.divisions
                and np.array_equal(self.element_mask, other.element_mask))

    def quadrature_points(self) -> np.ndarray:
        """
        Physical quadrature points, shape (elements, 2^n, n).
        """
        return (self.element_lattice[:, None, :] + self.quadrature_reference[None, :, :]) * self.spacing

    def interpolate_to_quadrature(self, values: np.ndarray) -> np.ndarray:
        """
        Evaluates nodal values at the quadrature points.

        :param values: Nodal values, shape (nodes,) or (nodes, k).
        :return: Array of shape (elements, 2^n) or (elements, 2^n, k).
        """
        local = np.asarray(values, dtype=float)[self.connectivity]
        return np.einsum('ec...,qc->eq...', local, self.shape_values)

    def gradient_at_quadrature(self, values: np.ndarray) -> np.ndarray:
        """
        Gradient of the Q1 interpolant at the quadrature points, shape (elements, 2^n, n).
        """
        local = np.asarray(values, dtype=float)[self.connectivity]
        return np.einsum('ec,qcd->eqd', local, self.shape_gradients)

    def integrate(self, quadrature_values: np.ndarray) -> np.ndarray:
        return np.einsum('eq...,q->...', quadrature_values, self.quadrature_weights)

    def element_integrals(self, quadrature_values: np.ndarray) -> np.ndarray:
        return np.einsum('eq...,q->e...', quadrature_values, self.quadrature_weights)

    def node_weights(self) -> np.ndarray:
        """
        Integral of every nodal basis function over the grid.
        """
        local = self.quadrature_weights @ self.shape_values
        weights = np.broadcast_to(local, self.connectivity.shape)
        return np.bincount(self.connectivity.ravel(), weights=weights.ravel(), minlength=self.num_nodes)

    def lattice_values(self, values: np.ndarray, fill: float = 0.0) -> np.ndarray:
        """
        Scatters active-node values into the full (d+1)^n lattice.
        """
        values = np.asarray(values, dtype=float)
        lattice = np.full(self.lattice_shape + values.shape[1:], fill, dtype=float)
        lattice[tuple(self.node_lattice.T)] = values
        return lattice

    def locate(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Finds the lattice element holding each point and its reference coordinates.

        Points on element faces are attributed to the element on the upper side, except on
        the last lattice face where the lower element is used.

        :param points: Array of shape (P, n).
        :return: Element multi-indices (P, n) and reference coordinates (P, n).
        """
        scaled = np.asarray(points, dtype=float) / self.spacing
        index = np.clip(np.floor(scaled).astype(np.int64), 0, self.divisions - 1)
        return index, scaled - index

    def evaluate_shape(self, local: np.ndarray) -> np.ndarray:
        """
        Shape function values (P, 2^n) at reference coordinates (P, n).
        """
        return reference_shape_functions(local, self.corners)[0]

    def _gather_corners(self, lattice: np.ndarray, index: np.ndarray) -> np.ndarray:
        corner_lattice = index[:, None, :] + self.corners[None, :, :]
        return lattice[tuple(np.moveaxis(corner_lattice, -1, 0))]

    def evaluate(self, values: np.ndarray, points: np.ndarray) -> np.ndarray:
        """
        Evaluates the Q1 interpolant of nodal values at arbitrary points of the grid.
        """
        points = np.asarray(points, dtype=float)
        flat = points.reshape(-1, self.dimension)
        index, local = self.locate(flat)
        shape_values = self.evaluate_shape(local)
        corner_values = self._gather_corners(self.lattice_values(values), index)
        return np.sum(shape_values * corner_values, axis=1).reshape(points.shape[:-1])

    def evaluate_gradient(self, values: np.ndarray, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        flat = points.reshape(-1, self.dimension)
        index, local = self.locate(flat)
        _, shape_gradients = reference_shape_functions(local, self.corners)
        corner_values = self._gather_corners(self.lattice_values(values), index)
        gradients = np.einsum('pc,pcd->pd', corner_values, shape_gradients) / self.spacing
        return gradients.reshape(points.shape)
