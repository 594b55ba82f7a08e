from typing import Tuple

import numpy as np

from errors import GridError
from mesh.domain_grid import DomainGrid

_CHUNK = 4096
_TOLERANCE = 1e-12


def split_scales(x: np.ndarray, eps: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Integer part [x/ε] and fractional part {x/ε} in [0,1)^n.
    """
    scaled = np.asarray(x, dtype=float) / eps
    macro = np.floor(scaled)
    return macro.astype(np.int64), scaled - macro


def boundary_segments(grid: DomainGrid) -> np.ndarray:
    """
    Boundary pieces of the masked region, in physical coordinates.

    For n = 2 the result has shape (S, 2, 2), one segment per exposed cell face; for n = 1 it
    has shape (S, 2, 1) with both endpoints equal.
    """
    eps = grid.eps
    pieces = []
    for cell in grid.cells:
        for axis in range(grid.dimension):
            for side in (0, 1):
                neighbour = cell.copy()
                neighbour[axis] += 1 if side else -1
                if grid.has_cell(neighbour[None, :])[0]:
                    continue
                start = cell.astype(float)
                start[axis] += side
                end = start.copy()
                if grid.dimension == 2:
                    end[1 - axis] += 1
                pieces.append((start * eps, end * eps))
    return np.array(pieces)


def _point_segment_distances(points: np.ndarray, segments: np.ndarray) -> np.ndarray:
    start = segments[None, :, 0, :]
    direction = segments[None, :, 1, :] - start
    length2 = np.sum(direction ** 2, axis=-1)
    offset = points[:, None, :] - start
    projection = np.sum(offset * direction, axis=-1)
    t = np.divide(projection, length2, out=np.zeros(projection.shape),
                  where=np.broadcast_to(length2 > 0, projection.shape))
    nearest = start + np.clip(t, 0.0, 1.0)[..., None] * direction
    return np.sqrt(np.sum((points[:, None, :] - nearest) ** 2, axis=-1)).min(axis=1)


def contains(grid: DomainGrid, points: np.ndarray) -> np.ndarray:
    """
    Whether points (P, n) lie in the closed domain.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    inside = np.zeros(points.shape[0], dtype=bool)
    for offset in grid.reflection_offsets():
        index = np.floor(points / grid.eps + _TOLERANCE).astype(np.int64) - offset
        low = index * grid.eps - _TOLERANCE
        high = (index + 1) * grid.eps + _TOLERANCE
        inside |= grid.has_cell(index) & np.all((points >= low) & (points <= high), axis=1)
    return inside


def distances_to_boundary(grid: DomainGrid, points: np.ndarray) -> np.ndarray:
    """
    Exact Euclidean distance from points (P, n) of the closed domain to its boundary.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if not np.all(contains(grid, points)):
        raise GridError("point", "point outside the closed domain")
    segments = boundary_segments(grid)
    result = np.empty(points.shape[0])
    for start in range(0, points.shape[0], _CHUNK):
        chunk = points[start:start + _CHUNK]
        result[start:start + _CHUNK] = _point_segment_distances(chunk, segments)
    return result


def distance_to_boundary(grid: DomainGrid, x) -> float:
    return float(distances_to_boundary(grid, np.asarray(x, dtype=float).reshape(1, -1))[0])
