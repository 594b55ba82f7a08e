import logging
import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from errors import GridError

logger = logging.getLogger(__name__)

_SPEC_PATTERN = re.compile(r"^\s*(?P<name>[a-z_]+)\s*(?:\((?P<args>[^)]*)\))?\s*$")


@dataclass(frozen=True)
class MatrixField:
    """
    Y-periodic coefficient y -> A(y), an n x n symmetric matrix.

    Attributes:
        name: Builtin spec string the field was parsed from.
        dimension: n.
        matrix: Maps wrapped points (..., n) in [0,1)^n to matrices (..., n, n).
        lower_bound: Ellipticity constant c.
        upper_bound: Ellipticity constant C.
    """
    name: str
    dimension: int
    matrix: Callable[[np.ndarray], np.ndarray]
    lower_bound: float
    upper_bound: float

    def evaluate(self, y: np.ndarray) -> np.ndarray:
        """
        Samples A at points y (..., n); every point is wrapped modulo 1 first.
        """
        y = np.asarray(y, dtype=float)
        return self.matrix(np.mod(y, 1.0))

    def scaled(self, factor: float) -> "MatrixField":
        if factor <= 0:
            raise GridError("coefficient", "scaling factor must be positive")
        return MatrixField(f"{factor:g}*{self.name}", self.dimension,
                           lambda y: factor * self.matrix(y),
                           factor * self.lower_bound, factor * self.upper_bound)

    def oscillating(self, eps: float) -> Callable[[np.ndarray], np.ndarray]:
        """
        Evaluator x -> A({x/ε}) for use in assembly.
        """
        return lambda x: self.evaluate(np.asarray(x) / eps)


def _isotropic(profile: Callable[[np.ndarray], np.ndarray], dimension: int):
    identity = np.eye(dimension)

    def matrix(y: np.ndarray) -> np.ndarray:
        return profile(y)[..., None, None] * identity

    return matrix


def identity_field(dimension: int) -> MatrixField:
    return MatrixField("identity", dimension,
                       _isotropic(lambda y: np.ones(y.shape[:-1]), dimension), 1.0, 1.0)


def laminate_field(dimension: int, a: float, b: float) -> MatrixField:
    """
    a·I on {y_1 < 1/2}, b·I elsewhere.
    """
    return MatrixField(f"laminate({a:g},{b:g})", dimension,
                       _isotropic(lambda y: np.where(y[..., 0] < 0.5, a, b), dimension),
                       min(a, b), max(a, b))


def checkerboard_field(dimension: int, a: float, b: float) -> MatrixField:
    """
    a·I on the two quarters where y_1 and y_2 fall in the same half, b·I on the others.
    """
    if dimension != 2:
        raise GridError("coefficient", "checkerboard is defined for n = 2 only")

    def profile(y):
        same = (y[..., 0] < 0.5) == (y[..., 1] < 0.5)
        return np.where(same, a, b)

    return MatrixField(f"checkerboard({a:g},{b:g})", dimension, _isotropic(profile, dimension),
                       min(a, b), max(a, b))


def smooth_field(dimension: int) -> MatrixField:
    """
    (2 + cos 2πy_1 cos 2πy_2)·I, or (2 + cos 2πy_1)·I in one dimension.
    """
    def profile(y):
        return 2.0 + np.prod(np.cos(2.0 * np.pi * y), axis=-1)

    return MatrixField("smooth", dimension, _isotropic(profile, dimension), 1.0, 3.0)


def parse_coefficient(spec: str, dimension: int) -> MatrixField:
    """
    Parses a builtin coefficient spec such as "laminate(1,4)".

    Args:
        spec: One of "identity", "laminate(a,b)", "checkerboard(a,b)", "smooth".
        dimension: Space dimension of the cell.

    Returns:
        The matching MatrixField.
    """
    match = _SPEC_PATTERN.match(spec or "")
    if not match:
        raise GridError("coefficient", f"cannot parse {spec!r}")
    name = match.group("name")
    raw = match.group("args")
    try:
        args = [float(a) for a in raw.split(",")] if raw and raw.strip() else []
    except ValueError:
        raise GridError("coefficient", f"non-numeric parameters in {spec!r}")

    if name in ("identity", "smooth"):
        if args:
            raise GridError("coefficient", f"{name} takes no parameters")
        return identity_field(dimension) if name == "identity" else smooth_field(dimension)
    if name in ("laminate", "checkerboard"):
        if len(args) != 2 or min(args) <= 0:
            raise GridError("coefficient", f"{name} needs two positive parameters")
        builder = laminate_field if name == "laminate" else checkerboard_field
        return builder(dimension, *args)
    raise GridError("coefficient", f"unknown coefficient {name!r}")


def sample_coefficient(field: MatrixField, y: np.ndarray) -> np.ndarray:
    """
    A(y mod 1) at a single point y.
    """
    return field.evaluate(np.asarray(y, dtype=float).reshape(field.dimension))


def ellipticity_range(field: MatrixField, samples: int = 64):
    """
    Smallest and largest eigenvalue of A over a uniform sample of cell midpoints.

    Returns:
        Tuple (lowest, highest) Rayleigh quotient bounds.
    """
    axis = (np.arange(samples) + 0.5) / samples
    grids = np.meshgrid(*([axis] * field.dimension), indexing='ij')
    points = np.stack(grids, axis=-1).reshape(-1, field.dimension)
    eigenvalues = np.linalg.eigvalsh(field.evaluate(points))
    return float(eigenvalues.min()), float(eigenvalues.max())
