import json
import logging
import os
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from base_grid import BaseGrid
from errors import ConfigError
from mesh.cell_grid import build_cell_grid
from mesh.domain_grid import DomainGrid
from mesh.fields import ScalarField
from unfold.unfolded_field import UnfoldedField

logger = logging.getLogger(__name__)

VTK_HEADER = "# vtk DataFile Version 3.0"
ACTIVE_ARRAY = "active"


@dataclass(frozen=True)
class StructuredPoints:
    """
    Contents of a legacy VTK structured-points file.

    Attributes:
        dimensions: Points per axis, always three entries.
        spacing: Step per axis.
        arrays: Point arrays by name, each shaped like the lattice (x index first).
    """
    dimensions: Tuple[int, int, int]
    spacing: Tuple[float, float, float]
    arrays: Dict[str, np.ndarray]

    @property
    def dimension(self) -> int:
        return sum(1 for points in self.dimensions if points > 1)


def _padded(values: Tuple, fill) -> Tuple:
    return tuple(values) + (fill,) * (3 - len(values))


def write_structured_points(path: str, grid: BaseGrid, arrays: Dict[str, np.ndarray], title: str = "field") -> None:
    """
    Writes nodal arrays of a grid as ASCII legacy VTK, x index varying fastest.

    Inactive lattice nodes of masked grids are written as 0 and flagged by an "active" array.
    """
    lattice_shape = grid.lattice_shape
    lines = [VTK_HEADER, title, "ASCII", "DATASET STRUCTURED_POINTS",
             "DIMENSIONS " + " ".join(str(d) for d in _padded(lattice_shape, 1)),
             "ORIGIN 0 0 0",
             "SPACING " + " ".join(repr(float(h)) for h in _padded((grid.spacing,) * grid.dimension, 1.0)),
             f"POINT_DATA {int(np.prod(lattice_shape))}"]
    columns = dict(arrays)
    if grid.num_nodes != int(np.prod(lattice_shape)):
        columns[ACTIVE_ARRAY] = np.ones(grid.num_nodes)
    for name, values in columns.items():
        lattice = grid.lattice_values(values)
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend("%.17g" % v for v in lattice.ravel(order='F'))
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    logger.debug("Wrote %s (%s)", path, ", ".join(columns))


def write_scalar_field(path: str, field: ScalarField, name: str = "phi") -> None:
    write_structured_points(path, field.grid, {name: field.values}, title=name)


def read_structured_points(path: str) -> StructuredPoints:
    """
    Reads an ASCII legacy VTK structured-points file with double point scalars.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            tokens = f.read().split("\n")
    except FileNotFoundError:
        raise ConfigError("--field", f"no such file {path}")
    if not tokens or not tokens[0].startswith("# vtk DataFile"):
        raise ConfigError("--field", f"{path} is not a legacy VTK file")
    if len(tokens) < 3 or tokens[2].strip() != "ASCII":
        raise ConfigError("--field", "only ASCII VTK files are supported")

    dimensions: Optional[Tuple[int, ...]] = None
    spacing: Tuple[float, ...] = (1.0, 1.0, 1.0)
    arrays: Dict[str, np.ndarray] = {}
    words = " ".join(tokens[3:]).split()
    position = 0
    while position < len(words):
        keyword = words[position].upper()
        if keyword == "DATASET":
            if words[position + 1].upper() != "STRUCTURED_POINTS":
                raise ConfigError("--field", f"unsupported dataset {words[position + 1]}")
            position += 2
        elif keyword == "DIMENSIONS":
            dimensions = tuple(int(w) for w in words[position + 1:position + 4])
            position += 4
        elif keyword == "ORIGIN":
            position += 4
        elif keyword in ("SPACING", "ASPECT_RATIO"):
            spacing = tuple(float(w) for w in words[position + 1:position + 4])
            position += 4
        elif keyword == "POINT_DATA":
            position += 2
        elif keyword == "SCALARS":
            if dimensions is None:
                raise ConfigError("--field", "SCALARS before DIMENSIONS")
            name = words[position + 1]
            position += 3
            if position < len(words) and words[position].isdigit():
                position += 1
            if words[position].upper() == "LOOKUP_TABLE":
                position += 2
            count = int(np.prod(dimensions))
            values = np.array(words[position:position + count], dtype=float)
            if values.size != count:
                raise ConfigError("--field", f"array {name} holds {values.size} values, expected {count}")
            arrays[name] = values.reshape(dimensions, order='F')
            position += count
        else:
            raise ConfigError("--field", f"unsupported VTK keyword {words[position]!r}")
    if dimensions is None or not arrays:
        raise ConfigError("--field", f"{path} holds no point data")
    return StructuredPoints(dimensions, spacing, arrays)


def read_cell_field(path: str, name: Optional[str] = None) -> ScalarField:
    """
    Loads a field dumped on the unit cell back as a ScalarField on its CellGrid.

    Args:
        path: VTK file holding an (m+1)^n lattice of step 1/m.
        name: Array to load; the first array when omitted.
    """
    dump = read_structured_points(path)
    n = dump.dimension
    points = dump.dimensions[:n]
    if n == 0 or len(set(points)) != 1:
        raise ConfigError("--field", f"expected a square cell lattice, got dimensions {dump.dimensions}")
    divisions = points[0] - 1
    if any(abs(h * divisions - 1.0) > 1e-12 for h in dump.spacing[:n]):
        raise ConfigError("--field", f"spacing {dump.spacing[:n]} does not cover the unit cell")
    if ACTIVE_ARRAY in dump.arrays:
        raise ConfigError("--field", "masked domain dumps cannot be read as cell fields")
    name = name or next(iter(dump.arrays))
    if name not in dump.arrays:
        raise ConfigError("--field", f"no array named {name!r}")
    grid = build_cell_grid(n, divisions)
    lattice = dump.arrays[name].reshape(points)
    return ScalarField(grid, lattice[tuple(grid.node_lattice.T)])


def write_unfolded(out_dir: str, field: UnfoldedField, cells: Iterable[int], name: str = "unfolded") -> Dict:
    """
    Dumps the y-arrays of selected ε-cells, one VTK file per cell, plus a {name}_index.json listing them.
    """
    domain: DomainGrid = field.domain_grid
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    for cell in cells:
        if not 0 <= cell < field.num_cells:
            raise ConfigError("twoscale.dump_cells", f"cell {cell} out of range [0, {field.num_cells})")
        filename = f"{name}_cell_{cell}.vtk"
        write_structured_points(os.path.join(out_dir, filename), field.y_grid, {name: field.column(cell).values},
                                title=f"{name} cell {cell}")
        entries.append({"cell": int(cell), "macro_index": domain.cells[cell].tolist(), "file": filename})
    index = {"eps": field.eps, "m_y": field.y_grid.divisions, "cells": entries}
    with open(os.path.join(out_dir, f"{name}_index.json"), "w", encoding="utf-8") as f:
        json.dump(index, f, indent=2, sort_keys=True)
    logger.info("Dumped %d unfolded cell columns to %s", len(entries), out_dir)
    return index
