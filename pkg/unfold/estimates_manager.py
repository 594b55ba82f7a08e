import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from fem.cg_solver import SolverConfig
from mesh.cell_grid import build_cell_grid
from mesh.domain_grid import build_domain_grid, named_mask
from mesh.fields import ScalarField, interpolate
from norms.sobolev_norms import RieszMap, h1_seminorm, h_minus1_norm, l2_norm
from periodize.periodization import PeriodicProjector
from unfold.two_scale import two_scale_decompose
from unfold.unfolding import cell_mean, q_interp, unfold

logger = logging.getLogger(__name__)

RATIO_COLUMNS = ("poincare_ratio", "hminus1_ratio", "unfolding_ratio", "scale_split_ratio",
                 "interpolation_ratio", "defect_ratio", "remainder_ratio", "micro_ratio",
                 "product_ratio")
# ratios whose spread across ε must stay below STABILITY_FACTOR
STABILITY_COLUMNS = ("poincare_ratio", "unfolding_ratio", "scale_split_ratio", "interpolation_ratio",
                     "defect_ratio", "remainder_ratio")
# ratios that may shrink with ε but must not grow past STABILITY_FACTOR times the coarsest value;
# the H⁻¹ ratio of a smooth field decays like ε since φ − M_Y^ε(φ) has zero mean on every cell
BOUNDED_COLUMNS = ("hminus1_ratio",)
STABILITY_FACTOR = 3.0
PRODUCT_BOUND_PER_DIMENSION = 2.0


def unfolding_distance(phi: ScalarField) -> float:
    """
    ||φ − T_ε(φ)|| in L²(Ω×Y), with T_ε(φ) unfolded at the fine resolution.

    Per cell c: ∫_c φ² + ε^n ||T_c||²_Y − 2 (∫_c φ)(∫_Y T_c).
    """
    grid = phi.grid
    unfolded = unfold(phi)
    volume = grid.eps ** grid.dimension
    cell_squares = np.bincount(grid.element_cells, weights=grid.element_integrals(phi.at_quadrature() ** 2),
                               minlength=grid.num_cells)
    cell_integrals = cell_mean(phi).values * volume
    y_integrals = unfolded.values @ unfolded.y_grid.node_weights()
    total = cell_squares.sum() + unfolded.l2_norm() ** 2 - 2.0 * np.sum(cell_integrals * y_integrals)
    return float(np.sqrt(max(total, 0.0)))


def product_ratio(phi: ScalarField, psi: ScalarField) -> float:
    """
    ||Q_ε(φ)·ψ({·/ε})||_{L²(Ω)} / (||φ||_{L²(Ω)} ||ψ||_{L²(Y)}).
    """
    grid = phi.grid
    points = grid.quadrature_points() / grid.eps
    oscillation = psi.evaluate(points - np.floor(points))
    product = q_interp(phi).at_quadrature() * oscillation
    denominator = l2_norm(phi) * l2_norm(psi)
    if denominator == 0:
        return float('nan')
    return float(np.sqrt(grid.integrate(product ** 2)) / denominator)


@dataclass
class EstimatesReport:
    """
    One row of operator-estimate ratios per ε, plus the stability verdict.
    """
    frame: pd.DataFrame
    spreads: Dict[str, float] = field(default_factory=dict)
    product_bound: float = 4.0

    @property
    def passed(self) -> Dict[str, bool]:
        flags = {f"{name}_stable": bool(self.spreads[name] < STABILITY_FACTOR) for name in STABILITY_COLUMNS}
        for name in BOUNDED_COLUMNS:
            column = self.frame[name]
            flags[f"{name}_bounded"] = bool(column.max() < STABILITY_FACTOR * column.iloc[0])
        products = self.frame["product_ratio"].dropna()
        flags["product_bound"] = bool((products <= self.product_bound).all())
        return flags


class EstimatesManager:
    """
    Measures the unfolding operator estimates of a smooth field across an ε ladder.
    """

    def __init__(self, function: Callable[[np.ndarray], np.ndarray], inverse_eps: Sequence[int],
                 subdivisions: int, m_y: int, psi: Optional[ScalarField] = None,
                 shape: str = "unit_square", solver_config: SolverConfig = SolverConfig()):
        """
        Initializes a new EstimatesManager instance.

        Args:
            function: Closed-form φ evaluated on node coordinates.
            inverse_eps: The ladder of N = 1/ε.
            subdivisions: Fine cells per ε-cell.
            m_y: y-resolution of the two-scale decomposition.
            psi: Cell field used in the product estimate; skipped when None.
            shape: Domain mask name.
            solver_config: CG settings.
        """
        self.function = function
        self.inverse_eps = sorted(int(n) for n in inverse_eps)
        self.subdivisions = subdivisions
        self.m_y = m_y
        self.psi = psi
        self.shape = shape
        self.solver_config = solver_config
        self.projector = PeriodicProjector(build_cell_grid(2, m_y), solver_config)

    def estimate_row(self, cells_per_axis: int) -> Dict[str, float]:
        """
        Computes every ratio for one ε = 1/N.
        """
        grid = build_domain_grid(2, cells_per_axis, self.subdivisions,
                                 named_mask(self.shape, 2, cells_per_axis))
        eps = grid.eps
        phi = interpolate(grid, self.function)
        riesz = RieszMap(grid, self.solver_config)
        gradient = h1_seminorm(phi)
        mean = cell_mean(phi)
        macro = q_interp(phi)
        decomposition = two_scale_decompose(phi, self.m_y, self.solver_config, self.projector, riesz)
        under = decomposition.remainder
        row = {
            "eps": eps,
            "poincare_ratio": l2_norm(phi - mean) / (eps * gradient),
            "hminus1_ratio": h_minus1_norm(phi - mean, riesz=riesz) / (eps * l2_norm(phi)),
            "unfolding_ratio": unfolding_distance(phi) / (eps * gradient),
            "scale_split_ratio": l2_norm(macro - mean) / (eps * gradient),
            "interpolation_ratio": l2_norm(phi - macro) / (eps * gradient),
            "defect_ratio": decomposition.defect / (eps * gradient),
            "remainder_ratio": (h1_seminorm(macro) + l2_norm(under) + eps * h1_seminorm(under)) / gradient,
            "micro_ratio": decomposition.micro.h1_norm() / gradient,
            "product_ratio": product_ratio(phi, self.psi) if self.psi is not None else float('nan'),
        }
        logger.info("Operator estimates done for ε=1/%d", cells_per_axis)
        return row

    def run(self) -> EstimatesReport:
        rows: List[Dict[str, float]] = [self.estimate_row(n) for n in self.inverse_eps]
        frame = pd.DataFrame(rows, columns=["eps", *RATIO_COLUMNS])
        spreads = {name: float(frame[name].max() / frame[name].min()) for name in STABILITY_COLUMNS + BOUNDED_COLUMNS}
        report = EstimatesReport(frame, spreads, PRODUCT_BOUND_PER_DIMENSION ** 2)
        for name, ok in report.passed.items():
            if not ok:
                logger.warning("Operator estimate check %s failed", name)
        return report
