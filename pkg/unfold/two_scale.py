import logging
from dataclasses import dataclass
from typing import Optional

from fem.cg_solver import SolverConfig
from mesh.fields import ScalarField
from norms.sobolev_norms import RieszMap, mixed_l2y_hminus1x_norm
from periodize.periodization import PeriodicProjector, periodize_project_columns
from unfold.unfolded_field import UnfoldedField
from unfold.unfolding import remainder_split, unfold, unfold_gradient

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TwoScaleDecomposition:
    """
    φ ≈ Φ(x) + ε φ̂(x, {x/ε}) with a measured defect.

    Attributes:
        macro: Φ = Q_ε(φ).
        remainder: φ_under = (φ − Φ)/ε.
        micro: φ̂, the periodic projection of T_ε(φ_under) in every cell.
        defect: ||T_ε(∇φ) − ∇Φ − ∇_y φ̂|| in [L²(Y; H⁻¹(Ω))]^n.
    """
    macro: ScalarField
    remainder: ScalarField
    micro: UnfoldedField
    defect: float


def two_scale_decompose(phi: ScalarField, m_y: Optional[int] = None,
                        cfg: SolverConfig = SolverConfig(),
                        projector: Optional[PeriodicProjector] = None,
                        riesz: Optional[RieszMap] = None) -> TwoScaleDecomposition:
    """
    Builds the macro part, the periodic micro part and the defect of a field on a DomainGrid.

    Args:
        phi: Nodal field on a DomainGrid; ε is the grid's cell size.
        m_y: y-resolution of the micro part, defaults to the fine subdivision s.
        cfg: Solver settings for the projections and the Riesz solves.
        projector: Optional prebuilt projector on the y-grid.
        riesz: Optional prebuilt RieszMap on φ's grid.

    Returns:
        The TwoScaleDecomposition.
    """
    macro, remainder = remainder_split(phi)
    micro = periodize_project_columns(unfold(remainder, m_y), cfg, projector)
    mismatch = unfold_gradient(phi, micro.y_grid.divisions) - micro.y_gradient()
    defect = mixed_l2y_hminus1x_norm(mismatch, macro.gradient(), cfg, riesz)
    logger.debug("Two-scale defect %.3e at ε=%g", defect, phi.grid.eps)
    return TwoScaleDecomposition(macro, remainder, micro, defect)
