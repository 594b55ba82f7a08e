import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

CSV_COLUMNS = ["eps", "h", "l2_err", "h1_corr_err", "h1_plain_err", "slope_l2", "slope_h1", "cg_iters", "seconds"]
DIAGNOSTIC_COLUMNS = ["eps", "approx_h1_err", "hminus1_err", "subdivisions", "under_resolved", "relative_residual"]
# wall-clock columns, excluded from run-to-run reproducibility
TIMING_COLUMNS = ["seconds"]


@dataclass(frozen=True)
class StudyRow:
    """
    Errors measured for one ε.

    Attributes:
        eps: Cell size.
        h: Fine mesh step.
        l2_err: ||φ^ε − Φ||_{L²}.
        h1_corr_err: ||∇φ^ε − corrected gradient||_{L²}.
        h1_plain_err: ||∇φ^ε − ∇Φ||_{L²}.
        approx_h1_err: ||∇(φ^ε − field of the cutoff approximation)||_{L²}.
        hminus1_err: ||φ^ε − Φ||_{H⁻¹}.
        cg_iters: Iterations of the oscillatory solve.
        seconds: Wall time of the row.
        subdivisions: Fine cells per ε-cell.
        under_resolved: True when fewer than 8 fine cells resolve a period.
        relative_residual: Final residual of the oscillatory solve.
    """
    eps: float
    h: float
    l2_err: float
    h1_corr_err: float
    h1_plain_err: float
    approx_h1_err: float
    hminus1_err: float
    cg_iters: int
    seconds: float
    subdivisions: int
    under_resolved: bool
    relative_residual: float


def fit_loglog_slope(eps: Sequence[float], errors: Sequence[float]) -> Optional[float]:
    """
    Least-squares slope of log(error) against log(ε); None with fewer than 3 usable points.
    """
    eps = np.asarray(eps, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if eps.size < 3 or np.any(errors <= 0):
        return None
    slope, _ = np.polyfit(np.log(eps), np.log(errors), 1)
    return float(slope)


def pairwise_slopes(eps: Sequence[float], errors: Sequence[float]) -> List[float]:
    """
    Slope between each row and the previous one; the first entry is nan.
    """
    slopes = [math.nan]
    for i in range(1, len(eps)):
        if errors[i] > 0 and errors[i - 1] > 0:
            slopes.append(math.log(errors[i] / errors[i - 1]) / math.log(eps[i] / eps[i - 1]))
        else:
            slopes.append(math.nan)
    return slopes


@dataclass(frozen=True)
class AcceptanceThresholds:
    """
    Pass/fail bounds for the fitted slopes; None disables a bound.
    """
    min_slope_h1: Optional[float] = 0.4
    max_slope_h1: Optional[float] = 1.2
    min_slope_l2: Optional[float] = 0.4
    require_pairwise_positive: bool = False
    strict_min_h1: bool = False

    @classmethod
    def for_shape(cls, shape: str) -> "AcceptanceThresholds":
        if shape == "l_shape":
            return cls(min_slope_h1=0.2, max_slope_h1=None, min_slope_l2=None, require_pairwise_positive=True,
                       strict_min_h1=True)
        return cls()


@dataclass
class StudyReport:
    """
    Rows of an error study, ordered from coarse to fine ε, with fitted slopes and flags.

    Attributes:
        rows: One StudyRow per ε.
        alpha: Cutoff exponent used for the approximation.
        tensor: The homogenized matrix.
        thresholds: Acceptance bounds.
        reference_scale: ||∇Φ||, the scale against which errors count as noise.
        noise_floor: Relative error size below which the study is degenerate.
    """
    rows: List[StudyRow]
    alpha: float
    tensor: np.ndarray
    thresholds: AcceptanceThresholds = field(default_factory=AcceptanceThresholds)
    reference_scale: float = 1.0
    noise_floor: float = 1e-8

    def column(self, name: str) -> List[float]:
        return [getattr(row, name) for row in self.rows]

    @property
    def degenerate(self) -> bool:
        largest = max(max(self.column("h1_plain_err")), max(self.column("h1_corr_err")), max(self.column("l2_err")))
        return largest <= self.noise_floor * max(self.reference_scale, 1.0)

    def slopes(self) -> Dict[str, Optional[float]]:
        if self.degenerate:
            return {"l2": None, "h1": None, "h1_plain": None}
        eps = self.column("eps")
        return {"l2": fit_loglog_slope(eps, self.column("l2_err")),
                "h1": fit_loglog_slope(eps, self.column("h1_corr_err")),
                "h1_plain": fit_loglog_slope(eps, self.column("h1_plain_err"))}

    def passed(self) -> Dict[str, bool]:
        if self.degenerate:
            return {"degenerate": True}
        slopes = self.slopes()
        limits = self.thresholds
        flags: Dict[str, bool] = {}
        if limits.min_slope_h1 is not None:
            h1 = slopes["h1"]
            if h1 is None:
                flags["slope_h1_min"] = False
            elif limits.strict_min_h1:
                flags["slope_h1_min"] = h1 > limits.min_slope_h1
            else:
                flags["slope_h1_min"] = h1 >= limits.min_slope_h1
        if limits.max_slope_h1 is not None:
            flags["slope_h1_max"] = slopes["h1"] is not None and slopes["h1"] <= limits.max_slope_h1
        if limits.min_slope_l2 is not None:
            flags["slope_l2_min"] = slopes["l2"] is not None and slopes["l2"] >= limits.min_slope_l2
        if limits.require_pairwise_positive:
            pairs = pairwise_slopes(self.column("eps"), self.column("h1_corr_err"))[1:]
            flags["pairwise_h1_positive"] = all(p > 0 for p in pairs)
        return flags

    @property
    def all_passed(self) -> bool:
        return all(self.passed().values())

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame([asdict(row) for row in self.rows])
        eps = self.column("eps")
        frame["slope_l2"] = pairwise_slopes(eps, self.column("l2_err"))
        frame["slope_h1"] = pairwise_slopes(eps, self.column("h1_corr_err"))
        return frame[CSV_COLUMNS]

    def diagnostics_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(row) for row in self.rows])[DIAGNOSTIC_COLUMNS]

    def summary(self) -> Dict:
        return {
            "alpha": self.alpha,
            "tensor": np.asarray(self.tensor).tolist(),
            "slopes": self.slopes(),
            "degenerate": self.degenerate,
            "passed": self.passed(),
            "all_passed": self.all_passed,
            "thresholds": asdict(self.thresholds),
            "timing_columns": list(TIMING_COLUMNS),
        }
