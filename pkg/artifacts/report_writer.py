import json
import logging
import os
import platform
from typing import Any, Dict, Mapping

import numpy as np
import pandas as pd
import scipy

from cell.corrector_set import HomogenizedTensor
from homog.study_report import StudyReport
from unfold.estimates_manager import EstimatesReport

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12e"


def versions() -> Dict[str, str]:
    return {"python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "pandas": pd.__version__}


def _plain(value: Any) -> Any:
    """
    Converts numpy scalars and arrays, and non-finite floats, into JSON-safe values.
    """
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def write_json(path: str, payload: Mapping[str, Any]) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_plain(dict(payload)), f, indent=2, sort_keys=True)
        f.write("\n")


def write_frame(path: str, frame: pd.DataFrame) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)


def write_study(out_dir: str, report: StudyReport, config: Mapping[str, Any]) -> Dict[str, Any]:
    """
    Writes errors.csv, diagnostics.csv and summary.json for an error study.

    Returns:
        The summary payload.
    """
    write_frame(os.path.join(out_dir, "errors.csv"), report.to_frame())
    write_frame(os.path.join(out_dir, "diagnostics.csv"), report.diagnostics_frame())
    summary = {"command": "study", "config": config, "versions": versions(), "seed": config.get("seed"),
               **report.summary()}
    write_json(os.path.join(out_dir, "summary.json"), summary)
    logger.info("Study artifacts written to %s", out_dir)
    return summary


def write_tensor(out_dir: str, tensor: HomogenizedTensor, extras: Mapping[str, Any]) -> Dict[str, Any]:
    payload = {**tensor.to_dict(), **extras, "versions": versions()}
    write_json(os.path.join(out_dir, "tensor.json"), payload)
    return payload


def write_defect(out_dir: str, row: Mapping[str, float], source: str) -> pd.DataFrame:
    frame = pd.DataFrame([{"field": source, **row}])
    write_frame(os.path.join(out_dir, "defect.csv"), frame)
    return frame


def write_estimates(out_dir: str, report: EstimatesReport, config: Mapping[str, Any]) -> Dict[str, Any]:
    write_frame(os.path.join(out_dir, "twoscale.csv"), report.frame)
    summary = {"command": "twoscale", "config": config, "versions": versions(), "seed": config.get("seed"),
               "spreads": report.spreads, "product_bound": report.product_bound,
               "passed": report.passed, "all_passed": all(report.passed.values())}
    write_json(os.path.join(out_dir, "summary.json"), summary)
    logger.info("Operator estimate artifacts written to %s", out_dir)
    return summary
