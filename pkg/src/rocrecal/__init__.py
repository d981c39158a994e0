"""Cross-strata ranking calibration of binary classifier scores."""

from rocrecal.calibrator import (
    CalibratedScore,
    CalibratorConfig,
    StrataCalibrator,
    apply_calibrator,
    estimate_odds,
    fit_calibrator,
)
from rocrecal.roc import RocCurve, ScoredRecord, auc, compute_roc, dominates, score_to_fpr
from rocrecal.smoothing import SlopeFunction, eval_slope, fit_slope_function, isotonic_fit
from rocrecal.strata import PcaAxis, StrataAssignment, fit_pca1, make_strata, project

__all__ = [
    "CalibratedScore",
    "CalibratorConfig",
    "PcaAxis",
    "RocCurve",
    "ScoredRecord",
    "SlopeFunction",
    "StrataAssignment",
    "StrataCalibrator",
    "apply_calibrator",
    "auc",
    "compute_roc",
    "dominates",
    "estimate_odds",
    "eval_slope",
    "fit_calibrator",
    "fit_pca1",
    "fit_slope_function",
    "isotonic_fit",
    "make_strata",
    "project",
    "score_to_fpr",
]

__version__ = "0.1.0"
