"""Cross-strata ranking calibration.

Each stratum gets its own ROC curve, smoothed slope function and
conditional odds. A record with raw score ``s`` in stratum ``g`` is ranked
by::

    rank_value = odds[g] * slope[g](fpr[g](s))

i.e. the likelihood ratio of (score, label) within the stratum, rescaled to
the class balance of the scoring population. Within a stratum a
nonincreasing slope keeps the raw-score order intact; only the interleaving
across strata changes.

A within-stratum probability baseline (isotonic calibration followed by a
prior correction) is provided for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from rocrecal.errors import (
    InputError,
    LengthMismatch,
    NumericalError,
    TooFewPoints,
    UnknownStratum,
    ZeroNegatives,
    ZeroPositives,
    with_stratum,
)
from rocrecal.roc import RocCurve, ScoredRecord, _interp_monotone, roc_curve, score_to_fpr_array
from rocrecal.smoothing import (
    DEFAULT_FLOOR,
    DEFAULT_MIN_NEIGHBORS,
    DEFAULT_SPAN,
    SlopeFunction,
    eval_slope_array,
    fit_slope_function,
    isotonic_fit,
)


@dataclass(frozen=True)
class CalibratorConfig:
    span: float = DEFAULT_SPAN
    min_neighbors: int = DEFAULT_MIN_NEIGHBORS
    monotone: bool = True
    floor: float = DEFAULT_FLOOR
    laplace: bool = False


@dataclass(frozen=True)
class StratumCalibration:
    roc: RocCurve
    slope: SlopeFunction
    odds: float
    n_pos: int
    n_neg: int


@dataclass(frozen=True)
class StrataCalibrator:
    """Fitted per-stratum components plus the configuration that made them."""

    strata: Mapping[int, StratumCalibration]
    config: CalibratorConfig = field(default_factory=CalibratorConfig)

    def __post_init__(self):
        for g, comp in self.strata.items():
            if not (np.isfinite(comp.odds) and comp.odds > 0):
                raise NumericalError(f"stratum {g}: odds must be positive and finite")

    @property
    def stratum_ids(self) -> list[int]:
        return sorted(self.strata)

    def __getitem__(self, stratum: int) -> StratumCalibration:
        try:
            return self.strata[stratum]
        except KeyError:
            raise UnknownStratum(stratum) from None


@dataclass(frozen=True)
class CalibratedScore:
    index: int
    stratum: int
    raw_score: float
    fpr: float
    rank_value: float


def estimate_odds(
    labels: ArrayLike, weights: Optional[ArrayLike] = None, laplace: bool = False
) -> float:
    """Weighted positive-to-negative odds; ``laplace`` adds 0.5 to each side."""
    y = np.asarray(labels, dtype=np.float64)
    if y.ndim != 1 or len(y) == 0:
        raise InputError("labels must be a nonempty 1-D sequence")
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != y.shape:
        raise LengthMismatch("weights must match labels")
    pos = float(np.sum(w * y))
    neg = float(np.sum(w * (1.0 - y)))
    if laplace:
        return (pos + 0.5) / (neg + 0.5)
    if neg <= 0:
        raise ZeroNegatives("no negative records to estimate odds")
    if pos <= 0:
        raise ZeroPositives("no positive records to estimate odds")
    return pos / neg


def _split_by_stratum(strata: NDArray) -> dict[int, NDArray[np.intp]]:
    return {int(g): np.flatnonzero(strata == g) for g in np.unique(strata)}


def _as_arrays(records: Iterable[ScoredRecord]):
    records = list(records)
    scores = np.array([r.score for r in records], dtype=np.float64)
    labels = np.array([r.label for r in records], dtype=object)
    strata = np.array([r.stratum for r in records], dtype=np.int64)
    weights = np.array([r.weight for r in records], dtype=np.float64)
    return scores, labels, strata, weights


def fit_stratum(
    scores: NDArray,
    labels: NDArray,
    weights: Optional[NDArray],
    cfg: CalibratorConfig,
    target_odds: Optional[float] = None,
) -> StratumCalibration:
    if len(np.unique(scores)) < 4:
        raise TooFewPoints("calibration needs >= 4 distinct scores per stratum")
    roc = roc_curve(scores, labels, weights)
    slope = fit_slope_function(
        roc, span=cfg.span, min_neighbors=cfg.min_neighbors, monotone=cfg.monotone, floor=cfg.floor
    )
    y = np.asarray(labels, dtype=np.float64)
    odds = estimate_odds(y, weights, cfg.laplace) if target_odds is None else float(target_odds)
    n_pos = int(np.sum(y == 1))
    return StratumCalibration(roc, slope, odds, n_pos, len(y) - n_pos)


def fit_calibrator_arrays(
    scores: ArrayLike,
    labels: ArrayLike,
    strata: ArrayLike,
    weights: Optional[ArrayLike] = None,
    cfg: CalibratorConfig = CalibratorConfig(),
    target_odds: Optional[Mapping[int, float]] = None,
) -> StrataCalibrator:
    """Array form of :func:`fit_calibrator`."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    strata = np.asarray(strata, dtype=np.int64)
    if weights is not None:
        weights = np.asarray(weights, dtype=np.float64)
    if not (scores.shape == labels.shape == strata.shape):
        raise LengthMismatch("scores, labels and strata must have equal length")
    target_odds = target_odds or {}
    fitted = {}
    for g, idx in _split_by_stratum(strata).items():
        try:
            fitted[g] = fit_stratum(
                scores[idx],
                labels[idx],
                None if weights is None else weights[idx],
                cfg,
                target_odds.get(g),
            )
        except (InputError, NumericalError) as err:
            raise with_stratum(err, g) from err
    return StrataCalibrator(fitted, cfg)


def fit_calibrator(
    records: Iterable[ScoredRecord],
    cfg: CalibratorConfig = CalibratorConfig(),
    target_odds: Optional[Mapping[int, float]] = None,
) -> StrataCalibrator:
    """Fit per-stratum ROC, slope and odds from labeled calibration records.

    ``target_odds`` overrides the odds of selected strata, for when the
    calibration labels do not reflect the class balance of the scoring
    population. Strata are fit independently of each other.
    """
    scores, labels, strata, weights = _as_arrays(records)
    return fit_calibrator_arrays(scores, labels, strata, weights, cfg, target_odds)


def apply_arrays(
    cal: StrataCalibrator, scores: ArrayLike, strata: ArrayLike
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Return ``(fpr, rank_value)`` for every record, in input order."""
    scores = np.asarray(scores, dtype=np.float64)
    strata = np.asarray(strata, dtype=np.int64)
    if scores.shape != strata.shape:
        raise LengthMismatch("scores and strata must have equal length")
    fpr = np.empty_like(scores)
    rank = np.empty_like(scores)
    for g, idx in _split_by_stratum(strata).items():
        comp = cal[g]
        f = score_to_fpr_array(comp.roc, scores[idx])
        fpr[idx] = f
        rank[idx] = comp.odds * eval_slope_array(comp.slope, f)
    return fpr, rank


def apply_calibrator(
    cal: StrataCalibrator, records: Sequence[ScoredRecord]
) -> list[CalibratedScore]:
    """Calibrated rank values, one per record, in input order. Labels are ignored."""
    records = list(records)
    scores = np.array([r.score for r in records], dtype=np.float64)
    strata = np.array([r.stratum for r in records], dtype=np.int64)
    fpr, rank = apply_arrays(cal, scores, strata)
    return [
        CalibratedScore(i, int(g), float(s), float(f), float(r))
        for i, (g, s, f, r) in enumerate(zip(strata, scores, fpr, rank))
    ]


def ranking_order(rank_values: ArrayLike, strata: ArrayLike) -> NDArray[np.intp]:
    """Indices sorted by descending rank value, ties by (stratum, input index)."""
    rank_values = np.asarray(rank_values, dtype=np.float64)
    strata = np.asarray(strata, dtype=np.int64)
    index = np.arange(len(rank_values))
    return np.lexsort((index, strata, -rank_values))


def rank_calibrated(scores: Sequence[CalibratedScore]) -> list[CalibratedScore]:
    order = ranking_order([c.rank_value for c in scores], [c.stratum for c in scores])
    by_index = sorted(scores, key=lambda c: c.index)
    return [by_index[i] for i in order]


# -- within-stratum probability baseline -------------------------------------------


@dataclass(frozen=True)
class StratumProbability:
    knot_score: NDArray[np.float64]
    knot_prob: NDArray[np.float64]
    train_odds: float
    target_odds: float


@dataclass(frozen=True)
class ProbabilityBaseline:
    strata: Mapping[int, StratumProbability]

    def __getitem__(self, stratum: int) -> StratumProbability:
        try:
            return self.strata[stratum]
        except KeyError:
            raise UnknownStratum(stratum) from None


def fit_probability_baseline(
    scores: ArrayLike,
    labels: ArrayLike,
    strata: ArrayLike,
    weights: Optional[ArrayLike] = None,
    target_odds: Optional[Mapping[int, float]] = None,
    laplace: bool = False,
) -> ProbabilityBaseline:
    """Isotonic P(y=1 | score) per stratum plus a prior correction to ``target_odds``."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    strata = np.asarray(strata, dtype=np.int64)
    w_all = np.ones_like(scores) if weights is None else np.asarray(weights, dtype=np.float64)
    target_odds = target_odds or {}
    fitted = {}
    for g, idx in _split_by_stratum(strata).items():
        try:
            s, y, w = scores[idx], labels[idx], w_all[idx]
            train_odds = estimate_odds(y, w, laplace)
            knots, inv = np.unique(s, return_inverse=True)
            wk = np.bincount(inv, weights=w)
            yk = np.bincount(inv, weights=w * y) / wk
            prob = isotonic_fit(knots, yk, wk, "increasing")
            fitted[g] = StratumProbability(
                knots, prob, train_odds, float(target_odds.get(g, train_odds))
            )
        except (InputError, NumericalError) as err:
            raise with_stratum(err, g) from err
    return ProbabilityBaseline(fitted)


def apply_probability_baseline(
    base: ProbabilityBaseline, scores: ArrayLike, strata: ArrayLike
) -> NDArray[np.float64]:
    """Prior-corrected probability per record, in input order."""
    scores = np.asarray(scores, dtype=np.float64)
    strata = np.asarray(strata, dtype=np.int64)
    out = np.empty_like(scores)
    for g, idx in _split_by_stratum(strata).items():
        comp = base[g]
        if len(comp.knot_score) == 1:
            p = np.full(len(idx), comp.knot_prob[0])
        else:
            p = _interp_monotone(scores[idx], comp.knot_score, comp.knot_prob)
        ratio = comp.target_odds / comp.train_odds
        # odds * ratio, mapped back to a probability without dividing by 1 - p
        out[idx] = p * ratio / (p * ratio + (1.0 - p))
    return out
