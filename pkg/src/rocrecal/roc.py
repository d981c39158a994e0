"""Empirical ROC curves, AUC, score-to-FPR maps and dominance checks.

Tied scores enter a curve atomically, so each distinct score value adds a
single (possibly diagonal) segment. Curves always carry both endpoints
(0, 0) and (1, 1); the first point's threshold is ``+inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray

from rocrecal.errors import EmptyClass, LengthMismatch, MissingLabel, NonFinite


@dataclass(frozen=True)
class ScoredRecord:
    """One observation: raw classifier score, optional label, stratum id."""

    score: float
    label: Optional[int] = None
    stratum: int = 0
    weight: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise NonFinite(f"score must be finite, got {self.score!r}")
        if not (self.weight > 0 and math.isfinite(self.weight)):
            raise ValueError(f"weight must be positive and finite, got {self.weight!r}")
        if self.label is not None and self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")
        if self.stratum < 0:
            raise ValueError(f"stratum must be nonnegative, got {self.stratum!r}")


@dataclass(frozen=True, eq=False)
class RocCurve:
    """Empirical ROC step curve.

    Attributes
    ----------
    thresholds : array
        ``+inf`` followed by the distinct scores in decreasing order.
    fpr, tpr : array
        Fraction of negative / positive weight scoring ``>=`` the threshold.
    pos_weight, neg_weight : float
        Total weight of each class.
    """

    thresholds: NDArray[np.float64]
    fpr: NDArray[np.float64]
    tpr: NDArray[np.float64]
    pos_weight: float
    neg_weight: float

    def __post_init__(self):
        n = len(self.thresholds)
        if not (len(self.fpr) == len(self.tpr) == n) or n < 2:
            raise LengthMismatch("thresholds, fpr and tpr must share one length >= 2")
        if self.pos_weight <= 0 or self.neg_weight <= 0:
            raise EmptyClass("both classes need positive total weight")
        for arr in (self.thresholds, self.fpr, self.tpr):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return len(self.thresholds)

    def __eq__(self, other):
        if not isinstance(other, RocCurve):
            return NotImplemented
        return (
            np.array_equal(self.thresholds, other.thresholds)
            and np.array_equal(self.fpr, other.fpr)
            and np.array_equal(self.tpr, other.tpr)
            and self.pos_weight == other.pos_weight
            and self.neg_weight == other.neg_weight
        )

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


def roc_curve(
    scores: ArrayLike, labels: ArrayLike, weights: Optional[ArrayLike] = None
) -> RocCurve:
    """Array form of :func:`compute_roc`."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.ndim != 1 or scores.shape != labels.shape:
        raise LengthMismatch("scores and labels must be 1-D and of equal length")
    if not np.all(np.isfinite(scores)):
        raise NonFinite("scores must be finite")
    if labels.dtype == object:
        if any(lab is None for lab in labels):
            raise MissingLabel("every record needs a label to build an ROC curve")
        labels = labels.astype(np.int64)
    if not np.all((labels == 0) | (labels == 1)):
        raise ValueError("labels must be 0 or 1")
    if weights is None:
        weights = np.ones_like(scores)
    else:
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != scores.shape:
            raise LengthMismatch("weights must match scores")
        if not np.all(weights > 0):
            raise ValueError("weights must be positive")

    pos = np.where(labels == 1, weights, 0.0)
    neg = np.where(labels == 0, weights, 0.0)
    pos_total = float(pos.sum())
    neg_total = float(neg.sum())
    if pos_total <= 0 or neg_total <= 0:
        raise EmptyClass("need at least one positive and one negative record")

    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    # last index of each run of tied scores
    ends = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    cum_pos = np.cumsum(pos[order])[ends]
    cum_neg = np.cumsum(neg[order])[ends]

    tpr = np.r_[0.0, cum_pos / pos_total]
    fpr = np.r_[0.0, cum_neg / neg_total]
    # pin the far endpoint exactly despite summation rounding
    tpr[-1] = 1.0
    fpr[-1] = 1.0
    np.minimum(tpr, 1.0, out=tpr)
    np.minimum(fpr, 1.0, out=fpr)
    thresholds = np.r_[np.inf, s[ends]]
    return RocCurve(thresholds, fpr, tpr, pos_total, neg_total)


def compute_roc(records: Iterable[ScoredRecord]) -> RocCurve:
    """Build the empirical ROC curve of labeled records."""
    records = list(records)
    for rec in records:
        if rec.label is None:
            raise MissingLabel("every record needs a label to build an ROC curve")
    return roc_curve(
        [r.score for r in records],
        [r.label for r in records],
        [r.weight for r in records],
    )


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under the curve's piecewise-linear interpolation."""
    dx = np.diff(curve.fpr)
    area = float(np.sum(dx * (curve.tpr[1:] + curve.tpr[:-1])) / 2.0)
    return min(max(area, 0.0), 1.0)


def auc_score(scores: ArrayLike, labels: ArrayLike, weights: Optional[ArrayLike] = None) -> float:
    return auc(roc_curve(scores, labels, weights))


def _interp_monotone(x, xp, fp):
    """Piecewise-linear interpolation, clamped per segment.

    ``xp`` increasing. Each interpolated value is clipped to the range of its
    segment's endpoint values, so a monotone ``fp`` gives a monotone result
    even under floating-point rounding.
    """
    x = np.asarray(x, dtype=np.float64)
    j = np.clip(np.searchsorted(xp, x, side="right") - 1, 0, len(xp) - 2)
    x0, x1 = xp[j], xp[j + 1]
    f0, f1 = fp[j], fp[j + 1]
    t = np.clip((x - x0) / (x1 - x0), 0.0, 1.0)
    out = f0 + t * (f1 - f0)
    return np.clip(out, np.minimum(f0, f1), np.maximum(f0, f1))


def score_to_fpr_array(curve: RocCurve, scores: ArrayLike) -> NDArray[np.float64]:
    """Vectorised :func:`score_to_fpr`."""
    scores = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise NonFinite("scores must be finite")
    # finite knots in increasing score order
    knots = curve.thresholds[1:][::-1]
    vals = curve.fpr[1:][::-1]
    if len(knots) == 1:
        out = np.where(scores > knots[0], 0.0, vals[0])
    else:
        out = _interp_monotone(scores, knots, vals)
        out = np.where(scores > knots[-1], 0.0, out)
        out = np.where(scores < knots[0], 1.0, out)
    return out


def score_to_fpr(curve: RocCurve, score: float) -> float:
    """FPR of the curve at an arbitrary score.

    Exact at thresholds, linear in score between adjacent thresholds, 0 above
    the largest and 1 below the smallest.
    """
    return float(score_to_fpr_array(curve, np.array([score]))[0])


def tpr_at(curve: RocCurve, fpr: ArrayLike) -> NDArray[np.float64]:
    """TPR at the given FPR levels by linear interpolation along the curve.

    On a vertical segment the upper TPR is used.
    """
    fx = curve.fpr
    # keep the last (highest-TPR) point of each run of equal FPR
    keep = np.r_[fx[1:] != fx[:-1], True]
    return np.interp(np.asarray(fpr, dtype=np.float64), fx[keep], curve.tpr[keep])


def dominates(a: RocCurve, b: RocCurve, grid_size: int = 101, tol: float = 0.0) -> bool:
    """True iff TPR_a >= TPR_b - tol on a uniform FPR grid over [0, 1]."""
    if grid_size < 1:
        raise ValueError("grid_size must be positive")
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    grid = np.linspace(0.0, 1.0, grid_size)
    return bool(np.all(tpr_at(a, grid) >= tpr_at(b, grid) - tol))

