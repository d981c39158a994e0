"""ROC slope estimation by local linear regression, plus isotonic regression.

The slope of an empirical ROC curve at FPR level ``a`` is taken as the
local-linear coefficient of a tricube-weighted regression of TPR on FPR over
the nearest curve points. Isotonic regression (pool adjacent violators)
optionally forces the fitted slopes to be nonincreasing in FPR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from numpy.typing import ArrayLike, NDArray

from rocrecal.errors import DegenerateWindow, LengthMismatch, NonFinite, TooFewPoints
from rocrecal.roc import RocCurve, _interp_monotone

DEFAULT_SPAN = 0.05
DEFAULT_MIN_NEIGHBORS = 10
DEFAULT_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class SlopeFunction:
    """Smoothed ROC slope as a function of FPR, linear between knots."""

    knot_fpr: NDArray[np.float64]
    knot_slope: NDArray[np.float64]
    floor: float = DEFAULT_FLOOR
    monotone: bool = True

    def __post_init__(self):
        if len(self.knot_fpr) != len(self.knot_slope) or len(self.knot_fpr) < 2:
            raise LengthMismatch("knot_fpr and knot_slope must share one length >= 2")
        if not self.floor > 0:
            raise ValueError("floor must be positive")
        if np.any(np.diff(self.knot_fpr) <= 0):
            raise ValueError("knot_fpr must be strictly increasing")
        if self.knot_fpr[0] != 0.0 or self.knot_fpr[-1] != 1.0:
            raise ValueError("knot_fpr must start at 0 and end at 1")
        if np.any(self.knot_slope < self.floor):
            raise ValueError("knot slopes must be >= floor")
        if self.monotone and np.any(np.diff(self.knot_slope) > 0):
            raise ValueError("monotone slope function must be nonincreasing in FPR")
        self.knot_fpr.setflags(write=False)
        self.knot_slope.setflags(write=False)

    def __eq__(self, other):
        if not isinstance(other, SlopeFunction):
            return NotImplemented
        return (
            np.array_equal(self.knot_fpr, other.knot_fpr)
            and np.array_equal(self.knot_slope, other.knot_slope)
            and self.floor == other.floor
            and self.monotone == other.monotone
        )

    def __call__(self, fpr):
        return eval_slope_array(self, fpr)


def eval_slope_array(sf: SlopeFunction, fpr: ArrayLike) -> NDArray[np.float64]:
    fpr = np.asarray(fpr, dtype=np.float64)
    if not np.all(np.isfinite(fpr)):
        raise NonFinite("fpr must be finite")
    out = _interp_monotone(fpr, sf.knot_fpr, sf.knot_slope)
    return np.maximum(out, sf.floor)


def eval_slope(sf: SlopeFunction, fpr: float) -> float:
    """Slope at one FPR level; constant beyond the outer knots, never below floor."""
    return float(eval_slope_array(sf, np.array([fpr]))[0])


def isotonic_fit(
    xs: ArrayLike,
    ys: ArrayLike,
    weights: ArrayLike | None = None,
    direction: str = "increasing",
) -> NDArray[np.float64]:
    """Weighted least-squares monotone fit by pool adjacent violators.

    Parameters
    ----------
    xs : array
        Strictly increasing abscissae (only their order matters).
    ys : array
        Responses.
    weights : array, optional
        Positive observation weights, default all ones.
    direction : {"increasing", "decreasing"}

    Returns
    -------
    array
        Fitted values, monotone in the requested direction.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    w = np.ones_like(ys) if weights is None else np.asarray(weights, dtype=np.float64)
    if not (xs.shape == ys.shape == w.shape) or ys.ndim != 1:
        raise LengthMismatch("xs, ys and weights must be 1-D and of equal length")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("xs must be strictly increasing")
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    if direction == "decreasing":
        return -_pav(-ys, w)
    if direction != "increasing":
        raise ValueError(f"direction must be 'increasing' or 'decreasing', got {direction!r}")
    return _pav(ys, w)


def _pav(ys: NDArray, w: NDArray) -> NDArray[np.float64]:
    means: list[float] = []
    wsum: list[float] = []
    sizes: list[int] = []
    for y, wi in zip(ys.tolist(), w.tolist()):
        m, ww, c = y, wi, 1
        while means and means[-1] > m:
            pw = wsum.pop()
            m = (means.pop() * pw + m * ww) / (pw + ww)
            ww += pw
            c += sizes.pop()
        means.append(m)
        wsum.append(ww)
        sizes.append(c)
    return np.repeat(np.array(means), sizes)


def _nearest_windows(x: NDArray, centers: NDArray, k: int) -> NDArray[np.intp]:
    """Start index of the length-k contiguous window of sorted ``x`` nearest each center."""
    n = len(x)
    if k >= n:
        return np.zeros(len(centers), dtype=np.intp)
    # x[lo] + x[lo+k-1] - 2c is nondecreasing in lo; the optimum sits where it turns >= 0
    pair_sum = x[: n - k + 1] + x[k - 1 :]
    lo = np.searchsorted(pair_sum, 2.0 * centers, side="left")
    lo = np.clip(lo, 0, n - k)
    prev = np.maximum(lo - 1, 0)

    def radius(start):
        return np.maximum(centers - x[start], x[start + k - 1] - centers)

    return np.where(radius(prev) < radius(lo), prev, lo)


def _secant_slope(x: NDArray, y: NDArray, lo: int, hi: int) -> float:
    n = len(x)
    while x[hi] <= x[lo]:
        if lo == 0 and hi == n - 1:
            raise DegenerateWindow("curve has no FPR spread")
        lo = max(lo - 1, 0)
        hi = min(hi + 1, n - 1)
    return float((y[hi] - y[lo]) / (x[hi] - x[lo]))


@njit(cache=True)
def _tricube_moments(x, y, centers, starts, k):
    m = len(centers)
    out = np.empty((5, m))
    for i in range(m):
        c = centers[i]
        lo = starts[i]
        h = max(c - x[lo], x[lo + k - 1] - c)
        sw = sx = sy = sxx = sxy = 0.0
        for j in range(lo, lo + k):
            dx = x[j] - c
            if h > 0.0:
                u = abs(dx) / h
                w = 1.0 - u * u * u
                w = w * w * w if w > 0.0 else 0.0
            else:
                w = 1.0
            wd = w * dx
            sw += w
            sx += wd
            sy += w * y[j]
            sxx += wd * dx
            sxy += wd * y[j]
        out[0, i] = sw
        out[1, i] = sx
        out[2, i] = sy
        out[3, i] = sxx
        out[4, i] = sxy
    return out


def local_linear_slopes(
    x: NDArray, y: NDArray, centers: NDArray, k: int
) -> NDArray[np.float64]:
    """Tricube-weighted local-linear slope of y on x at each center.

    ``x`` must be sorted nondecreasing. Each fit uses the ``k`` nearest
    points; a window whose weighted FPR spread vanishes falls back to the
    secant across the smallest enclosing window with distinct end FPRs.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    starts = _nearest_windows(x, centers, k)
    sw, sx, sy, sxx, sxy = _tricube_moments(x, y, centers, starts, k)
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = sxx - sx * sx / sw
        slope = (sxy - sx * sy / sw) / denom
    bad = ~(sw > 0) | ~(denom > 1e-10 * sxx) | ~np.isfinite(slope)
    for i in np.flatnonzero(bad):
        lo = int(starts[i])
        slope[i] = _secant_slope(x, y, lo, lo + k - 1)
    return slope


def fit_slope_function(
    curve: RocCurve,
    span: float = DEFAULT_SPAN,
    min_neighbors: int = DEFAULT_MIN_NEIGHBORS,
    monotone: bool = True,
    floor: float = DEFAULT_FLOOR,
) -> SlopeFunction:
    """Estimate the ROC slope at each distinct FPR of ``curve``."""
    if not 0 < span <= 1:
        raise ValueError("span must lie in (0, 1]")
    if min_neighbors < 1:
        raise ValueError("min_neighbors must be positive")
    if not floor > 0:
        raise ValueError("floor must be positive")
    x = np.asarray(curve.fpr, dtype=np.float64)
    y = np.asarray(curve.tpr, dtype=np.float64)
    n = len(x)
    if n < 4:
        raise TooFewPoints(f"slope estimation needs >= 4 curve points, got {n}")
    knots = np.unique(np.r_[0.0, x, 1.0])
    k = min(n, max(math.ceil(span * n), min_neighbors))
    slopes = np.maximum(local_linear_slopes(x, y, knots, k), floor)
    if monotone:
        slopes = np.maximum(isotonic_fit(knots, slopes, direction="decreasing"), floor)
    return SlopeFunction(knots, slopes, float(floor), bool(monotone))
