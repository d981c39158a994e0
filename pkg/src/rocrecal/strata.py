"""Strata from the first principal component of pooled features.

The pooled (train + test) feature matrix is centred, its top covariance
eigenvector found by power iteration, and the resulting projections cut
into ``J`` contiguous groups, either at zero (``sign``) or at empirical
quantiles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from rocrecal.errors import BadMode, DimensionMismatch, EmptyStratum, NonFinite, ZeroVariance

MAX_ITER = 10_000
ANGLE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class PcaAxis:
    mean: NDArray[np.float64]
    direction: NDArray[np.float64]
    eigenvalue: float
    iterations: int = 0

    def project(self, x: ArrayLike) -> NDArray[np.float64]:
        return project(self, x)


@dataclass(frozen=True, eq=False)
class StrataAssignment:
    """Thresholds ``c_1 < ... < c_J`` (``c_1 = -inf``) and 1-based stratum ids."""

    thresholds: NDArray[np.float64]
    strata: NDArray[np.int64]

    @property
    def n_strata(self) -> int:
        return len(self.thresholds)

    def assign(self, projections: ArrayLike) -> NDArray[np.int64]:
        return assign_strata(self.thresholds, projections)


def _canonical_sign(v: NDArray) -> NDArray:
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v


def fit_pca1(features: ArrayLike, max_iter: int = MAX_ITER, tol: float = ANGLE_TOL) -> PcaAxis:
    """Top principal axis of ``features`` (n x d) by power iteration."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 1:
        raise DimensionMismatch("need an n x d matrix with n >= 2, d >= 1")
    if not np.all(np.isfinite(x)):
        raise NonFinite("features must be finite")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = xc.T @ xc / (x.shape[0] - 1)
    scale = float(np.trace(cov))
    if not scale > 1e-300 or np.max(np.abs(cov)) <= 1e-14 * np.max(np.abs(x), initial=1.0) ** 2:
        raise ZeroVariance("pooled features have (numerically) zero variance")

    v = cov.sum(axis=0)
    if np.linalg.norm(v) <= 1e-12 * scale:
        # column sums cancel; start from the heaviest covariance column instead
        v = cov[:, int(np.argmax(np.linalg.norm(cov, axis=0)))].copy()
    v = _canonical_sign(v / np.linalg.norm(v))

    it = 0
    for it in range(1, max_iter + 1):
        w = cov @ v
        norm = np.linalg.norm(w)
        if norm == 0:
            raise ZeroVariance("power iteration collapsed to zero")
        w = _canonical_sign(w / norm)
        # angle between successive unit vectors
        gap = 2.0 * np.arcsin(min(1.0, np.linalg.norm(w - v) / 2.0))
        v = w
        if gap < tol:
            break
    return PcaAxis(mean, v, float(max(v @ cov @ v, 0.0)), it)


def project(axis: PcaAxis, x: ArrayLike) -> NDArray[np.float64] | float:
    """Principal-component score ``direction . (x - mean)``; rows if ``x`` is 2-D."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != len(axis.mean):
        raise DimensionMismatch(f"expected {len(axis.mean)} features, got {x.shape[-1]}")
    out = (x - axis.mean) @ axis.direction
    return float(out) if out.ndim == 0 else out


def assign_strata(thresholds: ArrayLike, projections: ArrayLike) -> NDArray[np.int64]:
    thresholds = np.asarray(thresholds, dtype=np.float64)
    projections = np.asarray(projections, dtype=np.float64)
    return np.searchsorted(thresholds[1:], projections, side="right").astype(np.int64) + 1


def make_strata(projections: ArrayLike, j: int, mode: str = "quantile") -> StrataAssignment:
    """Cut projections into ``j`` strata.

    ``sign`` needs ``j == 2`` and splits at zero. ``quantile`` puts the cut
    for stratum ``k`` at the order statistic of rank ``floor((k-1) n / j)``,
    so records tied with a cut go to the upper stratum.
    """
    s = np.asarray(projections, dtype=np.float64)
    if not np.all(np.isfinite(s)):
        raise NonFinite("projections must be finite")
    n = len(s)
    if j < 2:
        raise BadMode("need at least 2 strata")
    if n < j:
        raise EmptyStratum(f"cannot form {j} strata from {n} records")
    if mode == "sign":
        if j != 2:
            raise BadMode("sign mode requires exactly 2 strata")
        thresholds = np.array([-np.inf, 0.0])
    elif mode == "quantile":
        ordered = np.sort(s)
        cuts = ordered[[(k * n) // j for k in range(1, j)]]
        thresholds = np.r_[-np.inf, cuts]
    else:
        raise BadMode(f"unknown strata mode {mode!r}")
    strata = assign_strata(thresholds, s)
    if mode == "quantile":
        counts = np.bincount(strata, minlength=j + 1)[1:]
        if np.any(counts == 0) or np.any(np.diff(thresholds[1:]) <= 0):
            raise EmptyStratum("quantile cuts collapse onto tied projections")
    return StrataAssignment(thresholds, strata)
