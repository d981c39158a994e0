"""Ground truth for optimal rankings.

On a finite sample space with known ``p(y=1 | x)`` the best achievable ROC
curve can be found by trying every ordering of the points. Ranking by the
odds ratio ``p(1|x) p(0) / (p(0|x) p(1))`` should attain it. For binormal
scores the ROC slope is available in closed form.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from rocrecal.errors import DegeneratePrior, TooLarge

MAX_ENUMERATION = 8


@dataclass(frozen=True)
class DiscretePoint:
    id: int
    mass: float
    p1: float

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        if not 0 < self.p1 < 1:
            raise ValueError("p1 must lie strictly inside (0, 1)")


def make_points(masses: Sequence[float], p1: Sequence[float]) -> list[DiscretePoint]:
    """Points with masses normalised to sum to one."""
    masses = np.asarray(masses, dtype=np.float64)
    masses = masses / masses.sum()
    return [DiscretePoint(i, float(m), float(p)) for i, (m, p) in enumerate(zip(masses, p1))]


def _masses(points: Sequence[DiscretePoint]) -> tuple[NDArray, NDArray]:
    mass = np.array([p.mass for p in points])
    p1 = np.array([p.p1 for p in points])
    if abs(mass.sum() - 1.0) > 1e-12:
        raise ValueError("point masses must sum to 1")
    return mass * p1, mass * (1.0 - p1)


def odds_ratio_rank(points: Sequence[DiscretePoint]) -> NDArray[np.float64]:
    """``p(1|x) p_Y(0) / (p(0|x) p_Y(1))`` for each point."""
    pos, neg = _masses(points)
    prior = pos.sum()
    if not 0 < prior < 1:
        raise DegeneratePrior(f"marginal positive rate {prior} outside (0, 1)")
    p1 = np.array([p.p1 for p in points])
    return p1 * (1.0 - prior) / ((1.0 - p1) * prior)


def ranking_roc(points: Sequence[DiscretePoint], values: Sequence[float]) -> NDArray[np.float64]:
    """ROC vertices ``(fpr, tpr)`` from ranking points by ``values`` (descending).

    Points with equal values are released together.
    """
    pos, neg = _masses(points)
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(-values, kind="stable")
    v = values[order]
    ends = np.flatnonzero(np.r_[v[1:] != v[:-1], True])
    tpr = np.r_[0.0, np.cumsum(pos[order])[ends] / pos.sum()]
    fpr = np.r_[0.0, np.cumsum(neg[order])[ends] / neg.sum()]
    return np.column_stack([fpr, tpr])


def brute_force_envelope(points: Sequence[DiscretePoint]) -> NDArray[np.float64]:
    """Pointwise-best TPR over all orderings, at every achievable FPR.

    Every ordering's curve is the polyline through its cumulative-mass
    vertices. The envelope is returned as ``(fpr, tpr)`` rows sorted by FPR,
    one row per distinct FPR any ordering passes through.
    """
    k = len(points)
    if k > MAX_ENUMERATION:
        raise TooLarge(f"enumeration limited to {MAX_ENUMERATION} points, got {k}")
    pos, neg = _masses(points)
    pos = pos / pos.sum()
    neg = neg / neg.sum()

    perms = np.array(list(itertools.permutations(range(k))), dtype=np.intp)
    cum_fpr = np.concatenate([np.zeros((len(perms), 1)), np.cumsum(neg[perms], axis=1)], axis=1)
    cum_tpr = np.concatenate([np.zeros((len(perms), 1)), np.cumsum(pos[perms], axis=1)], axis=1)
    cum_fpr[:, -1] = 1.0
    cum_tpr[:, -1] = 1.0
    grid = np.unique(cum_fpr)

    best = np.zeros_like(grid)
    for fx, ty in zip(cum_fpr, cum_tpr):
        np.maximum(best, np.interp(grid, fx, ty), out=best)
    return np.column_stack([grid, best])


def binormal_slope(mu: float, fpr: float) -> float:
    """ROC slope for scores N(mu, 1) vs N(0, 1) at the given FPR.

    Equals the density ratio at the threshold ``eta`` with upper-tail
    probability ``fpr``: ``exp(mu * eta - mu**2 / 2)``.
    """
    if not mu > 0:
        raise ValueError("mu must be positive")
    if not 0 < fpr < 1:
        raise ValueError("fpr must lie strictly inside (0, 1)")
    eta = -NormalDist().inv_cdf(fpr)
    return math.exp(mu * eta - mu * mu / 2.0)
