"""Synthetic two-strata data with known truth, and a weighted logistic scorer.

Records fall in stratum 1 when feature 1 is negative and stratum 2
otherwise. Within a stratum the remaining features are Gaussian and the
true log-odds may carry squared terms, so a linear scorer can be
mis-specified on purpose. The training sample is thinned per stratum and
class, which is the stratified sampling bias the calibrator undoes.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from rocrecal.errors import DimensionMismatch, EmptyClassAfterSampling, InfeasibleSpec

STRATUM_IDS = (1, 2)
_MIN_CELL = 5


@dataclass(frozen=True)
class StratumSpec:
    """Feature law, true model and training sampling rates for one stratum.

    Feature 1 is ``sign * |N(mean[0], scale[0])|`` with the sign fixed by the
    stratum; the others are independent ``N(mean[k], scale[k])``.
    """

    share: float
    mean: tuple[float, ...]
    scale: tuple[float, ...]
    intercept: float
    coef: tuple[float, ...]
    quad: tuple[float, ...]
    rate_pos: float = 1.0
    rate_neg: float = 1.0

    def logit(self, x: NDArray) -> NDArray:
        return self.intercept + x @ np.asarray(self.coef) + (x * x) @ np.asarray(self.quad)


@dataclass(frozen=True)
class SyntheticSpec:
    d: int
    strata: tuple[StratumSpec, StratumSpec]
    n_train: int = 8000
    n_test: int = 8000
    seed: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise InfeasibleSpec("d must be >= 1")
        if len(self.strata) != 2:
            raise InfeasibleSpec("exactly two strata (sign of feature 1) are supported")
        for st in self.strata:
            for name in ("mean", "scale", "coef", "quad"):
                if len(getattr(st, name)) != self.d:
                    raise InfeasibleSpec(f"stratum {name} must have length d={self.d}")
            if not (0 < st.rate_pos <= 1 and 0 < st.rate_neg <= 1):
                raise InfeasibleSpec("sampling rates must lie in (0, 1]")
            if not st.share > 0:
                raise InfeasibleSpec("stratum share must be positive")
            if any(s <= 0 for s in st.scale):
                raise InfeasibleSpec("feature scales must be positive")

    @property
    def shares(self) -> NDArray:
        s = np.array([st.share for st in self.strata])
        return s / s.sum()

    @property
    def misspecified(self) -> bool:
        return any(any(q != 0 for q in st.quad) for st in self.strata)

    def with_seed(self, seed: int) -> "SyntheticSpec":
        return replace(self, seed=seed)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix plus labels, true strata and inverse-sampling weights."""

    features: NDArray[np.float64]
    labels: NDArray[np.int64]
    strata: NDArray[np.int64]
    weights: NDArray[np.float64]

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, idx) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx], self.strata[idx], self.weights[idx])


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _draw_stratum(st: StratumSpec, sign: float, n: int, rng: np.random.Generator) -> NDArray:
    mean = np.asarray(st.mean)
    scale = np.asarray(st.scale)
    x = rng.normal(mean, scale, size=(n, len(mean)))
    x[:, 0] = sign * np.abs(x[:, 0])
    return x


def _draw_population(spec: SyntheticSpec, n: int, rng: np.random.Generator) -> Dataset:
    counts = rng.multinomial(n, spec.shares)
    feats, labels, strata = [], [], []
    for g, st, m in zip(STRATUM_IDS, spec.strata, counts):
        x = _draw_stratum(st, -1.0 if g == 1 else 1.0, int(m), rng)
        y = (rng.random(int(m)) < _sigmoid(st.logit(x))).astype(np.int64)
        feats.append(x)
        labels.append(y)
        strata.append(np.full(int(m), g, dtype=np.int64))
    x = np.concatenate(feats)
    y = np.concatenate(labels)
    g = np.concatenate(strata)
    # interleave strata so row order carries no information
    perm = rng.permutation(n)
    return Dataset(x[perm], y[perm], g[perm], np.ones(n))


def stratum_positive_rates(spec: SyntheticSpec, n: int = 200_000, seed: int = 12345) -> NDArray:
    """Monte Carlo estimate of P(y=1 | stratum) under the unbiased law."""
    rng = np.random.default_rng(seed)
    out = []
    for g, st in zip(STRATUM_IDS, spec.strata):
        x = _draw_stratum(st, -1.0 if g == 1 else 1.0, n, rng)
        out.append(float(_sigmoid(st.logit(x)).mean()))
    return np.array(out)


def check_feasible(spec: SyntheticSpec) -> None:
    rates = stratum_positive_rates(spec, n=20_000)
    for g, st, share, p in zip(STRATUM_IDS, spec.strata, spec.shares, rates):
        cells = {
            ("train", 1): spec.n_train * share * p * st.rate_pos,
            ("train", 0): spec.n_train * share * (1 - p) * st.rate_neg,
            ("test", 1): spec.n_test * share * p,
            ("test", 0): spec.n_test * share * (1 - p),
        }
        for (part, y), expected in cells.items():
            if expected < _MIN_CELL:
                raise InfeasibleSpec(
                    f"stratum {g} {part} class {y}: expected count {expected:.1f} < {_MIN_CELL}"
                )


def generate(spec: SyntheticSpec, check: bool = True) -> tuple[Dataset, Dataset]:
    """Draw ``(train, test)``.

    The test set follows the unbiased law. The training set is drawn from the
    same law and then thinned with per-stratum, per-class keep rates; its
    ``weights`` hold the inverse keep rate of each record.
    """
    if check:
        check_feasible(spec)
    train_ss, test_ss = np.random.SeedSequence(spec.seed).spawn(2)
    test = _draw_population(spec, spec.n_test, np.random.default_rng(test_ss))
    rng = np.random.default_rng(train_ss)
    full = _draw_population(spec, spec.n_train, rng)
    rates = np.empty(len(full))
    for g, st in zip(STRATUM_IDS, spec.strata):
        in_g = full.strata == g
        rates[in_g] = np.where(full.labels[in_g] == 1, st.rate_pos, st.rate_neg)
    keep = rng.random(len(full)) < rates
    train = full.subset(keep)
    train = Dataset(train.features, train.labels, train.strata, 1.0 / rates[keep])
    return train, test


# -- logistic scorer -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ScoreModel:
    coef: NDArray[np.float64]
    intercept: float
    class_weights: tuple[float, float] = (1.0, 1.0)
    l2: float = 0.0
    epochs: int = 0
    grad_norm: float = float("nan")
    undersample: Optional[float] = None
    meta: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.grad_norm <= 1e-6


def logistic_objective(
    params: NDArray, x: NDArray, y: NDArray, w: NDArray, l2: float
) -> tuple[float, NDArray]:
    """Weighted mean logistic loss plus ``l2/2 |coef|^2`` and its gradient.

    ``params`` is ``[intercept, coef...]``; the intercept is not penalised.
    """
    z = params[0] + x @ params[1:]
    total = w.sum()
    # log(1 + e^z) - y z, computed stably
    loss = float(np.sum(w * (np.logaddexp(0.0, z) - y * z)) / total)
    loss += 0.5 * l2 * float(params[1:] @ params[1:])
    r = w * (_sigmoid(z) - y) / total
    grad = np.empty_like(params)
    grad[0] = r.sum()
    grad[1:] = x.T @ r + l2 * params[1:]
    return loss, grad


def undersample_majority(
    y: NDArray, keep_rate: float, rng: np.random.Generator
) -> NDArray[np.intp]:
    """Indices kept after sampling the majority class down to ``keep_rate``."""
    if not 0 < keep_rate <= 1:
        raise ValueError("keep rate must lie in (0, 1]")
    n_pos = int(np.sum(y == 1))
    majority = 1 if n_pos > len(y) - n_pos else 0
    maj = np.flatnonzero(y == majority)
    mino = np.flatnonzero(y != majority)
    n_keep = max(1, int(round(keep_rate * len(maj)))) if len(maj) else 0
    kept = rng.choice(maj, size=n_keep, replace=False) if n_keep else maj
    return np.sort(np.concatenate([mino, kept]))


def fit_logistic(
    x: ArrayLike,
    y: ArrayLike,
    class_weights: Sequence[float] = (1.0, 1.0),
    undersample: Optional[float] = None,
    l2: float = 1e-4,
    epochs: int = 3000,
    lr: float = 0.5,
    seed: int = 0,
    tol: float = 1e-6,
    sample_weight: Optional[ArrayLike] = None,
) -> ScoreModel:
    """Full-batch gradient descent on weighted, L2-penalised logistic loss.

    ``class_weights`` is ``(w0, w1)``. ``undersample`` keeps that fraction of
    the majority class, drawn with ``seed``, before fitting. Stops when the
    gradient max-norm drops to ``tol`` or after ``epochs`` steps.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] != len(y):
        raise DimensionMismatch("x and y must have the same number of rows")
    w = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, dtype=np.float64)
    if undersample is not None:
        keep = undersample_majority(y, undersample, np.random.default_rng(seed))
        x, y, w = x[keep], y[keep], w[keep]
    if not (np.any(y == 1) and np.any(y == 0)):
        raise EmptyClassAfterSampling("both classes must remain after under-sampling")
    w0, w1 = (float(c) for c in class_weights)
    w = w * np.where(y == 1, w1, w0)

    params = np.zeros(x.shape[1] + 1)
    gnorm = np.inf
    step = 0
    for step in range(1, epochs + 1):
        _, grad = logistic_objective(params, x, y, w, l2)
        gnorm = float(np.max(np.abs(grad)))
        if gnorm <= tol:
            step -= 1
            break
        params -= lr * grad
    else:
        gnorm = float(np.max(np.abs(logistic_objective(params, x, y, w, l2)[1])))
    return ScoreModel(
        coef=params[1:].copy(),
        intercept=float(params[0]),
        class_weights=(w0, w1),
        l2=l2,
        epochs=step,
        grad_norm=gnorm,
        undersample=undersample,
    )


def predict(model: ScoreModel, x: ArrayLike) -> NDArray[np.float64] | float:
    """Linear (pre-sigmoid) score; rows if ``x`` is 2-D."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != len(model.coef):
        raise DimensionMismatch(f"expected {len(model.coef)} features, got {x.shape[-1]}")
    out = model.intercept + x @ model.coef
    return float(out) if out.ndim == 0 else out
