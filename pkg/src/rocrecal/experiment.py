"""Repeated synthetic experiments: raw vs calibrated vs baseline AUC.

One repetition:

1. draw a biased training set and an unbiased test set;
2. split the training set into a model-fitting part and a calibration part;
3. build strata, either the generator's own (``given-strata``) or from the
   sign / quantiles of the first principal component of the pooled train and
   test features (``pca-strata``);
4. fit one logistic scorer per stratum, with optional class weighting or
   majority under-sampling;
5. fit the calibrator on the calibration part, using inverse sampling-rate
   weights so that the odds reflect the unbiased population;
6. score the test features and only then open the test labels to compute
   AUCs.

``auc_raw`` ranks by the pooled per-stratum scores in ``given-strata`` mode
and by a single model fit on all strata in ``pca-strata`` mode.

Repetition ``r`` draws its randomness from
``numpy.random.SeedSequence([master_seed, r])``, so results do not depend on
how repetitions are spread over workers.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from rocrecal.calibrator import (
    CalibratorConfig,
    StrataCalibrator,
    apply_arrays,
    apply_probability_baseline,
    fit_calibrator_arrays,
    fit_probability_baseline,
)
from rocrecal.errors import BadMode, RocrecalError, with_context, with_stratum
from rocrecal.roc import RocCurve, auc, roc_curve
from rocrecal.strata import fit_pca1, make_strata, project
from rocrecal.synth import Dataset, ScoreModel, SyntheticSpec, fit_logistic, generate, predict

log = logging.getLogger(__name__)

MODES = ("given-strata", "pca-strata")
UNBALANCING = ("none", "weighting", "undersampling")


@dataclass(frozen=True)
class ExperimentConfig:
    spec: SyntheticSpec
    mode: str = "given-strata"
    strata_mode: str = "sign"
    n_strata: int = 2
    unbalancing: str = "weighting"
    class_weights: tuple[float, float] = (1.0, 10.0)
    undersample_rate: float = 0.1
    calib_fraction: float = 0.3
    calibrator: CalibratorConfig = field(default_factory=lambda: CalibratorConfig(laplace=True))
    l2: float = 1e-4
    epochs: int = 3000
    lr: float = 0.5
    reps: int = 50
    master_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise BadMode(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.unbalancing not in UNBALANCING:
            raise BadMode(f"unbalancing must be one of {UNBALANCING}, got {self.unbalancing!r}")
        if self.strata_mode not in ("sign", "quantile"):
            raise BadMode(f"strata_mode must be sign or quantile, got {self.strata_mode!r}")
        if not 0 < self.calib_fraction < 1:
            raise BadMode("calib_fraction must lie in (0, 1)")
        if self.reps < 1:
            raise BadMode("reps must be >= 1")


@dataclass(frozen=True)
class RepResult:
    rep: int
    seed: int
    auc_raw: float
    auc_calibrated: float
    auc_baseline: float
    strata_rows: tuple = ()
    curves: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class Summary:
    metric: str
    mean: float
    se: float


@dataclass(frozen=True)
class ExperimentReport:
    rows: tuple[RepResult, ...]

    @property
    def reps(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> NDArray[np.float64]:
        return np.array([getattr(r, name) for r in self.rows])

    def summary(self) -> list[Summary]:
        out = []
        for name in ("auc_raw", "auc_calibrated", "auc_baseline"):
            out.append(Summary(name, *_mean_se(self.column(name))))
        out.append(Summary("delta_calibrated_raw", *_mean_se(self.delta)))
        return out

    @property
    def delta(self) -> NDArray[np.float64]:
        return self.column("auc_calibrated") - self.column("auc_raw")

    @property
    def win_rate(self) -> float:
        return float(np.mean(self.delta > 0))


def _mean_se(x: NDArray) -> tuple[float, float]:
    mean = float(np.mean(x))
    se = float(np.std(x, ddof=1) / math.sqrt(len(x))) if len(x) > 1 else float("nan")
    return mean, se


def rep_seed(master_seed: int, rep: int) -> int:
    """Per-repetition seed: first 32-bit word of ``SeedSequence([master_seed, rep])``."""
    return int(np.random.SeedSequence([master_seed, rep]).generate_state(1)[0])


class SealedLabels:
    """Test labels that can only be used to grade finished score vectors."""

    def __init__(self, labels: NDArray):
        self._labels = np.asarray(labels)

    def __len__(self) -> int:
        return len(self._labels)

    def grade(self, scores: NDArray) -> tuple[float, RocCurve]:
        scores = np.asarray(scores, dtype=np.float64)
        if scores.shape != self._labels.shape:
            raise ValueError("score vector does not match the sealed test set")
        curve = roc_curve(scores, self._labels)
        return auc(curve), curve


def _fit_scorer(cfg: ExperimentConfig, data: Dataset, seed: int) -> ScoreModel:
    kwargs = dict(l2=cfg.l2, epochs=cfg.epochs, lr=cfg.lr, seed=seed)
    if cfg.unbalancing == "weighting":
        kwargs["class_weights"] = cfg.class_weights
    elif cfg.unbalancing == "undersampling":
        kwargs["undersample"] = cfg.undersample_rate
    return fit_logistic(data.features, data.labels, **kwargs)


@dataclass(frozen=True)
class ScoredTest:
    raw: NDArray[np.float64]
    calibrated: NDArray[np.float64]
    baseline: NDArray[np.float64]
    calibrator: StrataCalibrator
    strata_rows: tuple = ()


def fit_and_score(
    cfg: ExperimentConfig,
    train: Dataset,
    test_features: NDArray,
    test_strata: NDArray,
    seed: int,
) -> ScoredTest:
    """Everything up to the final test scores. Test labels are not an input."""
    rng = np.random.default_rng(seed)
    n = len(train)
    perm = rng.permutation(n)
    n_cal = int(round(cfg.calib_fraction * n))
    cal_part = train.subset(np.sort(perm[:n_cal]))
    fit_part = train.subset(np.sort(perm[n_cal:]))
    model_seeds = rng.integers(0, 2**31 - 1, size=64)

    strata_rows: tuple = ()
    if cfg.mode == "pca-strata":
        pooled = np.vstack([train.features, test_features])
        axis = fit_pca1(pooled)
        assignment = make_strata(project(axis, pooled), cfg.n_strata, cfg.strata_mode)
        fit_g = assignment.assign(project(axis, fit_part.features))
        cal_g = assignment.assign(project(axis, cal_part.features))
        test_g = assignment.assign(project(axis, test_features))
        train_g = assignment.assign(project(axis, train.features))
        strata_rows = _strata_diagnostics(train, train_g, test_g)
    else:
        fit_g, cal_g, test_g = fit_part.strata, cal_part.strata, test_strata

    raw = np.empty(len(test_features))
    cal_scores = np.empty(len(cal_part))
    for i, g in enumerate(np.unique(np.r_[fit_g, cal_g, test_g])):
        try:
            model = _fit_scorer(cfg, fit_part.subset(fit_g == g), int(model_seeds[i]))
        except RocrecalError as err:
            raise with_stratum(err, int(g)) from err
        raw[test_g == g] = predict(model, test_features[test_g == g])
        cal_scores[cal_g == g] = predict(model, cal_part.features[cal_g == g])

    calibrator = fit_calibrator_arrays(
        cal_scores, cal_part.labels, cal_g, cal_part.weights, cfg.calibrator
    )
    _, calibrated = apply_arrays(calibrator, raw, test_g)
    target = {g: comp.odds for g, comp in calibrator.strata.items()}
    base = fit_probability_baseline(
        cal_scores, cal_part.labels, cal_g, target_odds=target, laplace=cfg.calibrator.laplace
    )
    baseline = apply_probability_baseline(base, raw, test_g)

    if cfg.mode == "pca-strata":
        pooled_model = _fit_scorer(cfg, fit_part, int(model_seeds[-1]))
        raw = predict(pooled_model, test_features)
    return ScoredTest(raw, calibrated, baseline, calibrator, strata_rows)


def _strata_diagnostics(train: Dataset, train_g: NDArray, test_g: NDArray) -> tuple:
    rows = []
    for g in np.unique(np.r_[train_g, test_g]):
        m = train_g == g
        w = train.weights[m]
        rate = float(np.sum(w * train.labels[m]) / np.sum(w)) if m.any() else float("nan")
        rows.append(
            (int(g), int(m.sum()), int(np.sum(test_g == g)), rate, float(np.mean(test_g == g)))
        )
    return tuple(rows)


def run_rep(cfg: ExperimentConfig, rep: int, keep_curves: bool = False) -> RepResult:
    seed = rep_seed(cfg.master_seed, rep)
    try:
        train, test = generate(cfg.spec.with_seed(seed))
        sealed = SealedLabels(test.labels)
        scored = fit_and_score(cfg, train, test.features, test.strata, seed)
    except RocrecalError as err:
        raise with_context(err, f"rep {rep}", rep=rep) from err
    a_raw, c_raw = sealed.grade(scored.raw)
    a_cal, c_cal = sealed.grade(scored.calibrated)
    a_base, c_base = sealed.grade(scored.baseline)
    curves = {"raw": c_raw, "calibrated": c_cal, "baseline": c_base} if keep_curves else {}
    return RepResult(rep, seed, a_raw, a_cal, a_base, scored.strata_rows, curves)


def _run_rep_star(args):
    return run_rep(*args)


def run_experiment(cfg: ExperimentConfig, workers: Optional[int] = None) -> ExperimentReport:
    """Run all repetitions; rows come back ordered by repetition index."""
    workers = cfg.workers if workers is None else workers
    jobs = [(cfg, rep, rep == 0) for rep in range(cfg.reps)]
    if workers <= 1:
        rows = [_run_rep_star(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_rep_star, jobs))
    rows.sort(key=lambda r: r.rep)
    log.info("finished %d repetitions", len(rows))
    return ExperimentReport(tuple(rows))
