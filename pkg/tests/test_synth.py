import math

import numpy as np
import pytest

from rocrecal.errors import DimensionMismatch, EmptyClassAfterSampling, InfeasibleSpec
from rocrecal.roc import auc_score
from rocrecal.synth import (
    ScoreModel,
    StratumSpec,
    SyntheticSpec,
    fit_logistic,
    generate,
    logistic_objective,
    predict,
    stratum_positive_rates,
    undersample_majority,
)


def _spec(rate_pos=(1.0, 1.0), rate_neg=(1.0, 1.0), n=8000, seed=0):
    s1 = StratumSpec(0.4, (0.0, 0.5), (1.0, 1.5), -1.0, (0.5, 1.0), (0.0, 0.4), rate_pos[0], rate_neg[0])
    s2 = StratumSpec(0.6, (0.3, 0.0), (1.2, 1.0), -2.0, (0.8, -0.6), (0.3, 0.0), rate_pos[1], rate_neg[1])
    return SyntheticSpec(2, (s1, s2), n_train=n, n_test=n, seed=seed)


def _quadrature_rate(st: StratumSpec, sign: float, m: int = 2001) -> float:
    """E[sigmoid(logit(x))] over the stratum's feature law on a 2-D trapezoid grid."""
    z = np.linspace(-9.0, 9.0, m)
    phi = np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    w = phi * (z[1] - z[0])
    z1, z2 = np.meshgrid(z, z, indexing="ij")
    x1 = sign * np.abs(st.mean[0] + st.scale[0] * z1)
    x2 = st.mean[1] + st.scale[1] * z2
    logit = st.intercept + st.coef[0] * x1 + st.coef[1] * x2 + st.quad[0] * x1**2 + st.quad[1] * x2**2
    p = 1.0 / (1.0 + np.exp(-logit))
    return float(w @ p @ w)


class TestGenerate:
    def test_rates_match_quadrature(self):
        spec = _spec(n=60_000)
        _, test = generate(spec)
        mc = stratum_positive_rates(spec)
        for i, (g, sign) in enumerate(((1, -1.0), (2, 1.0))):
            p = _quadrature_rate(spec.strata[i], sign)
            y = test.labels[test.strata == g]
            se = math.sqrt(p * (1 - p) / len(y))
            assert abs(y.mean() - p) <= 3 * se
            assert abs(mc[i] - p) <= 3 * math.sqrt(p * (1 - p) / 200_000)

    def test_unit_rates_train_matches_test(self):
        train, test = generate(_spec(n=20_000, seed=4))
        for g in (1, 2):
            a = train.labels[train.strata == g]
            b = test.labels[test.strata == g]
            p = 0.5 * (a.mean() + b.mean())
            se = math.sqrt(p * (1 - p) * (1 / len(a) + 1 / len(b)))
            assert abs(a.mean() - b.mean()) <= 3 * se
        assert np.all(train.weights == 1.0)

    def test_strata_follow_sign_of_first_feature(self):
        train, test = generate(_spec(seed=1))
        for d in (train, test):
            assert np.all((d.features[:, 0] < 0) == (d.strata == 1))

    def test_deterministic(self):
        a = generate(_spec(seed=3))
        b = generate(_spec(seed=3))
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.features, y.features)
            np.testing.assert_array_equal(x.labels, y.labels)
            np.testing.assert_array_equal(x.weights, y.weights)
        c = generate(_spec(seed=4))
        assert not np.array_equal(a[1].labels, c[1].labels)

    def test_bias_factor(self):
        # keeping 1 in 5 negatives of stratum 2 multiplies its odds by 5
        train, test = generate(_spec(rate_neg=(1.0, 0.2), n=40_000, seed=2))
        for g, factor in ((1, 1.0), (2, 5.0)):
            ytr = train.labels[train.strata == g]
            yte = test.labels[test.strata == g]
            log_ratio = math.log(ytr.mean() / (1 - ytr.mean())) - math.log(yte.mean() / (1 - yte.mean()))
            se = math.sqrt(sum(1 / c for c in (ytr.sum(), (1 - ytr).sum(), yte.sum(), (1 - yte).sum())))
            assert abs(log_ratio - math.log(factor)) <= 4 * se
        np.testing.assert_allclose(np.unique(train.weights[train.strata == 2]), [1.0, 5.0])

    def test_infeasible(self):
        with pytest.raises(InfeasibleSpec):
            generate(_spec(rate_pos=(0.001, 1.0), n=500))
        with pytest.raises(InfeasibleSpec):
            _spec(rate_neg=(0.0, 1.0))


def _objective_data(rng, n=60, d=3):
    x = rng.normal(size=(n, d))
    y = (rng.random(n) < 0.4).astype(float)
    w = rng.uniform(0.5, 3.0, n)
    return x, y, w


class TestLogistic:
    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            x, y, w = _objective_data(rng)
            for _ in range(10):
                params = rng.normal(size=4)
                _, grad = logistic_objective(params, x, y, w, 0.1)
                h = 1e-6
                fd = np.array([
                    (logistic_objective(params + h * e, x, y, w, 0.1)[0]
                     - logistic_objective(params - h * e, x, y, w, 0.1)[0]) / (2 * h)
                    for e in np.eye(4)
                ])
                assert np.linalg.norm(grad - fd) / np.linalg.norm(fd) < 1e-5

    def test_separable_four_points(self):
        x = np.array([[-2.0], [-1.0], [1.0], [2.0]])
        y = np.array([0, 0, 1, 1])
        m = fit_logistic(x, y, l2=1e-3)
        assert auc_score(predict(m, x), y) == 1.0

    def test_symmetric_data_zero_intercept(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(100, 2))
        y = (rng.random(100) < 0.5).astype(int)
        m = fit_logistic(np.r_[x, -x], np.r_[y, 1 - y], class_weights=(1, 1))
        assert abs(m.intercept) < 1e-3
        assert m.converged

    def test_duplicate_positives_equals_double_weight(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(300, 3))
        y = (rng.random(300) < 1 / (1 + np.exp(-x[:, 0] + 1))).astype(int)
        pos = y == 1
        kw = dict(l2=1e-3, epochs=20_000, tol=1e-10)
        a = fit_logistic(np.r_[x, x[pos]], np.r_[y, y[pos]], **kw)
        b = fit_logistic(x, y, class_weights=(1, 2), **kw)
        np.testing.assert_allclose(a.coef, b.coef, atol=1e-6)
        assert a.intercept == pytest.approx(b.intercept, abs=1e-6)

    def test_undersampling(self):
        y = np.r_[np.ones(20, int), np.zeros(200, int)]
        keep = undersample_majority(y, 0.1, np.random.default_rng(0))
        assert np.sum(y[keep] == 1) == 20 and np.sum(y[keep] == 0) == 20
        with pytest.raises(EmptyClassAfterSampling):
            fit_logistic(np.zeros((3, 1)), [1, 1, 1])

    def test_undersampling_is_seeded(self):
        rng = np.random.default_rng(3)
        x, y = rng.normal(size=(400, 2)), (rng.random(400) < 0.2).astype(int)
        a = fit_logistic(x, y, undersample=0.3, seed=5)
        b = fit_logistic(x, y, undersample=0.3, seed=5)
        np.testing.assert_array_equal(a.coef, b.coef)


class TestPredict:
    def test_zero_coefficients(self):
        m = ScoreModel(np.zeros(3), 0.7)
        np.testing.assert_array_equal(predict(m, np.random.default_rng(0).normal(size=(5, 3))), 0.7)

    def test_orthogonal_shift(self):
        m = ScoreModel(np.array([1.0, 2.0, 0.0]), -0.5)
        x = np.array([0.3, -1.0, 2.0])
        v = np.array([2.0, -1.0, 5.0])
        assert predict(m, x) == predict(m, x + v)

    def test_order_matches_probability(self):
        rng = np.random.default_rng(1)
        m = ScoreModel(rng.normal(size=2), 0.1)
        x = rng.normal(size=(100, 2))
        s = predict(m, x)
        np.testing.assert_array_equal(np.argsort(s), np.argsort(1 / (1 + np.exp(-s))))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            predict(ScoreModel(np.zeros(2), 0.0), np.zeros(3))
