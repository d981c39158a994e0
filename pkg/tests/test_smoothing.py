import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import isotonic_brute_force
from rocrecal.errors import TooFewPoints
from rocrecal.oracle import binormal_slope
from rocrecal.roc import RocCurve, roc_curve
from rocrecal.smoothing import (
    SlopeFunction,
    eval_slope,
    eval_slope_array,
    fit_slope_function,
    isotonic_fit,
)


def _sampled_curve(beta, n=50):
    a = np.linspace(0.0, 1.0, n)
    return RocCurve(np.r_[np.inf, np.arange(n - 1, 0, -1.0)], a, beta(a), 1.0, 1.0)


def _binormal(n, seed, mu=1.5):
    rng = np.random.default_rng(seed)
    s = np.r_[rng.normal(mu, 1, n), rng.normal(0, 1, n)]
    return roc_curve(s, np.r_[np.ones(n), np.zeros(n)])


class TestFit:
    def test_diagonal_slope_is_one(self):
        sf = fit_slope_function(_sampled_curve(lambda a: a), 0.05, 10, True, 1e-6)
        assert np.max(np.abs(sf.knot_slope - 1.0)) <= 1e-6

    def test_quadratic_slope_at_half(self):
        # slope 2a is increasing, so the monotone projection must be off here;
        # a symmetric local-linear window recovers the derivative of a
        # quadratic exactly, hence the tight tolerance
        sf = fit_slope_function(_sampled_curve(np.square), 0.05, 10, False, 1e-6)
        assert eval_slope(sf, 0.5) == pytest.approx(1.0, abs=1e-9)

    def test_knots_cover_unit_interval(self):
        sf = fit_slope_function(_binormal(300, 1), 0.05, 10, True, 1e-6)
        assert sf.knot_fpr[0] == 0.0 and sf.knot_fpr[-1] == 1.0
        assert np.all(np.diff(sf.knot_fpr) > 0)

    def test_too_few_points(self):
        with pytest.raises(TooFewPoints):
            fit_slope_function(roc_curve([0.9, 0.1], [1, 0]), 0.05, 10, True, 1e-6)

    def test_bad_parameters(self):
        c = _binormal(100, 0)
        for kwargs in (dict(span=0.0), dict(span=1.5), dict(min_neighbors=0), dict(floor=0.0)):
            args = dict(span=0.05, min_neighbors=10, monotone=True, floor=1e-6) | kwargs
            with pytest.raises(ValueError):
                fit_slope_function(c, **args)

    def test_convergence_with_n(self):
        grid = np.linspace(0.05, 0.95, 19)
        truth = np.array([binormal_slope(1.5, g) for g in grid])

        def max_err(n, seed):
            sf = fit_slope_function(_binormal(n, seed), 0.05, 10, True, 1e-6)
            return np.max(np.abs(eval_slope_array(sf, grid) / truth - 1))

        small = np.median([max_err(2000, s) for s in range(20)])
        large = np.median([max_err(4000, s) for s in range(20)])
        assert large <= small

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000), st.integers(20, 400))
    def test_monotone_and_floor(self, seed, n):
        sf = fit_slope_function(_binormal(n, seed, mu=0.8), 0.05, 10, True, 1e-6)
        vals = eval_slope_array(sf, np.linspace(0, 1, 2001))
        assert np.all(np.diff(vals) <= 0)
        assert np.all(vals >= sf.floor)

    def test_floor_without_monotone(self):
        # a curve that is flat at the top end has zero local slope there
        beta = lambda a: np.minimum(1.0, 2 * a)  # noqa: E731
        sf = fit_slope_function(_sampled_curve(beta, 60), 0.05, 10, False, 1e-3)
        assert np.all(sf.knot_slope >= 1e-3)
        assert eval_slope(sf, 0.95) == 1e-3


class TestEval:
    sf = SlopeFunction(np.array([0.0, 0.4, 0.6, 1.0]), np.array([3.0, 2.0, 1.0, 0.5]), 1e-6, True)

    def test_at_knot(self):
        for f, s in zip(self.sf.knot_fpr, self.sf.knot_slope):
            assert eval_slope(self.sf, f) == s

    def test_midpoint(self):
        assert eval_slope(self.sf, 0.5) == pytest.approx(1.5, abs=1e-15)

    def test_clamped_outside_unit_interval(self):
        assert eval_slope(self.sf, 1.5) == 0.5
        assert eval_slope(self.sf, -0.5) == 3.0

    def test_invariants_enforced(self):
        with pytest.raises(ValueError):
            SlopeFunction(np.array([0.0, 1.0]), np.array([1.0, 2.0]), 1e-6, True)
        with pytest.raises(ValueError):
            SlopeFunction(np.array([0.0, 1.0]), np.array([1.0, 0.0]), 1e-6, True)
        with pytest.raises(ValueError):
            SlopeFunction(np.array([0.1, 1.0]), np.array([1.0, 1.0]), 1e-6, True)


class TestIsotonic:
    def test_fixed_point(self):
        ys = [0.1, 0.5, 0.5, 2.0]
        np.testing.assert_array_equal(isotonic_fit(np.arange(4), ys), ys)

    def test_small_examples(self):
        np.testing.assert_allclose(isotonic_fit([0, 1, 2], [1, 3, 2]), [1, 2.5, 2.5])
        np.testing.assert_allclose(isotonic_fit([0, 1, 2], [3, 1, 2]), [2, 2, 2])

    def test_decreasing(self):
        np.testing.assert_allclose(isotonic_fit([0, 1, 2], [1, 3, 2], direction="decreasing"), [2, 2, 2])

    def test_against_block_partition_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            n = int(rng.integers(1, 9))
            ys = rng.normal(size=n)
            ws = rng.uniform(0.1, 3.0, size=n)
            got = isotonic_fit(np.arange(n), ys, ws)
            np.testing.assert_allclose(got, isotonic_brute_force(ys, ws), atol=1e-9)
