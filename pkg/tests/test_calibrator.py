import dataclasses
from statistics import NormalDist

import numpy as np
import pytest

from oracles import isotonic_brute_force
from rocrecal.calibrator import (
    CalibratorConfig,
    apply_arrays,
    apply_calibrator,
    apply_probability_baseline,
    estimate_odds,
    fit_calibrator,
    fit_calibrator_arrays,
    fit_probability_baseline,
    rank_calibrated,
    ranking_order,
)
from rocrecal.errors import TooFewPoints, UnknownStratum, ZeroNegatives, ZeroPositives
from rocrecal.oracle import binormal_slope
from rocrecal.roc import ScoredRecord, dominates, roc_curve, score_to_fpr
from rocrecal.smoothing import eval_slope


def _stratum_data(rng, n, pos_rate, mu=1.0):
    y = (rng.random(n) < pos_rate).astype(int)
    s = rng.normal(size=n) + mu * y
    return s, y


def _two_strata(seed, n=400, rates=(0.5, 0.2)):
    rng = np.random.default_rng(seed)
    parts = [_stratum_data(rng, n, r) for r in rates]
    s = np.concatenate([p[0] for p in parts])
    y = np.concatenate([p[1] for p in parts])
    g = np.repeat([1, 2], n)
    return s, y, g


class TestOdds:
    def test_examples(self):
        assert estimate_odds([1, 1, 0, 0]) == 1.0
        assert estimate_odds([1, 1, 1, 0]) == 3.0
        with pytest.raises(ZeroNegatives):
            estimate_odds([1, 1])
        with pytest.raises(ZeroPositives):
            estimate_odds([0, 0])
        assert estimate_odds([1, 1], laplace=True) == 5.0

    def test_weighted(self):
        assert estimate_odds([1, 0, 0], [4.0, 1.0, 1.0]) == 2.0


class TestFit:
    def test_identical_strata_identical_components(self):
        rng = np.random.default_rng(0)
        s, y = _stratum_data(rng, 300, 0.4)
        cal = fit_calibrator_arrays(np.r_[s, s], np.r_[y, y], np.repeat([1, 2], 300))
        a, b = cal[1], cal[2]
        assert a.odds == b.odds and a.roc == b.roc and a.slope == b.slope

    def test_odds_ratio_81(self):
        rng = np.random.default_rng(1)
        s = rng.normal(size=100)
        ya = np.r_[np.ones(90, int), np.zeros(10, int)]
        yb = 1 - ya
        cal = fit_calibrator_arrays(np.r_[s, s], np.r_[ya, yb], np.repeat([1, 2], 100))
        assert cal[1].odds / cal[2].odds == pytest.approx(81.0, rel=1e-12)

    def test_errors_carry_stratum(self):
        s = np.r_[np.linspace(0, 1, 20), [0.1, 0.2, 0.3]]
        y = np.r_[np.tile([0, 1], 10), [0, 1, 0]]
        g = np.r_[np.ones(20, int), np.full(3, 7)]
        with pytest.raises(TooFewPoints) as info:
            fit_calibrator_arrays(s, y, g)
        assert info.value.stratum == 7
        assert "stratum 7" in str(info.value)

    def test_unknown_stratum_at_apply(self):
        s, y, g = _two_strata(0)
        cal = fit_calibrator_arrays(s, y, g)
        with pytest.raises(UnknownStratum) as info:
            apply_arrays(cal, [0.1], [3])
        assert info.value.stratum == 3

    def test_records_api(self):
        s, y, g = _two_strata(4, n=60)
        recs = [ScoredRecord(a, b, c) for a, b, c in zip(s, y, g)]
        cal = fit_calibrator(recs, CalibratorConfig(laplace=True))
        assert cal.stratum_ids == [1, 2]
        out = apply_calibrator(cal, [ScoredRecord(r.score, stratum=r.stratum) for r in recs])
        assert [c.index for c in out] == list(range(len(recs)))


class TestApply:
    def test_rank_value_exact(self):
        s, y, g = _two_strata(2)
        cal = fit_calibrator_arrays(s, y, g)
        probe = np.random.default_rng(9).normal(size=200) * 1.5
        pg = np.r_[np.ones(100, int), np.full(100, 2)]
        out = apply_calibrator(cal, [ScoredRecord(a, stratum=b) for a, b in zip(probe, pg)])
        for c in out:
            comp = cal[c.stratum]
            f = score_to_fpr(comp.roc, c.raw_score)
            assert c.fpr == f
            assert c.rank_value == comp.odds * eval_slope(comp.slope, f)

    def test_single_stratum_preserves_order(self):
        rng = np.random.default_rng(5)
        s, y = _stratum_data(rng, 500, 0.3)
        cal = fit_calibrator_arrays(s, y, np.ones(500, int))
        probe = np.sort(rng.normal(size=300) * 2)
        _, rank = apply_arrays(cal, probe, np.ones(300, int))
        assert np.all(np.diff(rank) >= 0)

    def test_odds_scale_ranking_at_equal_fpr(self):
        rng = np.random.default_rng(6)
        s, y = _stratum_data(rng, 300, 0.5)
        base = fit_calibrator_arrays(s, y, np.ones(300, int))[1]
        cal = dataclasses.replace(
            fit_calibrator_arrays(np.r_[s, s], np.r_[y, y], np.repeat([1, 2], 300)),
            strata={1: dataclasses.replace(base, odds=4.0), 2: dataclasses.replace(base, odds=1.0)},
        )
        probe = np.sort(rng.normal(size=50))
        _, ra = apply_arrays(cal, probe, np.ones(50, int))
        _, rb = apply_arrays(cal, probe, np.full(50, 2))
        assert np.all(ra > rb)

    def test_stratum_independence(self):
        s, y, g = _two_strata(7)
        cal = fit_calibrator_arrays(s, y, g)
        s2 = s.copy()
        s2[g == 2] += np.random.default_rng(1).normal(scale=0.3, size=np.sum(g == 2))
        cal2 = fit_calibrator_arrays(s2, y, g)
        probe = np.linspace(-3, 3, 101)
        ones = np.ones(101, int)
        np.testing.assert_array_equal(apply_arrays(cal, probe, ones)[1], apply_arrays(cal2, probe, ones)[1])
        assert cal[1].roc == cal2[1].roc and cal[1].slope == cal2[1].slope

    def test_odds_equivariance(self):
        s, y, g = _two_strata(8, n=150)
        cal = fit_calibrator_arrays(s, y, g)
        probe_s = np.random.default_rng(3).normal(size=300)
        probe_g = np.repeat([1, 2], 150)
        for k in (1, 2):
            bumped = dataclasses.replace(
                cal, strata={**cal.strata, k: dataclasses.replace(cal[k], odds=cal[k].odds * 2.5)}
            )
            before = _outranks(apply_arrays(cal, probe_s, probe_g)[1], probe_g)
            after = _outranks(apply_arrays(bumped, probe_s, probe_g)[1], probe_g)
            mine = probe_g == k
            # rows of stratum k can only gain out-ranked records
            assert np.all(after[mine] >= before[mine])

    def test_ranking_order_tie_break(self):
        order = ranking_order([1.0, 2.0, 1.0, 1.0], [2, 1, 1, 2])
        assert order.tolist() == [1, 2, 0, 3]

    def test_rank_calibrated(self):
        s, y, g = _two_strata(9, n=50)
        cal = fit_calibrator_arrays(s, y, g)
        out = apply_calibrator(cal, [ScoredRecord(a, stratum=b) for a, b in zip(s, g)])
        ranked = rank_calibrated(out)
        vals = [c.rank_value for c in ranked]
        assert vals == sorted(vals, reverse=True)


def _outranks(rank, g):
    order = ranking_order(rank, g)
    pos = np.empty(len(rank), int)
    pos[order] = np.arange(len(rank))
    return pos[:, None] < pos[None, :]


def test_oracle_dominance_at_known_truth():
    """Exact slopes and odds give a ranking whose ROC dominates the pooled raw score."""
    nd = NormalDist()
    # (positive mean shift, positive rate) per stratum; negatives are N(0, 1)
    design = {1: (1.0, 0.5), 2: (2.0, 0.1)}
    n = 20_000
    wins = 0
    for seed in range(50):
        rng = np.random.default_rng(seed)
        s_all, y_all, r_all = [], [], []
        for mu, rate in design.values():
            y = (rng.random(n) < rate).astype(int)
            s = rng.normal(size=n) + mu * y
            odds = rate / (1 - rate)
            fpr = np.array([nd.cdf(-v) for v in s])
            r_all.append(odds * np.array([binormal_slope(mu, f) for f in fpr]))
            s_all.append(s)
            y_all.append(y)
        s, y, r = map(np.concatenate, (s_all, y_all, r_all))
        wins += dominates(roc_curve(r, y), roc_curve(s, y), grid_size=101, tol=0.01)
    assert wins >= 45


class TestBaseline:
    def test_separable(self):
        s = np.linspace(0, 1, 20)
        y = (s > 0.5).astype(int)
        g = np.ones(20, int)
        base = fit_probability_baseline(s, y, g, target_odds={1: 0.25})
        p = apply_probability_baseline(base, s, g)
        assert set(np.round(p, 12)) == {0.0, 1.0}
        assert np.all(np.diff(p) >= 0)

    def test_identity_correction(self):
        rng = np.random.default_rng(2)
        s, y = _stratum_data(rng, 200, 0.3)
        g = np.ones(200, int)
        plain = fit_probability_baseline(s, y, g)
        same = fit_probability_baseline(s, y, g, target_odds={1: plain[1].train_odds})
        p = apply_probability_baseline(same, s, g)
        np.testing.assert_allclose(p, np.interp(s, plain[1].knot_score, plain[1].knot_prob), atol=1e-15)

    def test_prior_correction_scales_odds(self):
        rng = np.random.default_rng(3)
        s, y = _stratum_data(rng, 200, 0.3)
        g = np.ones(200, int)
        plain = apply_probability_baseline(fit_probability_baseline(s, y, g), s, g)
        train = estimate_odds(y)
        moved = apply_probability_baseline(fit_probability_baseline(s, y, g, target_odds={1: 3 * train}), s, g)
        inner = (plain > 0) & (plain < 1)
        np.testing.assert_allclose(
            moved[inner] / (1 - moved[inner]), 3 * plain[inner] / (1 - plain[inner]), rtol=1e-12
        )

    def test_tiny_matches_pav_oracle(self):
        s = np.array([0.1, 0.2, 0.3, 0.4, 0.5, 0.6])
        y = np.array([0, 1, 0, 0, 1, 1])
        base = fit_probability_baseline(s, y, np.ones(6, int))
        np.testing.assert_allclose(base[1].knot_prob, isotonic_brute_force(y, np.ones(6)), atol=1e-9)
