import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from robin.robustness import DEFAULT_LEVELS
from robin.stats import (LENGTHSCALES, SIGNAL_SHARES, GPHyper, bspline_basis, fit_gp,
                         gp_log_marginal, greville_abscissae, project, robin_auc,
                         robin_fda_test, robin_gp_test, spline_area)

from conftest import smooth_curves

LEVELS = np.asarray(DEFAULT_LEVELS)


def null_curves(rng, n):
    return smooth_curves(rng, n, LEVELS)


class TestLogMarginal:
    def test_scalar(self):
        assert gp_log_marginal([0.0], [0.0], GPHyper(0, 1, 1)) == pytest.approx(-0.9189385, abs=1e-7)

    def test_identity_covariance(self):
        assert gp_log_marginal([0, 1], [0, 0], GPHyper(0, 1, 1)) == pytest.approx(-1.8378771, abs=1e-7)

    def test_iid_closed_form(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n = int(rng.integers(1, 30))
            x = rng.uniform(0, 1, n)
            y = rng.normal(0, 2, n)
            s2 = float(rng.uniform(0.01, 5))
            expected = norm.logpdf(y, scale=np.sqrt(s2)).sum()
            got = gp_log_marginal(x, y, GPHyper(0.0, float(rng.uniform(0.05, 1)), s2))
            assert got == pytest.approx(expected, abs=1e-10)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_permutation_invariance(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.uniform(0, 1, 8)
        y = rng.normal(size=8)
        h = GPHyper(0.7, 0.2, 0.3)
        perm = rng.permutation(8)
        assert gp_log_marginal(x[perm], y[perm], h) == pytest.approx(gp_log_marginal(x, y, h),
                                                                      abs=1e-10)

    def test_invalid_hyper(self):
        with pytest.raises(ValueError):
            GPHyper(0.1, 0.0, 1.0)
        with pytest.raises(ValueError):
            GPHyper(0.1, 0.1, 0.0)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            gp_log_marginal([0, 1], [0], GPHyper(0, 1, 1))


class TestFitGP:
    def test_grid_matches_brute_force(self):
        rng = np.random.default_rng(5)
        y = 0.3 * np.sin(6 * LEVELS) + 0.05 * rng.standard_normal(LEVELS.size)
        total = np.mean(y * y)
        brute = max(gp_log_marginal(LEVELS, y, GPHyper(s * total, ell, total - s * total))
                    for s, ell in itertools.product(SIGNAL_SHARES, LENGTHSCALES))
        assert fit_gp(LEVELS, y, "signal").log_marginal == pytest.approx(brute, abs=1e-12)

    def test_noise_closed_form(self):
        y = np.array([0.1, -0.2, 0.3, 0.0])
        fit = fit_gp(np.arange(4.0), y, "noise")
        assert fit.hyper.signal_variance == 0
        assert fit.hyper.noise_variance == pytest.approx(np.mean(y * y))

    def test_zeros_coincide(self):
        s = fit_gp(LEVELS, np.zeros(12), "signal")
        n = fit_gp(LEVELS, np.zeros(12), "noise")
        assert s.log_marginal == pytest.approx(n.log_marginal)
        assert s.hyper.noise_variance == n.hyper.noise_variance == 1e-8

    def test_sine_prefers_signal(self):
        x = np.linspace(0, 1, 12)
        y = np.sin(2 * np.pi * x) + 1e-3 * np.random.default_rng(1).standard_normal(12)
        assert fit_gp(x, y, "signal").log_marginal > fit_gp(x, y, "noise").log_marginal

    def test_signal_needs_three_points(self):
        with pytest.raises(ValueError):
            fit_gp([0, 1], [0, 1], "signal")

    def test_unknown_model(self):
        with pytest.raises(ValueError):
            fit_gp(LEVELS, LEVELS, "other")


class TestGPTest:
    def test_identical_curves(self):
        curve = 0.4 * (1 - np.exp(-LEVELS / 0.2))
        res = robin_gp_test(curve, curve, LEVELS)
        assert res.bf <= 0.1
        assert np.all(res.profile == 0)

    def test_bf_identity(self):
        rng = np.random.default_rng(2)
        a, b = rng.uniform(0.1, 0.9, (2, 12))
        res = robin_gp_test(a, b, LEVELS)
        assert res.bf == res.fit_signal.log_marginal - res.fit_noise.log_marginal

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_sign_symmetry(self, seed):
        rng = np.random.default_rng(seed)
        a, b = rng.uniform(0.05, 0.9, (2, 12))
        # swapping curves negates the log-ratio profile up to the epsilon guard
        ab = robin_gp_test(a, b, LEVELS)
        ba = robin_gp_test(b, a, LEVELS)
        assert np.allclose(ab.profile, -ba.profile, atol=1e-12)
        assert ab.bf == pytest.approx(ba.bf, abs=1e-8)

    def test_separated_beats_close(self):
        base = 0.5 * (1 - np.exp(-LEVELS / 0.15))
        far = robin_gp_test(base, 0.5 * base, LEVELS)
        near = robin_gp_test(base, base * (1 + 0.01 * np.sin(40 * LEVELS)), LEVELS)
        assert far.bf > 5
        assert far.bf > near.bf

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            robin_gp_test([0.1, 0.2, 0.3], [0.1, 0.2], [0, 1, 2])

    def test_serialization(self):
        d = robin_gp_test(LEVELS, LEVELS[::-1], LEVELS).to_dict()
        assert d["test"] == "gp"
        assert len(d["profile"]) == 12


class TestBasis:
    def test_partition_of_unity(self):
        phi = bspline_basis(LEVELS)
        assert phi.shape == (12, 12)
        assert np.allclose(phi.sum(axis=1), 1.0)

    def test_interpolates_when_square(self):
        rng = np.random.default_rng(3)
        curves = rng.uniform(0, 1, (5, 12))
        fitted = project(curves, LEVELS) @ bspline_basis(LEVELS).T
        assert np.max(np.abs(fitted - curves)) < 1e-8

    def test_smaller_basis(self):
        assert bspline_basis(LEVELS, 6).shape == (12, 6)

    def test_greville_reproduces_linear(self):
        # a clamped spline with coefficients at the Greville points reproduces x exactly
        g = greville_abscissae(LEVELS)
        assert g[0] == pytest.approx(LEVELS[0]) and g[-1] == pytest.approx(LEVELS[-1])
        assert np.allclose(bspline_basis(LEVELS) @ g, LEVELS)


class TestITP:
    def test_identical_groups(self):
        g = null_curves(np.random.default_rng(0), 10)
        res = robin_fda_test(g, g.copy(), LEVELS, permutations=200, seed=1)
        assert np.all(res.adjusted_pvalues == 1.0)
        assert np.all(res.component_pvalues == 1.0)

    def test_offset_detected(self):
        rng = np.random.default_rng(1)
        g1 = null_curves(rng, 10)
        res = robin_fda_test(g1, null_curves(rng, 10) + 0.3, LEVELS, seed=2)
        assert np.all(res.adjusted_pvalues <= 0.05)
        assert res.basis_size == 12 and res.permutations == 1000

    def test_adjusted_dominates(self):
        rng = np.random.default_rng(4)
        g1 = null_curves(rng, 10)
        g2 = null_curves(rng, 10)
        g2[:, :4] += 0.2
        res = robin_fda_test(g1, g2, LEVELS, permutations=300, seed=0)
        p = res.interval_pvalues
        assert np.all(res.adjusted_pvalues >= res.component_pvalues)
        assert np.all((res.adjusted_pvalues >= 0) & (res.adjusted_pvalues <= 1))
        for k in range(12):
            containing = [p[i, j] for i in range(k + 1) for j in range(k, 12)]
            assert res.adjusted_pvalues[k] == max(containing)
            # the full interval contains every component
            assert res.adjusted_pvalues[k] >= p[0, 11]

    def test_seeded(self):
        rng = np.random.default_rng(6)
        g1, g2 = null_curves(rng, 10), null_curves(rng, 10)
        a = robin_fda_test(g1, g2, LEVELS, permutations=200, seed=9)
        b = robin_fda_test(g1, g2, LEVELS, permutations=200, seed=9)
        assert np.array_equal(a.adjusted_pvalues, b.adjusted_pvalues)

    def test_too_few_curves(self):
        with pytest.raises(ValueError):
            robin_fda_test(np.zeros((1, 12)), np.zeros((3, 12)), LEVELS)

    def test_grid_mismatch(self):
        with pytest.raises(ValueError):
            robin_fda_test(np.zeros((3, 11)), np.zeros((3, 11)), LEVELS)

    def test_raw_pvalue_validity(self):
        # P(p <= alpha) <= alpha + 1/(B+1); 3 binomial standard errors of slack for 200 draws
        rng = np.random.default_rng(2024)
        b, alpha, trials = 200, 0.05, 200
        hits = np.zeros(12)
        full = 0
        for t in range(trials):
            res = robin_fda_test(null_curves(rng, 10), null_curves(rng, 10), LEVELS,
                                 permutations=b, seed=t)
            hits += res.component_pvalues <= alpha
            full += res.interval_pvalues[0, 11] <= alpha
        bound = alpha + 1 / (b + 1) + 3 * np.sqrt(alpha * (1 - alpha) / trials)
        assert np.all(hits / trials <= bound)
        assert full / trials <= bound


class TestAUC:
    def test_identity_line(self):
        assert spline_area(LEVELS, LEVELS) == pytest.approx(0.17875, abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(-5, 5), min_size=4, max_size=4))
    def test_cubics_exact(self, c):
        poly = np.polynomial.Polynomial(c)
        exact = poly.integ()(0.60) - poly.integ()(0.05)
        assert spline_area(LEVELS, poly(LEVELS)) == pytest.approx(exact, abs=1e-10)

    def test_equal_curves_ratio_one(self):
        curve = 0.3 + 0.2 * LEVELS
        assert robin_auc(curve, curve, LEVELS).ratio == 1.0

    def test_zero_reference(self):
        res = robin_auc(np.zeros(12), LEVELS, LEVELS)
        assert res.area1 == 0
        assert res.ratio is None
        assert res.to_dict()["ratio"] is None

    def test_ratio(self):
        res = robin_auc(LEVELS, 2 * LEVELS, LEVELS)
        assert res.ratio == pytest.approx(2.0)
