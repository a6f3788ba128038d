"""Closed-form risk under signal shift: hand oracles and ridge limits."""

import numpy as np
import pytest

from interp_risk import (
    DomainError,
    InputError,
    ShiftSummary,
    decide_transfer,
    mp_resolvent,
    optimal_target_size,
    theory_min_norm_model_shift,
    theory_multi_source,
    theory_ridge_model_shift,
    theory_target_only_isotropic,
)
from interp_risk.model_shift import ridge_limit_quantities


def summary(n1=200, n2=100, p=600, sigma_sq=1.0, b2=5.0, shift=1.0, cross=0.0):
    return ShiftSummary(n1=n1, n2=n2, p=p, sigma_sq=sigma_sq,
                        beta2_norm_sq=b2, shift_norm_sq=shift, cross_term=cross)


class TestInterpolatorFormula:
    def test_hand_arithmetic(self):
        br = theory_min_norm_model_shift(summary())
        assert br.variance == pytest.approx(1.0)
        assert br.b1 == pytest.approx(2.5)
        assert br.b2 == pytest.approx(200 * 400 / (600 * 300))  # 0.4444...
        assert br.b3 == 0.0
        assert br.total == pytest.approx(3.9444444444)

    def test_empty_source_reduces_to_target_only(self):
        br = theory_min_norm_model_shift(summary(n1=0))
        assert br.b2 == 0.0
        assert br.total == pytest.approx(
            theory_target_only_isotropic(100, 600, 1.0, 5.0)
        )

    def test_zero_shift_kills_b2(self):
        assert theory_min_norm_model_shift(summary(shift=0.0)).b2 == 0.0

    def test_threshold_rejected(self):
        with pytest.raises(DomainError):
            theory_min_norm_model_shift(summary(n1=500, n2=100, p=600))

    def test_variance_increasing_in_n(self):
        totals = [theory_min_norm_model_shift(summary(n1=n1)).variance
                  for n1 in (0, 100, 200, 300, 400)]
        assert all(v0 < v1 for v0, v1 in zip(totals, totals[1:]))


class TestTargetOnly:
    def test_hand_arithmetic(self):
        assert theory_target_only_isotropic(100, 600, 1.0, 5.0) == pytest.approx(
            500 / 600 * 5 + 100 / 500
        )

    def test_null_signal_pure_variance(self):
        assert theory_target_only_isotropic(100, 600, 1.0, 0.0) == pytest.approx(0.2)

    def test_no_data_gives_signal_norm(self):
        assert theory_target_only_isotropic(0, 600, 1.0, 5.0) == pytest.approx(5.0)

    def test_domain(self):
        with pytest.raises(DomainError):
            theory_target_only_isotropic(600, 600, 1.0, 5.0)


class TestMultiSource:
    def test_single_source_reduction(self):
        multi = theory_multi_source([(200, 1.0)], 100, 600, 1.0, 5.0)
        single = theory_min_norm_model_shift(summary())
        assert multi.total == pytest.approx(single.total)
        assert multi.b2 == pytest.approx(single.b2)

    def test_two_half_sources_hand_value(self):
        # each term: 100*500/(600*400) = 5/24
        multi = theory_multi_source([(100, 1.0), (100, 1.0)], 100, 600, 1.0, 5.0)
        assert multi.b2 == pytest.approx(2 * 100 * 500 / (600 * 400))
        assert multi.variance == pytest.approx(1.0)

    def test_zero_shifts(self):
        multi = theory_multi_source([(100, 0.0), (50, 0.0)], 100, 600, 1.0, 5.0)
        assert multi.b2 == 0.0

    def test_domain(self):
        with pytest.raises(DomainError):
            theory_multi_source([(300, 1.0), (200, 1.0)], 100, 600, 1.0, 5.0)


class TestDecisionRule:
    def test_hand_arithmetic(self):
        d = decide_transfer(5.0, 0.2, 200, 100, 600)
        assert d.snr_threshold == pytest.approx(2.4)
        assert d.rho == pytest.approx(0.39)
        assert d.recommendation == "pool" and d.regime == "high_snr"

    def test_low_snr_always_target_only(self):
        for ssr in (0.0, 0.2, 5.0):
            d = decide_transfer(2.0, ssr, 200, 100, 600)
            assert d.recommendation == "target_only" and d.regime == "low_snr"
            assert d.rho is None

    def test_large_shift_beats_any_snr(self):
        # ssr at/above (p-n)/(p-n1) loses for arbitrarily large snr
        limit = (600 - 300) / (600 - 200)
        d = decide_transfer(1e12, limit, 200, 100, 600)
        assert d.recommendation == "target_only"

    def test_consistent_with_direct_risk_comparison(self):
        p, n1, n2 = 600, 200, 100
        for snr in np.linspace(0.5, 10, 8):
            for ssr in np.linspace(0.0, 1.0, 8):
                d = decide_transfer(snr, ssr, n1, n2, p)
                pooled = theory_min_norm_model_shift(
                    summary(b2=snr, shift=snr * ssr)
                ).total
                alone = theory_target_only_isotropic(n2, p, 1.0, snr)
                if abs(pooled - alone) < 1e-9:
                    continue
                assert (d.recommendation == "pool") == (pooled <= alone), (snr, ssr)

    def test_scale_invariance_of_comparison(self):
        # the rule uses only ratios; risk differences scale linearly in c
        p, n1, n2, snr, ssr = 600, 150, 80, 4.0, 0.3
        d = decide_transfer(snr, ssr, n1, n2, p)
        for c in (0.1, 1.0, 10.0):
            pooled = theory_min_norm_model_shift(ShiftSummary(
                n1=n1, n2=n2, p=p, sigma_sq=c, beta2_norm_sq=c * snr,
                shift_norm_sq=c * snr * ssr)).total
            alone = theory_target_only_isotropic(n2, p, c, c * snr)
            assert (d.recommendation == "pool") == (pooled <= alone)


class TestOptimalTargetSize:
    def test_grid_is_local_minimum(self):
        from interp_risk.model_shift import _total_risk_unit_noise

        res = optimal_target_size(5.0, 0.2, 200, 600)
        assert res.n2_grid_opt == 103
        for delta in (-1, 1):
            neighbor = _total_risk_unit_noise(600, 200, res.n2_grid_opt + delta,
                                              5.0, 0.2)
            assert res.risk_at_grid_opt <= neighbor + 1e-12
        assert res.risk_at_grid_opt <= res.risk_at_simple_formula
        assert res.risk_at_grid_opt <= res.risk_at_stationary_formula

    def test_zero_shift_collapses_formulas(self):
        res = optimal_target_size(5.0, 0.0, 200, 600)
        assert res.n2_simple_formula == pytest.approx(res.n2_stationary_formula)
        expected = 600 - 200 - 600 / np.sqrt(5.0)
        assert res.n2_simple_formula == pytest.approx(expected)
        assert abs(res.n2_grid_opt - expected) <= 1.0

    def test_vanishing_snr_wants_no_target_data(self):
        res = optimal_target_size(1e-9, 0.2, 200, 600)
        assert res.n2_grid_opt == 0
        assert res.n2_simple_formula == 0.0
        assert res.n2_stationary_formula == 0.0

    def test_report_mentions_both_candidates(self):
        text = optimal_target_size(5.0, 0.2, 200, 600).describe()
        assert "grid optimum" in text and text.count("candidates") == 1


class TestRidgeLimits:
    def test_f1_hand_root(self):
        # p=600, n1=200, n2=100, lam=1: alpha=1/2, s=3/2 and the linear
        # coefficient vanishes, so f1 = 1/sqrt(s*gamma1) = 1/sqrt(4.5)
        q = ridge_limit_quantities(summary(), 1.0)
        assert q.alpha == pytest.approx(0.5)
        assert q.s == pytest.approx(1.5)
        assert q.f1 == pytest.approx(1.0 / np.sqrt(4.5), rel=1e-12)

    def test_resolvent_derivative_matches_finite_difference(self):
        gamma = 2.0
        for lam in (0.1, 1.0, 3.0):
            m, m_prime = mp_resolvent(lam, gamma)
            h = 1e-6 * lam
            m_lo, _ = mp_resolvent(lam - h, gamma)
            m_hi, _ = mp_resolvent(lam + h, gamma)
            fd = (m_lo - m_hi) / (2 * h)  # d/dz with z = -lam
            assert m_prime == pytest.approx(fd, rel=1e-5)
            assert m > 0

    def test_resolvent_matches_empirical_trace(self):
        rng = np.random.default_rng(5)
        p, n = 300, 150
        X = rng.standard_normal((n, p))
        sig = X.T @ X / n
        for lam in (0.1, 1.0):
            emp = np.trace(np.linalg.inv(sig + lam * np.eye(p))) / p
            m, _ = mp_resolvent(lam, p / n)
            assert abs(emp - m) / m <= 0.02

    def test_converges_to_interpolator_limit(self):
        # includes a strongly overparametrized ratio, where a naive
        # evaluation of the variance formula loses all accuracy at small
        # penalties
        for s in (summary(cross=1.2), summary(n1=30, n2=30, cross=0.5)):
            target = theory_min_norm_model_shift(s)
            gap = None
            for lam in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6):
                br, _ = theory_ridge_model_shift(s, lam)
                gap = max(
                    abs(br.variance - target.variance) / target.variance,
                    abs(br.b1 - target.b1) / target.b1,
                    abs(br.b2 - target.b2) / target.b2,
                    abs(br.b3) / target.total,  # interpolator cross term is 0
                )
            assert gap is not None and gap <= 1e-3

    def test_zero_cross_term_kills_b3(self):
        br, _ = theory_ridge_model_shift(summary(cross=0.0), 0.7)
        assert br.b3 == 0.0

    def test_matches_exact_conditional_risk(self):
        # independent finite-sample check of all four ridge components
        rng = np.random.default_rng(99)
        p, n1, n2, lam = 1200, 400, 200, 1.0
        b2n, shiftn, cross = 5.0, 1.0, 1.2
        u = rng.standard_normal(p)
        u /= np.linalg.norm(u)
        v = rng.standard_normal(p)
        v -= (v @ u) * u
        v /= np.linalg.norm(v)
        beta2 = np.sqrt(b2n) * u
        a = cross / np.sqrt(b2n)
        shift = a * u + np.sqrt(shiftn - a * a) * v
        comps = np.zeros(4)
        reps = 6
        for _ in range(reps):
            X = rng.standard_normal((n1 + n2, p))
            sig = X.T @ X / (n1 + n2)
            R = np.linalg.inv(sig + lam * np.eye(p))
            A = X[:n1].T @ X[:n1] / (n1 + n2)
            comps[0] += np.trace(R @ sig @ R) / (n1 + n2)
            comps[1] += lam * lam * beta2 @ R @ R @ beta2
            comps[2] += shift @ A @ R @ R @ A @ shift
            comps[3] += -2 * lam * beta2 @ R @ R @ A @ shift
        comps /= reps
        br, _ = theory_ridge_model_shift(
            summary(n1=n1, n2=n2, p=p, b2=b2n, shift=shiftn, cross=cross), lam
        )
        assert br.variance == pytest.approx(comps[0], rel=0.02)
        assert br.b1 == pytest.approx(comps[1], rel=0.05)
        assert br.b2 == pytest.approx(comps[2], rel=0.08)
        assert br.b3 == pytest.approx(comps[3], rel=0.10)

    def test_input_validation(self):
        with pytest.raises(InputError):
            theory_ridge_model_shift(summary(), 0.0)
        with pytest.raises(InputError):
            theory_ridge_model_shift(summary(n1=0), 1.0)


class TestShiftSummary:
    def test_cross_term_bound_enforced(self):
        with pytest.raises(InputError):
            ShiftSummary(n1=1, n2=1, p=10, sigma_sq=1.0, beta2_norm_sq=1.0,
                         shift_norm_sq=1.0, cross_term=2.0)

    def test_derived_ratios(self):
        s = summary()
        assert s.n == 300
        assert s.gamma == pytest.approx(2.0)
        assert s.gamma1 == pytest.approx(3.0)
        assert s.gamma2 == pytest.approx(6.0)
        assert s.snr == pytest.approx(5.0)
        assert s.ssr == pytest.approx(0.2)
