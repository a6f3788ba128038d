"""Covariate-shift solvers: reductions, quadratic oracle, residual checks."""

import numpy as np
import pytest

from interp_risk import (
    DomainError,
    InputError,
    JointSpectrum,
    MarginalSpectrum,
    SignalSpectrum,
    SolverSettings,
    heterogeneity_profile,
    risk_covariate_shift,
    solve_bias_system,
    solve_interpolator_system,
    solve_ridge_covariate,
    theory_target_only_anisotropic,
    theory_target_only_isotropic,
    theory_ridge_model_shift,
)
from interp_risk.model_shift import ShiftSummary

P, N1, N2 = 600, 200, 100


def random_spectrum(seed, atoms=20):
    rng = np.random.default_rng(seed)
    lam1 = rng.uniform(0.2, 5.0, atoms)
    lam2 = rng.uniform(0.2, 5.0, atoms)
    w = rng.uniform(0.5, 1.5, atoms)
    w /= w.sum()
    return JointSpectrum(lam1, lam2, w)


def reciprocal_pair_root(kappa, p, n1, n2):
    """Positive root of the reciprocal-pair quadratic for the first unknown."""
    n = n1 + n2
    a = 2.0 * (p - n) ** 2
    b = (p - n) * (p - 2 * n1) * (kappa + 1.0 / kappa)
    c = -2.0 * n1 * (p - n1)
    return (-b + np.sqrt(b * b - 4 * a * c)) / (2 * a)


def interp_system_residuals(H, n1, n2, p, sol):
    """Independent transcription of both interpolator-limit systems."""
    l1, l2, w = H.lam1, H.lam2, H.weight
    g = p / (n1 + n2)
    a1, a2, a3, a4 = sol.a1, sol.a2, sol.a3, sol.a4
    b1, b2, b3, b4 = sol.b1, sol.b2, sol.b3, sol.b4
    Da = a1 * l1 + a2 * l2 + 1.0
    Db = b1 * l1 + b2 * l2 + 1.0
    res = [
        1.0 - g * np.sum(w * (a1 * l1 + a2 * l2) / Da),
        n1 / (n1 + n2) - g * np.sum(w * a1 * l1 / Da),
        a1 + a2 + g * np.sum(w * (a3 * l1 + a4 * l2) / Da**2),
        a1 + g * np.sum(w * (a3 * l1 + l1 * l2 * (a3 * a2 - a4 * a1)) / Da**2),
        1.0 - g * np.sum(w * (b1 * l1 + b2 * l2) / Db),
        n1 / (n1 + n2) - g * np.sum(w * b1 * l1 / Db),
        np.sum(w * (l1 * (b3 - b1 * l2) + l2 * (b4 - b2 * l2)) / Db**2),
        np.sum(w * (l1 * (b3 - b1 * l2) + l1 * l2 * (b3 * b2 - b4 * b1)) / Db**2),
    ]
    return np.max(np.abs(res))


def ridge_system_residuals(H, n1, n2, p, sol):
    """Independent transcription of both finite-penalty systems."""
    l1, l2, w = H.lam1, H.lam2, H.weight
    g = p / (n1 + n2)
    lam = sol.lam
    a1, a2, a3, a4 = sol.a1, sol.a2, sol.a3, sol.a4
    b1, b2, b3, b4 = sol.b1, sol.b2, sol.b3, sol.b4
    Da = a1 * l1 + a2 * l2 + lam
    Db = b1 * l1 + b2 * l2 + lam
    res = [
        a1 + a2 - 1.0 + g * np.sum(w * (a1 * l1 + a2 * l2) / Da),
        a1 - n1 / (n1 + n2) + g * np.sum(w * a1 * l1 / Da),
        a3 + a4 + g * np.sum(w * (l1 * (a3 * lam - a1) + l2 * (a4 * lam - a2)) / Da**2),
        a3 + g * np.sum(w * (l1 * (a3 * lam - a1) + l1 * l2 * (a3 * a2 - a4 * a1)) / Da**2),
        b1 + b2 - 1.0 + g * np.sum(w * (b1 * l1 + b2 * l2) / Db),
        b1 - n1 / (n1 + n2) + g * np.sum(w * b1 * l1 / Db),
        b3 + b4 + g * np.sum(w * (l1 * lam * (b3 - b1 * l2) + l2 * lam * (b4 - b2 * l2)) / Db**2),
        b3 + g * np.sum(w * (l1 * lam * (b3 - b1 * l2) + l1 * l2 * (b3 * b2 - b4 * b1)) / Db**2),
    ]
    return np.max(np.abs(res))


class TestInterpolatorSystem:
    def test_isotropic_closed_form(self):
        sol = solve_interpolator_system(JointSpectrum.isotropic(), N1, N2, P)
        assert sol.a1 == pytest.approx(N1 / (P - N1 - N2), abs=1e-12)
        assert sol.a2 == pytest.approx(N2 / (P - N1 - N2), abs=1e-12)
        assert sol.residual_norm <= 1e-12

    def test_isotropic_risk_reduction(self):
        br = risk_covariate_shift(JointSpectrum.isotropic(), None, N1, N2, P,
                                  1.0, 5.0)
        n = N1 + N2
        assert br.variance == pytest.approx(n / (P - n), abs=1e-10)
        assert br.b1 == pytest.approx(5.0 * (P - n) / P, abs=1e-10)
        assert br.b2 == 0.0 and br.b3 == 0.0

    def test_reciprocal_pair_matches_quadratic_oracle(self):
        for kappa in (1.5, 2.0, 4.0, 10.0):
            for frac in (0.1, 0.3, 0.45):
                n1 = int(frac * P)
                sol = solve_interpolator_system(
                    JointSpectrum.reciprocal_pair(kappa), n1, N2, P
                )
                assert sol.a1 == pytest.approx(
                    reciprocal_pair_root(kappa, P, n1, N2), abs=1e-8
                ), (kappa, frac)

    def test_unit_kappa_reduces_to_isotropic(self):
        iso = solve_interpolator_system(JointSpectrum.isotropic(), N1, N2, P)
        pair = solve_interpolator_system(JointSpectrum.reciprocal_pair(1.0),
                                         N1, N2, P)
        assert pair.a1 == pytest.approx(iso.a1, abs=1e-12)
        assert pair.a2 == pytest.approx(iso.a2, abs=1e-12)

    def test_bias_system_shares_first_two_unknowns(self):
        cfg = SolverSettings()
        for seed in range(3):
            H = random_spectrum(seed)
            sol = solve_interpolator_system(H, N1, N2, P, cfg)
            b = solve_bias_system(H, N1, N2, P, cfg)
            assert abs(b[0] - sol.a1) + abs(b[1] - sol.a2) <= 10 * cfg.tol

    def test_residual_certification_random_spectra(self):
        for seed in range(10):
            H = random_spectrum(seed)
            sol = solve_interpolator_system(H, N1, N2, P)
            assert sol.residual_norm <= 1e-10
            assert interp_system_residuals(H, N1, N2, P, sol) <= 1e-10
            assert sol.a1 > 0 and sol.a2 > 0 and sol.b1 > 0 and sol.b2 > 0

    def test_empty_source_branch(self):
        H = random_spectrum(3)
        sol = solve_interpolator_system(H, 0, N2, P)
        assert sol.a1 == 0.0
        assert sol.residual_norm <= 1e-12
        # pooled with no source data equals the target-only fit
        iso = JointSpectrum.isotropic()
        br = risk_covariate_shift(iso, None, 0, N2, P, 1.0, 5.0)
        assert br.total == pytest.approx(
            theory_target_only_isotropic(N2, P, 1.0, 5.0), abs=1e-10
        )

    def test_dimension_guard(self):
        with pytest.raises(DomainError):
            solve_interpolator_system(JointSpectrum.isotropic(), 400, 300, P)

    def test_spectrum_validation(self):
        with pytest.raises(InputError):
            JointSpectrum(np.array([1.0]), np.array([1.0]), np.array([0.5]))
        with pytest.raises(InputError):
            JointSpectrum(np.array([-1.0]), np.array([1.0]), np.array([1.0]))
        with pytest.raises(InputError):
            SignalSpectrum(np.array([1.0, 1.0]), np.array([1.0, 1.0]),
                           np.array([1.5, -0.5]))


class TestIdentityTargetCovariance:
    def test_bias_independent_of_source_eigenvalues(self):
        # with unit target eigenvalues and matching signal weights the bias
        # depends only on the dimensions
        expected = 5.0 * (P - N1 - N2) / P
        for kappa in (1.0, 2.0, 4.0, 10.0):
            br = risk_covariate_shift(JointSpectrum.reciprocal_pair(kappa),
                                      None, N1, N2, P, 1.0, 5.0)
            assert br.b1 == pytest.approx(expected, abs=1e-10), kappa

    def test_small_source_heterogeneity_helps(self):
        r_iso = risk_covariate_shift(JointSpectrum.reciprocal_pair(1.0), None,
                                     200, N2, P, 1.0, 5.0).total
        r_het = risk_covariate_shift(JointSpectrum.reciprocal_pair(4.0), None,
                                     200, N2, P, 1.0, 5.0).total
        assert r_het < r_iso

    def test_monotone_in_kappa_both_regimes(self):
        for n1, increasing in ((200, False), (350, True)):
            risks = [
                risk_covariate_shift(JointSpectrum.reciprocal_pair(k), None,
                                     n1, N2, P, 1.0, 5.0).total
                for k in (1.0, 2.0, 4.0, 8.0)
            ]
            diffs = np.diff(risks)
            assert np.all(diffs > 0) if increasing else np.all(diffs < 0), n1

    def test_crossing_point_invariance(self):
        risks = [
            risk_covariate_shift(JointSpectrum.reciprocal_pair(k), None,
                                 300, N2, P, 1.0, 5.0).total
            for k in (1.0, 2.0, 4.0, 8.0)
        ]
        assert max(risks) - min(risks) <= 1e-8

    def test_heterogeneity_profile_rows_and_labels(self):
        prof = heterogeneity_profile([1.0, 2.0, 4.0], 200, N2, P, 1.0, 5.0)
        assert prof.classification == "hetero_lowers_risk"
        assert prof.rows[0][2] == pytest.approx(0.0, abs=1e-12)  # kappa = 1
        assert prof.rows[2][1] < prof.rows[1][1] < prof.rows[0][1]
        assert heterogeneity_profile([2.0], 350, N2, P, 1.0, 5.0).classification == \
            "hetero_raises_risk"
        assert heterogeneity_profile([2.0], 300, N2, P, 1.0, 5.0).classification == \
            "kappa_invariant"
        with pytest.raises(InputError):
            heterogeneity_profile([0.5], 200, N2, P, 1.0, 5.0)


class TestRidgeSystem:
    def test_residual_certification(self):
        for seed in range(5):
            H = random_spectrum(seed)
            _, sol = solve_ridge_covariate(H, None, N1, N2, P, 1.0, 5.0, 1.0)
            assert sol.residual_norm <= 1e-10
            assert ridge_system_residuals(H, N1, N2, P, sol) <= 1e-10
            assert sol.a1 > 0 and sol.a2 > 0

    def test_small_penalty_rescaling_matches_interpolator(self):
        lam = 1e-6
        for kappa in (2.0, 4.0):
            H = JointSpectrum.reciprocal_pair(kappa)
            interp = solve_interpolator_system(H, N1, N2, P)
            _, sol = solve_ridge_covariate(H, None, N1, N2, P, 1.0, 5.0, lam)
            assert sol.a1 / lam == pytest.approx(interp.a1, rel=1e-3)
            assert sol.a2 / lam == pytest.approx(interp.a2, rel=1e-3)

    def test_isotropic_matches_model_shift_ridge_variance(self):
        s = ShiftSummary(n1=N1, n2=N2, p=P, sigma_sq=1.0, beta2_norm_sq=5.0,
                         shift_norm_sq=0.0)
        for lam in (1.0, 0.1):
            br_cov, _ = solve_ridge_covariate(JointSpectrum.isotropic(), None,
                                              N1, N2, P, 1.0, 5.0, lam)
            br_ms, _ = theory_ridge_model_shift(s, lam)
            assert br_cov.variance == pytest.approx(br_ms.variance, abs=1e-6)
            assert br_cov.b1 == pytest.approx(br_ms.b1, abs=1e-6)

    def test_infinite_penalty_kills_variance(self):
        br, _ = solve_ridge_covariate(JointSpectrum.reciprocal_pair(4.0), None,
                                      N1, N2, P, 1.0, 5.0, 1e8)
        assert br.variance <= 1e-10
        assert br.b1 == pytest.approx(5.0, rel=1e-6)

    def test_penalty_validation(self):
        with pytest.raises(InputError):
            solve_ridge_covariate(JointSpectrum.isotropic(), None, N1, N2, P,
                                  1.0, 5.0, 0.0)


class TestTargetOnlyAnisotropic:
    def test_isotropic_marginal_reduction(self):
        risk = theory_target_only_anisotropic(MarginalSpectrum.isotropic(), None,
                                              N2, P, 1.0, 5.0)
        assert risk == pytest.approx(theory_target_only_isotropic(N2, P, 1.0, 5.0),
                                     abs=1e-10)

    def test_null_signal_pure_variance(self):
        risk = theory_target_only_anisotropic(MarginalSpectrum.isotropic(), None,
                                              N2, P, 1.0, 0.0)
        assert risk == pytest.approx(N2 / (P - N2), abs=1e-10)

    def test_two_atom_fixed_point_matches_scan(self):
        marg = MarginalSpectrum(np.array([2.0, 0.5]), np.array([0.5, 0.5]))
        gs = P / N2

        def residual(c0):
            return (1 - 1 / gs) - np.sum(
                marg.weight * marg.lam / (1 + c0 * gs * marg.lam)
            )

        grid = np.arange(0.0, 0.5, 1e-6)
        scan_c0 = grid[np.argmin(np.abs([residual(c) for c in grid]))]
        # recover the solver's c0 through the same fixed point
        from interp_risk._roots import monotone_root
        c0 = monotone_root(residual)
        assert abs(c0 - scan_c0) <= 1e-6
        risk = theory_target_only_anisotropic(marg, None, N2, P, 1.0, 5.0)
        assert np.isfinite(risk) and risk > 0

    def test_domain_guard(self):
        with pytest.raises(DomainError):
            theory_target_only_anisotropic(MarginalSpectrum.isotropic(), None,
                                           600, 600, 1.0, 5.0)


class TestSignalSpectrumSupport:
    def test_mismatched_support_rejected(self):
        H = JointSpectrum.reciprocal_pair(2.0)
        G = SignalSpectrum(np.array([3.0, 1 / 3.0]), np.array([1.0, 1.0]),
                           np.array([0.5, 0.5]))
        with pytest.raises(InputError):
            risk_covariate_shift(H, G, N1, N2, P, 1.0, 5.0)

    def test_skewed_signal_weights_change_bias(self):
        H = JointSpectrum.reciprocal_pair(4.0)
        # all signal mass on the strong source directions
        G = SignalSpectrum(H.lam1.copy(), H.lam2.copy(), np.array([1.0, 0.0]))
        skew = risk_covariate_shift(H, G, N1, N2, P, 1.0, 5.0)
        flat = risk_covariate_shift(H, None, N1, N2, P, 1.0, 5.0)
        assert skew.b1 != pytest.approx(flat.b1, rel=1e-3)
        assert skew.variance == pytest.approx(flat.variance, abs=1e-12)
