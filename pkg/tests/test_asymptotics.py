import warnings

import numpy as np
import pytest
from scipy.stats import norm, truncnorm

from binlat.asymptotics import (analytic_report, empirical_omega11_hat, glm_sandwich,
                                kappa_bounds, kappa_from_ratios, lag_truncation,
                                linearity_diagnostic, marginal_sandwich, mixture_from_report,
                                mixture_moments, omega11, omega12, score_moments,
                                truncated_tau_moments)
from binlat.errors import NearSingularWarning
from binlat.glm import glm_fit
from binlat.marginal import observation_scores
from binlat.model import ModelParams, TrendDesign, linear_trend, linear_trend_design, simulate_series

P0 = ModelParams((1.0, 2.0), 1.0, 0.0)


def test_lag_truncation():
    assert lag_truncation(0.0) == 0
    for phi in (0.2, -0.8, 0.8):
        H = lag_truncation(phi)
        assert abs(phi) ** (H + 1) < 1e-8 <= abs(phi) ** H
    assert lag_truncation(0.999999) == 10_000
    with pytest.raises(ValueError):
        lag_truncation(1.0)


def test_omega12_equals_omega11_without_dependence():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearSingularWarning)
        assert np.allclose(omega12(P0, m_dist=2), omega11(P0.delta, m_dist=2), atol=1e-8, rtol=0)


def test_omega11_positive_definite_and_symmetric():
    O = omega11(P0.delta, m_dist=3)
    assert np.allclose(O, O.T)
    assert np.all(np.linalg.eigvalsh(O) > 0)
    with pytest.raises(ValueError):
        omega11([1.0, 2.0, 0.0])


def test_near_singularity_warned():
    # a binary series with a flat zero predictor has a vanishing tau-score
    notes = []
    with pytest.warns(NearSingularWarning):
        marginal_sandwich(ModelParams((0.0, 0.0), 1e-3), m_dist=1, notes=notes)
    assert notes


def test_dependence_inflates_tau_variance():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearSingularWarning)
        S0 = marginal_sandwich(P0, m_dist=2)[2]
        S1 = marginal_sandwich(ModelParams((1.0, 2.0), 1.0, 0.2), m_dist=2)[2]
    assert np.all(np.diag(S1) > np.diag(S0))


def test_glm_sandwich_without_latent_is_inverse_information():
    gs = glm_sandwich(ModelParams((1.0, 2.0), 0.0, 0.5))
    assert np.allclose(gs.beta_prime, [1.0, 2.0])
    assert np.allclose(gs.sandwich, np.linalg.inv(gs.omega1), rtol=1e-10)


def test_glm_sandwich_monte_carlo():
    gs = glm_sandwich(P0)
    X = linear_trend_design(5000)
    est = np.array([glm_fit(simulate_series(X, 1, P0, np.random.SeedSequence(2, spawn_key=(k,)))).beta_tilde
                    for k in range(2000)])
    cov = np.cov(est.T)
    assert np.allclose(np.diag(cov), np.diag(gs.sandwich) / 5000, rtol=0.10)
    assert np.allclose(est.mean(axis=0), gs.beta_prime, atol=0.03)


def test_score_moments_m2():
    sm = score_moments(P0, m_dist=2)
    assert sm.c_S == pytest.approx(0.034, rel=0.03)
    assert sm.sigma_S == pytest.approx(0.303, rel=0.03)
    assert sm.c_S / sm.sigma_S == pytest.approx(0.1110, rel=0.03)


def test_score_moments_no_latent():
    sm = score_moments(ModelParams((1.0, 2.0), 0.0))
    assert abs(sm.c1) < 1e-15 and abs(sm.c2) < 1e-15


def test_score_moments_modes_agree_for_binary():
    # for m = 1 the binomial and exact fourth moments coincide
    a = score_moments(P0, m_dist=1, moments="binomial")
    b = score_moments(P0, m_dist=1, moments="exact")
    assert a.sigma_S == pytest.approx(b.sigma_S, rel=1e-10)


@pytest.mark.parametrize("m", [1, 2, 3])
@pytest.mark.parametrize("phi", [0.0, 0.2, -0.2])
def test_score_mean_non_negative_on_grid(m, phi):
    assert score_moments(ModelParams((1.0, 2.0), 1.0, phi), m_dist=m).c_S >= 0


def test_kappa_values():
    k1, k2 = kappa_bounds(P0, n=200)
    assert 100 * k1 == pytest.approx(48.70, abs=0.5)
    assert 100 * k2 == pytest.approx(49.20, abs=0.5)
    k1, _ = kappa_bounds(P0, n=5000)
    assert 100 * k1 == pytest.approx(43.54, abs=0.5)
    k1, _ = kappa_from_ratios(1e6, 0.0023, 1.0, 698.0)
    assert k1 == pytest.approx(norm.cdf(-2.3), rel=1e-12)
    assert k1 == pytest.approx(0.01, abs=0.001)


def test_truncated_tau_moments():
    mean, var = truncated_tau_moments(1.0, 0.5)
    sd = np.sqrt(0.5)
    ref = truncnorm(-1.0 / sd, np.inf, loc=1.0, scale=sd)
    assert mean == pytest.approx(ref.mean() - 1.0)
    assert var == pytest.approx(ref.var())


def test_mixture_zero_shift():
    mm = mixture_moments(P0, n=200, tau_moments=(0.0, 0.5))
    assert np.allclose(mm.interior_mean, [1.0, 2.0])


def test_mixture_table_values():
    mm = mixture_moments(P0, n=200, tau_moments=(0.64, 0.69))
    assert np.allclose(mm.interior_mean, [1.10, 2.15], rtol=0.05)
    assert np.allclose(mm.interior_sd, [0.421, 0.819], rtol=0.05)
    assert np.allclose(mm.boundary_mean, [0.82, 1.76], rtol=0.05)
    assert np.allclose(mm.boundary_sd, [0.344, 0.700], rtol=0.05)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearSingularWarning)
        rep = analytic_report(P0, n=(200,))
    mr = mixture_from_report(rep, [1.0, 2.0], 1.0, 200, (0.64, 0.69))
    assert np.allclose(mr.interior_mean, mm.interior_mean)
    assert np.allclose(mr.boundary_cov, mm.boundary_cov)


def test_conditioned_boundary_narrows():
    a = mixture_moments(P0, n=200, tau_moments=(0.64, 0.69))
    b = mixture_moments(P0, n=200, tau_moments=(0.64, 0.69), conditioned=True)
    assert np.all(b.boundary_sd <= a.boundary_sd + 1e-12)
    assert np.all(np.isfinite(b.boundary_mean))


def test_empirical_omega11_consistent():
    n = 10 ** 5
    data = simulate_series(linear_trend_design(n), 1, P0, 17)
    emp = empirical_omega11_hat(P0.delta, data)
    pop = omega11(P0.delta)
    # per-observation Hessians by differencing the per-observation scores
    h = 1e-5
    rows = []
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        rows.append((observation_scores(P0.delta + e, data)
                     - observation_scores(P0.delta - e, data)) / (2 * h))
    per_obs = -np.stack(rows, axis=2)           # (n, 3, 3)
    se = per_obs.std(axis=0) / np.sqrt(n)
    assert np.allclose(emp, per_obs.mean(axis=0), rtol=1e-4)
    assert np.all(np.abs(emp - pop) <= 3 * se + 1e-12)


def test_linearity_constant_predictor():
    design = TrendDesign(lambda u: np.column_stack([np.ones_like(u), u]), 1e-3)
    diag = linearity_diagnostic([0.5, 0.0, 1.0], design)
    assert diag.max_abs_residual == 0.0 and diag.near_linear


def test_linearity_binary_design_flagged():
    diag = linearity_diagnostic(P0.delta)
    assert diag.near_linear
    assert diag.rms_residual < 0.01


def test_linearity_wide_range_not_flagged():
    diag = linearity_diagnostic([-6.0, 12.0, 1.0], linear_trend(1e-3))
    assert diag.max_abs_residual > 0.1
    assert not diag.near_linear


def test_report_consistency():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearSingularWarning)
        rep = analytic_report(P0, m_dist=2, n=(200, 500))
    assert rep.asd.shape == (2, 3)
    assert np.allclose(rep.asd[0], [0.327, 0.623, 0.789], rtol=0.02)
    assert np.all(rep.kappa1_bar[1] < rep.kappa1_bar[0])
    assert rep.condition_numbers["omega11"] > 1
