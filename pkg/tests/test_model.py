import numpy as np
import pytest
from hypothesis import given, strategies as st

from binlat.model import (BinomialSeries, ModelParams, child_seed, link_b, link_b_d3,
                          link_b_ddot, link_b_dot, linear_trend, linear_trend_design,
                          replication_seeds, simulate_latent, simulate_series, simulate_trials,
                          trial_distribution)
from binlat.quadrature import gauss_hermite


def test_link_values():
    assert link_b_dot(0.0) == 0.5
    assert link_b_ddot(0.0) == 0.25
    assert link_b(30.0) == pytest.approx(30.0 + np.exp(-30.0), rel=1e-15)
    assert link_b(np.log(3.0)) == pytest.approx(np.log(4.0))


@given(st.floats(-40, 40))
def test_link_derivatives_consistent(w):
    h = 1e-5
    assert (link_b(w + h) - link_b(w - h)) / (2 * h) == pytest.approx(link_b_dot(w), abs=1e-8)
    assert (link_b_dot(w + h) - link_b_dot(w - h)) / (2 * h) == pytest.approx(link_b_ddot(w), abs=1e-8)
    assert (link_b_ddot(w + h) - link_b_ddot(w - h)) / (2 * h) == pytest.approx(link_b_d3(w), abs=1e-8)


def test_link_extremes_finite():
    w = np.array([-800.0, 800.0])
    assert np.all(np.isfinite(link_b(w)))
    assert np.allclose(link_b_dot(w), [0.0, 1.0])
    assert np.allclose(link_b_ddot(w), 0.0)


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams((1.0,), -0.1)
    with pytest.raises(ValueError):
        ModelParams((1.0,), 1.0, 1.0)
    with pytest.raises(ValueError):
        ModelParams((np.nan,), 1.0)


def test_series_validation():
    X = linear_trend_design(3)
    with pytest.raises(ValueError):
        BinomialSeries([0, 2, 1], [1, 1, 1], X)
    with pytest.raises(ValueError):
        BinomialSeries([0, 1, 1], [0, 1, 1], X)
    with pytest.raises(ValueError):
        BinomialSeries([0, 1, 1], [1, 1, 1], X[:, ::-1])


def test_linear_trend_design():
    assert np.allclose(linear_trend_design(2), [[1, 0.5], [1, 1.0]])
    assert np.allclose(linear_trend_design(4)[2], [1, 0.75])
    assert np.all(linear_trend_design(17)[:, 0] == 1)


def test_trend_grid_midpoints():
    d = linear_trend(0.25)
    assert np.allclose(d.grid(), [0.125, 0.375, 0.625, 0.875])


def test_zero_variance_latent():
    path = simulate_latent(5, ModelParams((0.0,), 0.0, 0.5), 1)
    assert np.all(path.alpha == 0)


def test_latent_stationarity():
    a = simulate_latent(10 ** 6, ModelParams((0.0,), 1.0, 0.8), 7).alpha
    assert a.var() == pytest.approx(1.0, rel=0.01)
    assert np.corrcoef(a[:-1], a[1:])[0, 1] == pytest.approx(0.8, rel=0.01)


def test_saturated_link():
    X = np.ones((50, 1))
    data = simulate_series(X, 3, ModelParams((50.0,), 0.0), 3)
    assert np.all(data.y == 3)


def test_fair_coin():
    data = simulate_series(np.ones((10 ** 6, 1)), 1, ModelParams((0.0,), 0.0), 11)
    assert abs(data.y.mean() - 0.5) < 0.002


def test_binary_marginal_mean():
    n = 10 ** 6
    data = simulate_series(linear_trend_design(n), 1, ModelParams((1.0, 2.0), 1.0), 5)
    rule = gauss_hermite(64)
    u = linear_trend(1e-3).grid()
    target = np.mean([rule.expect(lambda z: link_b_dot(1 + 2 * x + z)) for x in u])
    assert abs(data.y.mean() - target) < 0.005


def test_conditional_mean_given_latent():
    # average of y_t over replications with the latent path held fixed
    params = ModelParams((0.5,), 1.0, 0.3)
    X = np.ones((8, 1))
    seed = np.random.SeedSequence(99)
    path = simulate_latent(8, params, seed).alpha
    rng = np.random.default_rng(1)
    reps = 40000
    y = rng.binomial(3, link_b_dot(0.5 + path), size=(reps, 8))
    se = np.sqrt(3 * link_b_dot(0.5 + path) * (1 - link_b_dot(0.5 + path)) / reps)
    assert np.all(np.abs(y.mean(axis=0) - 3 * link_b_dot(0.5 + path)) < 3.5 * se)
    # and simulate_series reuses that same path for the same seed
    _, lat = simulate_series(X, 3, params, seed, return_latent=True)
    assert np.array_equal(lat.alpha, path)


def test_seed_reproducible_and_independent():
    p = ModelParams((1.0, 2.0), 1.0, 0.2)
    X = linear_trend_design(100)
    a = simulate_series(X, 2, p, 42)
    b = simulate_series(X, 2, p, 42)
    c = simulate_series(X, 2, p, 43)
    assert np.array_equal(a.y, b.y)
    assert not np.array_equal(a.y, c.y)
    s1, s2 = replication_seeds(42, 2)
    assert child_seed(42, 1).spawn_key == s2.spawn_key
    assert not np.array_equal(simulate_series(X, 2, p, s1).y, simulate_series(X, 2, p, s2).y)


def test_trial_distribution():
    assert trial_distribution(2) == {2: 1.0}
    d = trial_distribution({1: 0.25, 3: 0.75})
    assert d == {1: 0.25, 3: 0.75}
    with pytest.raises(ValueError):
        trial_distribution({1: 0.5, 2: 0.4})
    m = simulate_trials(20000, {1: 0.25, 3: 0.75}, 8)
    assert set(np.unique(m)) == {1, 3}
    assert abs((m == 3).mean() - 0.75) < 0.015
    assert np.all(simulate_trials(10, 4, 1) == 4)
