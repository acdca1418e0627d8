"""Scoring rules, forecast comparison tests, and the rolling backtest."""

import numpy as np
import pytest

from ivtrawl import (
    BacktestConfig,
    backtest,
    diebold_mariano,
    family,
    forecast_scores,
    losses,
    simulate_path,
    PredictivePmf,
)


def unit_pmf(probs, origin=0):
    return PredictivePmf(horizon=1.0, origin_value=origin, probs=np.asarray(probs))


def test_point_mass_on_realized_value_scores_zero():
    pmfs = [unit_pmf([0.0, 0.0, 1.0])]
    scores = forecast_scores(pmfs, np.array([2]))
    assert scores["mae"][0] == 0.0
    assert scores["mse"][0] == 0.0
    assert scores["logs"][0] == 0.0
    assert scores["rps"][0] == 0.0


def test_log_score_of_even_coin():
    pmfs = [unit_pmf([0.5, 0.5])]
    scores = forecast_scores(pmfs, np.array([1]))
    assert scores["logs"][0] == pytest.approx(0.6931471805599453)


def test_ranked_probability_score_hand_values():
    # cdf (0.3, 1.0) against realization 1: (0.3-0)^2 + (1-1)^2 = 0.09
    pmfs = [unit_pmf([0.3, 0.7])]
    scores = forecast_scores(pmfs, np.array([1]))
    assert scores["rps"][0] == pytest.approx(0.09)
    # realization 0: (0.3-1)^2 + 0 = 0.49
    scores = forecast_scores(pmfs, np.array([0]))
    assert scores["rps"][0] == pytest.approx(0.49)


def test_absolute_and_squared_error_use_point_rule():
    pmfs = [unit_pmf([0.0, 0.25, 0.25, 0.5])]
    realized = np.array([0])
    mean_scores = forecast_scores(pmfs, realized, rule="mean")
    assert mean_scores["mae"][0] == pytest.approx(2.25)
    assert mean_scores["mse"][0] == pytest.approx(2.25**2)
    mode_scores = forecast_scores(pmfs, realized, rule="mode")
    assert mode_scores["mae"][0] == 3.0


def test_zero_probability_realization_is_floored_and_counted():
    pmfs = [unit_pmf([1.0, 0.0])]
    scores = forecast_scores(pmfs, np.array([1]))
    assert scores["logs"][0] == pytest.approx(-np.log(1e-300))
    assert scores["log_floored"] == 1


def test_realization_beyond_cap_is_floored():
    pmfs = [unit_pmf([0.6, 0.4])]
    scores = forecast_scores(pmfs, np.array([9]))
    assert np.isfinite(scores["logs"][0])
    assert scores["log_floored"] == 1
    assert scores["mae"][0] == pytest.approx(9 - 0.4)


def test_length_mismatch_rejected():
    with pytest.raises(ValueError):
        forecast_scores([unit_pmf([1.0])], np.array([0, 1]))


def test_losses_are_score_means():
    pmfs = [unit_pmf([0.5, 0.5]), unit_pmf([0.25, 0.75])]
    realized = np.array([0, 1])
    table = losses(pmfs, realized)
    per = forecast_scores(pmfs, realized)
    for metric in ("mae", "mse", "logs", "rps"):
        assert table[metric] == pytest.approx(float(np.mean(per[metric])))


# ---------------------------------------------------------------------------
# Diebold-Mariano


def test_dm_identical_losses_give_neutral_result():
    d = np.ones(50)
    stat, p = diebold_mariano(d, d)
    assert stat == 0.0
    assert p == 0.5


def test_dm_constant_nonzero_differential_is_degenerate():
    stat, p = diebold_mariano(np.ones(50), np.zeros(50))
    assert np.isnan(stat) and np.isnan(p)


def test_dm_detects_known_mean_shift():
    rng = np.random.default_rng(5)
    n = 1000
    d = rng.normal(loc=1.0, scale=1.0, size=n)
    stat, p = diebold_mariano(d, np.zeros(n))
    assert stat == pytest.approx(np.sqrt(n), rel=0.12)
    assert p < 1e-6


def test_dm_longer_horizon_widens_the_band():
    rng = np.random.default_rng(11)
    e = rng.normal(size=2001)
    d = 0.3 + e[1:] + 0.9 * e[:-1]  # MA(1) differential, as for two-step forecasts
    stat1, _ = diebold_mariano(d, np.zeros(d.size), horizon=1)
    stat2, _ = diebold_mariano(d, np.zeros(d.size), horizon=2)
    assert abs(stat2) < abs(stat1)


def test_dm_one_sided_orientation():
    rng = np.random.default_rng(3)
    d = rng.normal(loc=-0.5, size=400)
    stat, p = diebold_mariano(d, np.zeros(400))
    assert stat < 0
    assert p > 0.999  # first model is better, so no evidence it is worse


# ---------------------------------------------------------------------------
# backtest


def test_backtest_config_validation():
    with pytest.raises(ValueError):
        BacktestConfig(initial_window=0, max_horizon=5)
    with pytest.raises(ValueError):
        BacktestConfig(initial_window=100, max_horizon=0)
    with pytest.raises(ValueError):
        BacktestConfig(initial_window=100, max_horizon=5, stride=0)
    with pytest.raises(ValueError):
        BacktestConfig(initial_window=100, max_horizon=5, rule="nonsense")


def test_backtest_series_must_cover_window_and_horizon():
    series = simulate_path(family("poisson-exp").build([5.0, 1.0], 0.1), 50, rng_seed=0)
    config = BacktestConfig(initial_window=49, max_horizon=5)
    with pytest.raises(ValueError):
        backtest([family("poisson-exp")], series, config)


def test_backtest_shapes_and_summaries():
    series = simulate_path(family("poisson-exp").build([17.5, 1.8], 0.1), 260, rng_seed=15)
    config = BacktestConfig(initial_window=200, max_horizon=3, stride=30, K=1)
    fams = [family("poisson-exp"), family("nb-exp")]
    result = backtest(fams, series, config)
    n_origins = 260 - 3 - 200 + 1
    assert result.n_origins == n_origins
    assert result.family_names == ("poisson-exp", "nb-exp")
    arr = result.scores["poisson-exp"]["logs"]
    assert arr.shape == (3, n_origins)
    assert np.isfinite(arr).all()

    means = result.mean_losses("poisson-exp")
    np.testing.assert_allclose(means["logs"], np.mean(arr, axis=1), rtol=1e-12)

    rows = result.loss_table()
    assert len(rows) == 2 * 3
    assert rows[0][0] == "poisson-exp" and rows[0][1] == 1

    ratios = result.ratio_table("poisson-exp")
    np.testing.assert_allclose(ratios["poisson-exp"]["logs"], 1.0, rtol=1e-12)
    assert set(ratios) == {"poisson-exp", "nb-exp"}

    pvals = result.dm_pvalues("logs", horizon=1)
    assert pvals.shape == (2, 2)
    assert np.isnan(pvals[0, 0]) and np.isnan(pvals[1, 1])
    assert 0.0 <= pvals[0, 1] <= 1.0
    with pytest.raises(ValueError):
        result.ratio_table("unknown-family")
    with pytest.raises(ValueError):
        result.dm_pvalues("accuracy", horizon=1)


def test_backtest_runs_without_fit_failures():
    series = simulate_path(family("poisson-exp").build([17.5, 1.8], 0.1), 240, rng_seed=2)
    config = BacktestConfig(initial_window=200, max_horizon=2, stride=10, K=1)
    result = backtest([family("poisson-exp")], series, config)
    assert result.diagnostics["fit_failures"]["poisson-exp"] == 0
    assert result.diagnostics["skipped"]["poisson-exp"] == 0
    assert np.isfinite(result.scores["poisson-exp"]["mae"]).all()


def test_backtest_scores_against_hand_recomputation():
    """Losses recomputed from a single fit must agree exactly."""
    from ivtrawl import fit_mcl, predictive_pmf, CountSeries

    fam = family("poisson-exp")
    series = simulate_path(fam.build([17.5, 1.8], 0.1), 230, rng_seed=33)
    h_max = 2
    config = BacktestConfig(
        initial_window=220, max_horizon=h_max, stride=10**9, K=1, m_cap=60
    )
    result = backtest([fam], series, config)

    window = CountSeries(series.values[:220], series.delta)
    fit = fit_mcl(fam, window, K=1)
    model = fit.model()
    x = series.values
    origins = np.arange(220, series.n - h_max + 1)
    for h in range(1, h_max + 1):
        pmfs = [predictive_pmf(model, h * 0.1, int(x[t - 1]), m_cap=60) for t in origins]
        realized = x[origins + h - 1]
        expected = forecast_scores(pmfs, realized)
        for metric in ("logs", "rps", "mae"):
            np.testing.assert_allclose(
                result.scores["poisson-exp"][metric][h - 1],
                expected[metric],
                rtol=1e-12,
            )
