"""Forecast evaluation: loss functions, a predictive-ability test, and
an expanding-window backtest across model families."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .forecast import point_forecast, predictive_pmf
from .mcl import fit_mcl
from .model import CountSeries

__all__ = [
    "METRICS",
    "forecast_scores",
    "losses",
    "diebold_mariano",
    "BacktestConfig",
    "BacktestResult",
    "backtest",
]

METRICS = ("mae", "mse", "logs", "rps")

_PROB_FLOOR = 1e-300


def forecast_scores(pmfs, realized, rule="mean"):
    """Per-origin loss contributions for a batch of forecasts.

    Returns arrays keyed mae/mse/logs/rps plus the number of log-score
    evaluations that hit the probability floor (realized value carrying
    zero predictive mass).
    """
    realized = np.asarray(realized, dtype=np.int64)
    if len(pmfs) != realized.size:
        raise ValueError("forecast and outcome lengths differ")
    n = realized.size
    ae = np.empty(n)
    sq = np.empty(n)
    logs = np.empty(n)
    rps = np.empty(n)
    floored = 0
    for i, (pmf, x) in enumerate(zip(pmfs, realized)):
        point = point_forecast(pmf, rule)
        ae[i] = abs(point - x)
        sq[i] = (point - x) ** 2
        p_x = pmf.prob_of(x)
        if p_x < _PROB_FLOOR:
            p_x = _PROB_FLOOR
            floored += 1
        logs[i] = -np.log(p_x)
        grid = np.arange(pmf.probs.size)
        rps[i] = float(np.sum((pmf.cdf() - (grid >= x)) ** 2))
    return {"mae": ae, "mse": sq, "logs": logs, "rps": rps, "log_floored": floored}


def losses(pmfs, realized, rule="mean"):
    """Average losses over a batch of forecasts."""
    scores = forecast_scores(pmfs, realized, rule)
    out = {m: float(np.mean(scores[m])) for m in METRICS}
    out["log_floored"] = scores["log_floored"]
    return out


def diebold_mariano(loss_a, loss_b, horizon=1):
    """One-sided test that ``loss_a`` exceeds ``loss_b`` on average.

    The statistic is the mean loss differential over its HAC standard
    error (Bartlett weights, truncation at horizon - 1); the p-value is
    the upper normal tail. A constant nonzero differential has no
    defined variance and yields (nan, nan); identical series give
    (0, 0.5).
    """
    d = np.asarray(loss_a, dtype=float) - np.asarray(loss_b, dtype=float)
    n = d.size
    if n < 1:
        raise ValueError("empty loss series")
    horizon = int(horizon)
    dbar = float(d.mean())
    dc = d - dbar
    lrv = float(np.dot(dc, dc)) / n
    for j in range(1, min(horizon, n)):
        lrv += 2.0 * (1.0 - j / horizon) * float(np.dot(dc[:-j], dc[j:])) / n
    if lrv <= 0.0:
        if np.all(d == 0.0):
            return 0.0, 0.5
        return float("nan"), float("nan")
    stat = dbar / np.sqrt(lrv / n)
    return float(stat), float(ndtr(-stat))


@dataclass(frozen=True)
class BacktestConfig:
    """Settings for the expanding-window forecast comparison."""

    initial_window: int
    max_horizon: int
    stride: int = 24
    rule: str = "mean"
    m_cap: int = 60
    K: int | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.initial_window < 2:
            raise ValueError("initial window too small")
        if self.max_horizon < 1:
            raise ValueError("max_horizon must be positive")
        if self.stride < 1:
            raise ValueError("stride must be at least 1")
        if self.rule not in ("mean", "mode", "median"):
            raise ValueError(f"unknown point rule {self.rule!r}")


@dataclass(frozen=True, eq=False)
class BacktestResult:
    """Per-origin losses for each family, with summary helpers."""

    family_names: tuple
    config: BacktestConfig
    scores: dict
    n_origins: int
    diagnostics: dict = field(default_factory=dict)

    def mean_losses(self, name):
        """Loss means per horizon: metric -> array over horizons 1..H."""
        return {m: np.nanmean(self.scores[name][m], axis=1) for m in METRICS}

    def loss_table(self):
        """Rows of (family, horizon, mae, mse, logs, rps)."""
        rows = []
        for name in self.family_names:
            means = self.mean_losses(name)
            for h in range(1, self.config.max_horizon + 1):
                rows.append((name, h) + tuple(float(means[m][h - 1]) for m in METRICS))
        return rows

    def ratio_table(self, benchmark):
        """Loss ratios against a named benchmark family."""
        if benchmark not in self.family_names:
            raise ValueError(f"unknown benchmark {benchmark!r}")
        base = self.mean_losses(benchmark)
        out = {}
        for name in self.family_names:
            means = self.mean_losses(name)
            out[name] = {m: means[m] / base[m] for m in METRICS}
        return out

    def dm_pvalues(self, metric, horizon):
        """Matrix of one-sided p-values; entry (a, b) tests a worse than b."""
        if metric not in METRICS:
            raise ValueError(f"unknown metric {metric!r}")
        h = int(horizon)
        k = len(self.family_names)
        out = np.full((k, k), np.nan)
        for i, a in enumerate(self.family_names):
            for j, b in enumerate(self.family_names):
                if i == j:
                    continue
                la = self.scores[a][metric][h - 1]
                lb = self.scores[b][metric][h - 1]
                ok = np.isfinite(la) & np.isfinite(lb)
                if ok.sum() >= 2:
                    out[i, j] = diebold_mariano(la[ok], lb[ok], h)[1]
        return out


def backtest(families, series, config: BacktestConfig):
    """Expanding-window forecast comparison across model families.

    Each family is re-fit every ``stride`` origins on all data up to the
    origin, then forecast h = 1..max_horizon steps ahead from the last
    observed count. Failed fits fall back to the previous parameters;
    origins with no usable fit yet are skipped and counted.
    """
    values = series.values
    n = series.n
    h_max = config.max_horizon
    if config.initial_window + h_max > n:
        raise ValueError("series too short for the initial window plus horizons")
    origins = np.arange(config.initial_window, n - h_max + 1)
    n_origins = origins.size

    scores = {}
    diagnostics = {"skipped": {}, "fit_failures": {}, "log_floored": {}}
    for fam in families:
        name = fam.name
        per_metric = {m: np.full((h_max, n_origins), np.nan) for m in METRICS}
        floored = 0
        skipped = 0
        failures = 0
        theta = None
        pmf_cache = {}
        for pos, origin in enumerate(origins):
            if pos % config.stride == 0 or theta is None:
                window = CountSeries(values[:origin], series.delta, start=series.start)
                try:
                    fit = fit_mcl(fam, window, K=config.K, rng_seed=config.rng_seed)
                    theta = fit.theta
                    pmf_cache = {}
                except (ValueError, ArithmeticError, RuntimeError):
                    failures += 1
            if theta is None:
                skipped += 1
                continue
            model = fam.build(theta, series.delta)
            x_t = int(values[origin - 1])
            for h in range(1, h_max + 1):
                key = (h, x_t)
                pmf = pmf_cache.get(key)
                if pmf is None:
                    pmf = predictive_pmf(model, h * series.delta, x_t, config.m_cap)
                    pmf_cache[key] = pmf
                x_real = int(values[origin + h - 1])
                point = point_forecast(pmf, config.rule)
                per_metric["mae"][h - 1, pos] = abs(point - x_real)
                per_metric["mse"][h - 1, pos] = (point - x_real) ** 2
                p_x = pmf.prob_of(x_real)
                if p_x < _PROB_FLOOR:
                    p_x = _PROB_FLOOR
                    floored += 1
                per_metric["logs"][h - 1, pos] = -np.log(p_x)
                grid = np.arange(pmf.probs.size)
                per_metric["rps"][h - 1, pos] = float(np.sum((pmf.cdf() - (grid >= x_real)) ** 2))
        scores[name] = per_metric
        diagnostics["skipped"][name] = skipped
        diagnostics["fit_failures"][name] = failures
        diagnostics["log_floored"][name] = floored

    return BacktestResult(
        family_names=tuple(f.name for f in families),
        config=config,
        scores=scores,
        n_origins=n_origins,
        diagnostics=diagnostics,
    )
