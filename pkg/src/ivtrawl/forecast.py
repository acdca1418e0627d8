"""Conditional forecast distributions.

Conditioning on the current count splits it between the part of the
trawl set shared with the future one and the part left behind. For a
Poisson basis the shared part given the count is Binomial; for a
negative binomial basis it is Dirichlet-multinomial. Adding an
independent innovation on the new set gives the exact h-step predictive
pmf, from which point forecasts and quantiles follow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp, xlogy

from .seeds import NegBinSeed, PoissonSeed

__all__ = ["PredictivePmf", "overlap_conditional", "predictive_pmf", "point_forecast"]


@dataclass(frozen=True, eq=False)
class PredictivePmf:
    """Distribution of the count h time units ahead given the current one."""

    horizon: float
    origin_value: int
    probs: np.ndarray

    @property
    def m_cap(self):
        return self.probs.size - 1

    def cdf(self):
        return np.cumsum(self.probs)

    def mean(self):
        return float(np.dot(np.arange(self.probs.size), self.probs))

    def prob_of(self, x):
        x = int(x)
        if 0 <= x < self.probs.size:
            return float(self.probs[x])
        return 0.0

    def quantile(self, q):
        if not 0.0 < q < 1.0:
            raise ValueError("quantile level must be in (0, 1)")
        return int(min(np.searchsorted(self.cdf(), q), self.probs.size - 1))


def _check_origin(x_t):
    x = np.asarray(x_t)
    if x.ndim != 0 or x != np.floor(x) or x < 0:
        raise ValueError("conditioning value must be a nonnegative integer")
    return int(x)


def _log_overlap_pmf(model, h, x_t):
    """Log pmf of the shared-set count given the current count."""
    seed = model.seed
    trawl = model.trawl
    counts = np.arange(x_t + 1)
    choose = gammaln(x_t + 1) - gammaln(counts + 1) - gammaln(x_t - counts + 1)
    if isinstance(seed, PoissonSeed):
        rho = float(trawl.acf(h))
        return choose + xlogy(counts, rho) + xlogy(x_t - counts, 1.0 - rho)
    if isinstance(seed, NegBinSeed):
        a_new = seed.m * float(trawl.leb_difference(h))
        a_shared = seed.m * float(trawl.leb_intersection(h))
        out = np.full(x_t + 1, -np.inf)
        if a_shared == 0.0:
            out[0] = 0.0
            return out
        if a_new == 0.0:
            out[x_t] = 0.0
            return out
        return (choose
                + gammaln(a_new + x_t - counts) - gammaln(a_new)
                + gammaln(a_shared + counts) - gammaln(a_shared)
                + gammaln(a_new + a_shared) - gammaln(a_new + a_shared + x_t))
    raise ValueError(
        f"conditional forecasts are available for nonnegative seeds only, not {type(seed).__name__}"
    )


def overlap_conditional(model, h, x_t):
    """Pmf of the count on the shared trawl set given the current count."""
    h = float(h)
    if h <= 0.0:
        raise ValueError("horizon must be positive")
    x_t = _check_origin(x_t)
    return np.exp(_log_overlap_pmf(model, h, x_t))


def _predictive_probs(model, h, x_t, m_cap):
    log_w = _log_overlap_pmf(model, h, x_t)
    leb_new = float(model.trawl.leb_difference(h))
    grid = np.arange(m_cap + 1)
    log_new = model.seed.log_pmf_on_set(leb_new, grid)
    idx = grid[:, None] - np.arange(x_t + 1)[None, :]
    ok = idx >= 0
    terms = np.where(ok, log_new[np.clip(idx, 0, m_cap)], -np.inf) + log_w[None, :]
    with np.errstate(invalid="ignore"):
        return np.exp(logsumexp(terms, axis=1))


def predictive_pmf(model, h, x_t, m_cap=60):
    """Exact predictive pmf of the count h time units ahead.

    ``m_cap`` bounds the support; pass None to grow the cap until the
    omitted tail is below 1e-10.
    """
    h = float(h)
    if h <= 0.0:
        raise ValueError("horizon must be positive")
    x_t = _check_origin(x_t)
    if m_cap is not None:
        m_cap = int(m_cap)
        if m_cap < 0:
            raise ValueError("m_cap must be nonnegative")
        probs = _predictive_probs(model, h, x_t, m_cap)
        return PredictivePmf(horizon=h, origin_value=x_t, probs=probs)
    cap = max(60, int(np.ceil(model.mean() + 10.0 * np.sqrt(model.variance()) + x_t)))
    while True:
        probs = _predictive_probs(model, h, x_t, cap)
        if 1.0 - probs.sum() < 1e-10:
            return PredictivePmf(horizon=h, origin_value=x_t, probs=probs)
        if cap > 1_000_000:
            raise ArithmeticError("predictive support cap grew past 1e6 without covering the tail")
        cap *= 2


def point_forecast(pmf, rule="mean"):
    """Collapse a predictive pmf to a point: mean, mode, or median.

    The mode breaks ties toward the smaller count; the median is the
    smallest count with cdf at least one half.
    """
    if rule == "mean":
        return pmf.mean()
    if rule == "mode":
        return int(np.argmax(pmf.probs))
    if rule == "median":
        return pmf.quantile(0.5)
    raise ValueError(f"unknown point rule {rule!r}")
