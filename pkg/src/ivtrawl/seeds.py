"""Integer-valued Levy seeds and the law of the basis on a set.

A seed fixes the distribution of the random measure per unit Lebesgue
measure. Evaluating the basis on a set B of measure ``leb`` gives a
Poisson, negative binomial or Skellam count whose parameters scale
linearly in ``leb``. All probability mass functions are evaluated in
log space with log-gamma and exponentially scaled Bessel functions so
that large counts or large sets never overflow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, ive, xlogy

__all__ = [
    "EvaluationError",
    "CompoundPoissonRep",
    "PoissonSeed",
    "NegBinSeed",
    "SkellamSeed",
]

_LOG_TINY = -745.0  # below exp underflow; used only for truncation scans


class EvaluationError(ArithmeticError):
    """A special-function evaluation produced a NaN instead of a number."""


@dataclass(frozen=True, eq=False)
class CompoundPoissonRep:
    """Compound-Poisson form of an integer-valued basis.

    ``total_intensity`` is the jump rate per unit Lebesgue measure;
    ``mark_values`` / ``mark_probs`` give the normalized law of a single
    jump size (zero excluded).
    """

    total_intensity: float
    mark_values: np.ndarray
    mark_probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mark_values", np.asarray(self.mark_values, dtype=np.int64))
        probs = np.asarray(self.mark_probs, dtype=float)
        object.__setattr__(self, "mark_probs", probs)
        if self.total_intensity <= 0:
            raise ValueError("total_intensity must be positive")
        if np.any(self.mark_values == 0):
            raise ValueError("marks must be nonzero integers")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError("mark_probs must form a probability vector")
        object.__setattr__(self, "_mark_cdf", np.cumsum(probs))

    def mark_pmf(self, y):
        """Probability of a single jump of size ``y``."""
        y = np.asarray(y)
        out = np.zeros(y.shape, dtype=float)
        for val, pr in zip(self.mark_values, self.mark_probs):
            out = np.where(y == val, pr, out)
        return out if out.ndim else float(out)

    def sample_marks(self, size, rng):
        """Draw ``size`` iid jump sizes."""
        idx = np.searchsorted(self._mark_cdf, rng.random(size), side="right")
        idx = np.minimum(idx, len(self.mark_values) - 1)
        return self.mark_values[idx]


def _check_leb(leb):
    if leb < 0:
        raise ValueError(f"set measure must be nonnegative, got {leb}")
    return float(leb)


def _point_mass_at_zero(x):
    x = np.asarray(x)
    out = np.where(x == 0, 0.0, -np.inf)
    return out


def _validated(logp):
    if np.any(np.isnan(logp)):
        raise EvaluationError("log-pmf evaluation produced NaN")
    return logp


@dataclass(frozen=True)
class PoissonSeed:
    """Poisson seed with mean ``intensity`` per unit Lebesgue measure."""

    intensity: float

    def __post_init__(self):
        if not self.intensity > 0:
            raise ValueError("intensity must be positive")

    @property
    def nonnegative(self):
        return True

    def cumulant(self, order):
        if order not in (1, 2, 3, 4):
            raise ValueError("cumulant order must be in 1..4")
        return self.intensity

    def log_pmf_on_set(self, leb, x):
        leb = _check_leb(leb)
        x = np.asarray(x)
        if leb == 0.0:
            return _point_mass_at_zero(x)
        mu = self.intensity * leb
        with np.errstate(divide="ignore", invalid="ignore"):
            logp = xlogy(x, mu) - mu - gammaln(x + 1.0)
        logp = np.where(x >= 0, logp, -np.inf)
        return _validated(logp)

    def pmf_on_set(self, leb, x):
        return np.exp(self.log_pmf_on_set(leb, x))

    def compound_poisson_rep(self):
        return CompoundPoissonRep(self.intensity, np.array([1]), np.array([1.0]))

    def sample_on_set(self, leb, size, rng):
        leb = _check_leb(leb)
        return rng.poisson(self.intensity * leb, size=size)

    def support_bounds(self, leb, tail=1e-12):
        return _nonnegative_bounds(self, leb, tail)


@dataclass(frozen=True)
class NegBinSeed:
    """Negative binomial seed.

    On a set of measure ``leb`` the basis has pmf
    ``Gamma(r + x) / (x! Gamma(r)) (1 - p)^r p^x`` with ``r = m * leb``,
    so ``m`` acts as a shape rate per unit measure and ``p`` in (0, 1)
    weights the counts.
    """

    m: float
    p: float

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError("m must be positive")
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie strictly between 0 and 1")

    @property
    def nonnegative(self):
        return True

    def cumulant(self, order):
        m, p = self.m, self.p
        q = 1.0 - p
        if order == 1:
            return p * m / q
        if order == 2:
            return p * m / q**2
        if order == 3:
            return p * m * (1.0 + p) / q**3
        if order == 4:
            return p * m * (1.0 + 4.0 * p + p * p) / q**4
        raise ValueError("cumulant order must be in 1..4")

    def log_pmf_on_set(self, leb, x):
        leb = _check_leb(leb)
        x = np.asarray(x)
        if leb == 0.0:
            return _point_mass_at_zero(x)
        r = self.m * leb
        xs = np.where(x >= 0, x, 0)
        logp = (
            gammaln(r + xs)
            - gammaln(r)
            - gammaln(xs + 1.0)
            + r * np.log1p(-self.p)
            + xs * np.log(self.p)
        )
        logp = np.where(x >= 0, logp, -np.inf)
        return _validated(logp)

    def pmf_on_set(self, leb, x):
        return np.exp(self.log_pmf_on_set(leb, x))

    def compound_poisson_rep(self):
        # Logarithmic jump sizes: eta(y) = p^y / y, so the total rate is
        # -m log(1-p) and single jumps follow the logarithmic law.
        rate = -self.m * np.log1p(-self.p)
        norm = -np.log1p(-self.p)
        n_terms = max(60, int(np.ceil(np.log(1e-18) / np.log(self.p))))
        y = np.arange(1, n_terms + 1)
        probs = self.p**y / (y * norm)
        probs = probs / probs.sum()
        return CompoundPoissonRep(rate, y, probs)

    def sample_on_set(self, leb, size, rng):
        leb = _check_leb(leb)
        if leb == 0.0:
            return np.zeros(size, dtype=np.int64)
        # numpy counts failures before r successes with success prob 1-p,
        # which matches the pmf above.
        return rng.negative_binomial(self.m * leb, 1.0 - self.p, size=size)

    def support_bounds(self, leb, tail=1e-12):
        return _nonnegative_bounds(self, leb, tail)


@dataclass(frozen=True)
class SkellamSeed:
    """Difference of two independent Poisson components.

    ``up_rate`` and ``down_rate`` are the intensities per unit measure of
    the positive and negative unit jumps.
    """

    up_rate: float
    down_rate: float

    def __post_init__(self):
        if not (self.up_rate > 0 and self.down_rate > 0):
            raise ValueError("up_rate and down_rate must be positive")

    @property
    def nonnegative(self):
        return False

    def cumulant(self, order):
        if order not in (1, 2, 3, 4):
            raise ValueError("cumulant order must be in 1..4")
        if order % 2 == 1:
            return self.up_rate - self.down_rate
        return self.up_rate + self.down_rate

    def log_pmf_on_set(self, leb, x):
        leb = _check_leb(leb)
        x = np.asarray(x)
        if leb == 0.0:
            return _point_mass_at_zero(x)
        a = self.up_rate * leb
        b = self.down_rate * leb
        z = 2.0 * np.sqrt(a * b)
        k = np.abs(x)
        with np.errstate(divide="ignore"):
            log_bessel = np.log(ive(k, z)) + z
        logp = -(a + b) + 0.5 * x * (np.log(a) - np.log(b)) + log_bessel
        return _validated(logp)

    def pmf_on_set(self, leb, x):
        return np.exp(self.log_pmf_on_set(leb, x))

    def compound_poisson_rep(self):
        rate = self.up_rate + self.down_rate
        probs = np.array([self.up_rate / rate, self.down_rate / rate])
        return CompoundPoissonRep(rate, np.array([1, -1]), probs)

    def sample_on_set(self, leb, size, rng):
        leb = _check_leb(leb)
        return rng.poisson(self.up_rate * leb, size=size) - rng.poisson(
            self.down_rate * leb, size=size
        )

    def support_bounds(self, leb, tail=1e-12):
        if leb == 0.0:
            return 0, 0
        mean = self.cumulant(1) * leb
        sd = np.sqrt(self.cumulant(2) * leb)
        width = int(np.ceil(12.0 * sd + 40.0))
        lo = int(np.floor(mean)) - width
        hi = int(np.ceil(mean)) + width
        while True:
            grid = np.arange(lo, hi + 1)
            logp = self.log_pmf_on_set(leb, grid)
            if (
                np.exp(logp).sum() >= 1.0 - tail
                and logp[0] < _LOG_TINY / 2
                and logp[-1] < _LOG_TINY / 2
            ):
                return lo, hi
            lo -= width
            hi += width


def _nonnegative_bounds(seed, leb, tail):
    """Smallest upper count bound keeping omitted mass below ``tail``."""
    if leb == 0.0:
        return 0, 0
    mean = seed.cumulant(1) * leb
    sd = np.sqrt(seed.cumulant(2) * leb)
    hi = int(np.ceil(mean + 12.0 * sd + 40.0))
    while True:
        grid = np.arange(0, hi + 1)
        logp = seed.log_pmf_on_set(leb, grid)
        if np.exp(logp).sum() >= 1.0 - tail and logp[-1] < _LOG_TINY / 2:
            return 0, hi
        hi = int(np.ceil(hi * 1.5)) + 20
