"""Pairwise joint probabilities and the log composite likelihood.

Two observations a fixed number of grid steps apart decompose into three
independent pieces: the basis on the overlap of their trawl sets and on
the two difference sets (which share one measure). The joint pmf is a
convolution over the overlap count. Everything here works in log space,
sums over the overlap with log-sum-exp, and never materializes raw
probabilities, so extreme parameter values during optimization degrade
gracefully to -inf instead of underflowing to spurious zeros.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import digamma, logsumexp

from .families import family_of
from .seeds import NegBinSeed, PoissonSeed, SkellamSeed

__all__ = [
    "PairContext",
    "pair_context",
    "pair_pmf",
    "log_pair_pmf",
    "log_composite_likelihood",
    "cl_value_and_gradient",
    "cl_gradient",
    "pair_scores",
    "pair_pmf_unbiased",
]

# Below this a component measure is an exact point mass at zero; the
# distinction is far under machine precision for every pmf value.
_MEASURE_FLOOR = 1e-250


def _table_lookup(table, lo, idx):
    pos = idx - lo
    ok = (pos >= 0) & (pos < table.size)
    return np.where(ok, table[np.clip(pos, 0, table.size - 1)], -np.inf)


@dataclass(frozen=True, eq=False)
class PairContext:
    """Component measures and log-pmf tables for one observation lag.

    Tables cover the seed support up to a truncation whose omitted mass
    is below ``tail``; lookups outside a table return -inf.
    """

    model: object
    k: int
    leb_shared: float
    leb_new: float
    shared_lo: int
    shared_logpmf: np.ndarray
    new_lo: int
    new_logpmf: np.ndarray

    @property
    def _shared_grid(self):
        return np.arange(self.shared_lo, self.shared_lo + self.shared_logpmf.size)

    def _term_matrix(self, x1, x2):
        c = self._shared_grid
        i1 = x1[:, None] - c[None, :]
        i2 = x2[:, None] - c[None, :]
        a1 = _table_lookup(self.new_logpmf, self.new_lo, i1)
        a2 = _table_lookup(self.new_logpmf, self.new_lo, i2)
        return a1 + a2 + self.shared_logpmf[None, :], i1, i2

    def log_pair(self, x1, x2):
        x1 = np.atleast_1d(np.asarray(x1, dtype=np.int64))
        x2 = np.atleast_1d(np.asarray(x2, dtype=np.int64))
        terms, _, _ = self._term_matrix(x1, x2)
        with np.errstate(invalid="ignore"):
            return logsumexp(terms, axis=1)

    def log_pair_and_scores(self, x1, x2):
        """Log pmf and its gradient in the natural parameters per pair."""
        x1 = np.atleast_1d(np.asarray(x1, dtype=np.int64))
        x2 = np.atleast_1d(np.asarray(x2, dtype=np.int64))
        terms, i1, i2 = self._term_matrix(x1, x2)
        with np.errstate(invalid="ignore"):
            logf = logsumexp(terms, axis=1)
        shift = np.where(np.isfinite(logf), logf, 0.0)
        weights = np.exp(terms - shift[:, None])

        model = self.model
        h = self.k * model.delta
        d_inter, d_diff = model.trawl.leb_gradients(h)
        seed = model.seed
        if isinstance(seed, SkellamSeed):
            grad = self._skellam_scores(weights, i1, i2, d_inter, d_diff, shift, terms)
        else:
            grad = self._tabled_scores(weights, i1, i2, d_inter, d_diff)
        grad[~np.isfinite(logf)] = np.nan
        return logf, grad

    def _tabled_scores(self, weights, i1, i2, d_inter, d_diff):
        seed = self.model.seed
        w_shared = _logpmf_param_grad(seed, self.leb_shared, d_inter, self._shared_grid)
        new_grid = np.arange(self.new_lo, self.new_lo + self.new_logpmf.size)
        w_new = _logpmf_param_grad(seed, self.leb_new, d_diff, new_grid)
        dim = w_shared.shape[0]
        npairs = weights.shape[0]
        grad = np.empty((npairs, dim))
        c1 = np.clip(i1 - self.new_lo, 0, self.new_logpmf.size - 1)
        c2 = np.clip(i2 - self.new_lo, 0, self.new_logpmf.size - 1)
        for d in range(dim):
            contrib = w_new[d][c1] + w_new[d][c2] + w_shared[d][None, :]
            grad[:, d] = np.sum(weights * contrib, axis=1)
        return grad

    def _skellam_scores(self, weights, i1, i2, d_inter, d_diff, shift, terms):
        # Neighbor-shift identities: moving a pmf index down by one inside
        # the convolution gives the up-jump sensitivity, moving it up the
        # down-jump one. Shifted sums stay bounded where ratio tables
        # would overflow in the far tails.
        seed = self.model.seed
        c = self._shared_grid
        s_row = self.shared_logpmf[None, :]
        a1 = _table_lookup(self.new_logpmf, self.new_lo, i1)
        a2 = _table_lookup(self.new_logpmf, self.new_lo, i2)

        def shifted_sum(t_matrix):
            return np.sum(np.exp(t_matrix - shift[:, None]), axis=1)

        norm = shifted_sum(terms)
        sh_up = shifted_sum(a1 + a2 + _table_lookup(self.shared_logpmf, self.shared_lo, c - 1)[None, :])
        sh_dn = shifted_sum(a1 + a2 + _table_lookup(self.shared_logpmf, self.shared_lo, c + 1)[None, :])
        n1_up = shifted_sum(_table_lookup(self.new_logpmf, self.new_lo, i1 - 1) + a2 + s_row)
        n1_dn = shifted_sum(_table_lookup(self.new_logpmf, self.new_lo, i1 + 1) + a2 + s_row)
        n2_up = shifted_sum(a1 + _table_lookup(self.new_logpmf, self.new_lo, i2 - 1) + s_row)
        n2_dn = shifted_sum(a1 + _table_lookup(self.new_logpmf, self.new_lo, i2 + 1) + s_row)

        up, dn = seed.up_rate, seed.down_rate
        shared_up = sh_up - norm
        shared_dn = sh_dn - norm
        new_up = n1_up + n2_up - 2.0 * norm
        new_dn = n1_dn + n2_dn - 2.0 * norm
        dim_trawl = d_inter.size
        grad = np.empty((weights.shape[0], 2 + dim_trawl))
        grad[:, 0] = self.leb_shared * shared_up + self.leb_new * new_up
        grad[:, 1] = self.leb_shared * shared_dn + self.leb_new * new_dn
        for j in range(dim_trawl):
            grad[:, 2 + j] = d_inter[j] * (up * shared_up + dn * shared_dn) + d_diff[j] * (
                up * new_up + dn * new_dn
            )
        return grad


def _logpmf_param_grad(seed, leb, dleb, counts):
    """Rows of d log P(L(B) = x)/d theta over a count grid.

    Seed parameters come first, then the trawl parameters entering
    through the component measure with gradient ``dleb``.
    """
    x = counts.astype(float)
    dim_trawl = len(dleb)
    if isinstance(seed, PoissonSeed):
        rows = np.zeros((1 + dim_trawl, counts.size))
        if leb > 0.0:
            rows[0] = x / seed.intensity - leb
            base = x / leb - seed.intensity
            for j in range(dim_trawl):
                rows[1 + j] = base * dleb[j]
        return rows
    if isinstance(seed, NegBinSeed):
        rows = np.zeros((2 + dim_trawl, counts.size))
        if leb > 0.0:
            m, p = seed.m, seed.p
            r = m * leb
            dg = digamma(r + x) - digamma(r)
            log1mp = np.log1p(-p)
            rows[0] = leb * (log1mp + dg)
            rows[1] = x / p - r / (1.0 - p)
            base = m * (log1mp + dg)
            for j in range(dim_trawl):
                rows[2 + j] = base * dleb[j]
        return rows
    raise TypeError(f"no tabled score rule for {type(seed).__name__}")


def pair_context(model, k, x_lo, x_hi, tail=1e-12):
    """Build the component tables for lag ``k`` covering counts in
    [x_lo, x_hi]."""
    k = int(k)
    if k < 1:
        raise ValueError("lag must be a positive integer")
    seed = model.seed
    h = k * model.delta
    leb_shared = float(model.trawl.leb_intersection(h))
    leb_new = float(model.trawl.leb_difference(h))
    if leb_shared < _MEASURE_FLOOR:
        leb_shared = 0.0
    if leb_new < _MEASURE_FLOOR:
        leb_new = 0.0
    x_lo, x_hi = int(x_lo), int(x_hi)
    if seed.nonnegative:
        # The overlap count cannot exceed either observation, so the sum
        # over [0, x_hi] masked per pair is exact, with no truncation.
        c_lo, c_hi = 0, max(x_hi, 0)
        n_lo, n_hi = 0, max(x_hi, 0)
    else:
        c_lo, c_hi = (0, 0) if leb_shared == 0.0 else seed.support_bounds(leb_shared, tail)
        n_lo, n_hi = x_lo - c_hi, x_hi - c_lo
    shared_grid = np.arange(c_lo, c_hi + 1)
    new_grid = np.arange(n_lo, n_hi + 1)
    return PairContext(
        model=model,
        k=k,
        leb_shared=leb_shared,
        leb_new=leb_new,
        shared_lo=c_lo,
        shared_logpmf=seed.log_pmf_on_set(leb_shared, shared_grid),
        new_lo=n_lo,
        new_logpmf=seed.log_pmf_on_set(leb_new, new_grid),
    )


def log_pair_pmf(model, k, x1, x2):
    """Log joint pmf of two observations ``k`` grid steps apart."""
    x1a = np.atleast_1d(np.asarray(x1, dtype=np.int64))
    x2a = np.atleast_1d(np.asarray(x2, dtype=np.int64))
    ctx = pair_context(model, k, min(x1a.min(), x2a.min()), max(x1a.max(), x2a.max()))
    out = ctx.log_pair(x1a, x2a)
    if np.isscalar(x1) or (np.ndim(x1) == 0 and np.ndim(x2) == 0):
        return float(out[0])
    return out


def pair_pmf(model, k, x1, x2):
    """Joint pmf of two observations ``k`` grid steps apart."""
    out = log_pair_pmf(model, k, x1, x2)
    return np.exp(out) if isinstance(out, np.ndarray) else float(np.exp(out))


def _lag_pairs(values, k):
    return values[k:], values[: -k]


def _unique_pairs(x1, x2):
    lo = int(min(x1.min(), x2.min()))
    width = int(max(x1.max(), x2.max())) - lo + 1
    enc = (x1.astype(np.int64) - lo) * width + (x2.astype(np.int64) - lo)
    uniq, inverse, counts = np.unique(enc, return_inverse=True, return_counts=True)
    ux1 = uniq // width + lo
    ux2 = uniq % width + lo
    return ux1, ux2, inverse, counts


def _check_lag_count(series, K):
    K = int(K)
    if K < 1:
        raise ValueError("K must be at least 1")
    if K >= series.n:
        raise ValueError("K must be smaller than the series length")
    return K


def log_composite_likelihood(model, series, K, diagnostics=None):
    """Sum of log pairwise pmfs over lags 1..K and all overlapping pairs.

    Returns -inf when any pair has zero probability under the model; the
    count of such pairs is reported through ``diagnostics`` when a dict
    is passed.
    """
    K = _check_lag_count(series, K)
    values = series.values
    x_lo, x_hi = int(values.min()), int(values.max())
    parts = []
    zero_pairs = 0
    for k in range(1, K + 1):
        ctx = pair_context(model, k, x_lo, x_hi)
        x1, x2 = _lag_pairs(values, k)
        ux1, ux2, inverse, _ = _unique_pairs(x1, x2)
        lf = ctx.log_pair(ux1, ux2)[inverse]
        zero_pairs += int(np.sum(~np.isfinite(lf)))
        parts.append(lf)
    total = float(np.sum(np.concatenate(parts)))
    if diagnostics is not None:
        diagnostics["zero_prob_pairs"] = zero_pairs
    return total


def cl_value_and_gradient(model, series, K, transformed=True):
    """Log composite likelihood and its gradient in one pass.

    The gradient is taken in the unconstrained (log / logit) coordinates
    unless ``transformed`` is False, in which case it is in the natural
    parameters.
    """
    K = _check_lag_count(series, K)
    values = series.values
    x_lo, x_hi = int(values.min()), int(values.max())
    total = 0.0
    grad = None
    parts = []
    for k in range(1, K + 1):
        ctx = pair_context(model, k, x_lo, x_hi)
        x1, x2 = _lag_pairs(values, k)
        ux1, ux2, inverse, counts = _unique_pairs(x1, x2)
        lf_u, g_u = ctx.log_pair_and_scores(ux1, ux2)
        parts.append(lf_u[inverse])
        lag_grad = counts @ np.nan_to_num(g_u, nan=0.0)
        grad = lag_grad if grad is None else grad + lag_grad
    total = float(np.sum(np.concatenate(parts)))
    if not np.isfinite(total):
        grad = np.full_like(grad, np.nan)
    if transformed:
        fam = family_of(model)
        grad = grad * fam.transform.jacobian(fam.theta_of(model))
    return total, grad


def cl_gradient(model, series, K, transformed=True):
    """Gradient of the log composite likelihood."""
    return cl_value_and_gradient(model, series, K, transformed=transformed)[1]


def pair_scores(model, series, K):
    """Per-pair natural-parameter scores, zero padded.

    Entry [i, k-1, :] holds the gradient of the log pairwise pmf of
    observations (i, i+k) for 0-based i < n-k, and zeros beyond.
    """
    K = _check_lag_count(series, K)
    values = series.values
    n = series.n
    x_lo, x_hi = int(values.min()), int(values.max())
    dim = family_of(model).dim
    scores = np.zeros((n, K, dim))
    for k in range(1, K + 1):
        ctx = pair_context(model, k, x_lo, x_hi)
        x1, x2 = _lag_pairs(values, k)
        ux1, ux2, inverse, _ = _unique_pairs(x1, x2)
        _, g_u = ctx.log_pair_and_scores(ux1, ux2)
        scores[: n - k, k - 1, :] = g_u[inverse]
    return scores


def pair_pmf_unbiased(model, k, x1, x2, n_draws, rng):
    """Unbiased simulation estimate of the pairwise pmf.

    Draws the overlap count and averages the product of the two
    difference-component pmfs evaluated at the remainders.
    """
    n_draws = int(n_draws)
    if n_draws < 1:
        raise ValueError("n_draws must be positive")
    ctx = pair_context(model, k, min(x1, x2), max(x1, x2))
    seed = model.seed
    if ctx.leb_shared == 0.0:
        draws = np.zeros(n_draws, dtype=np.int64)
    else:
        draws = seed.sample_on_set(ctx.leb_shared, n_draws, rng)
    p1 = seed.pmf_on_set(ctx.leb_new, x1 - draws)
    p2 = seed.pmf_on_set(ctx.leb_new, x2 - draws)
    return float(np.mean(p1 * p2))
