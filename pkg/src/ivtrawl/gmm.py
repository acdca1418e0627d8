"""Method-of-moments estimators.

Two routes: a two-step procedure (least-squares fit of the model ACF,
then cumulant matching given the implied trawl-set measure), and full
GMM on the moment vector (mean, second moment, cross moments at lags
1..m) with a configurable weight matrix. The two-step route is cheap
and serves as the default initializer for the composite likelihood
optimizer; full GMM is the comparison estimator.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize

from .families import ModelFamily
from .seeds import NegBinSeed, PoissonSeed, SkellamSeed
from .simulate import replication_rng, simulate_path

__all__ = [
    "EstimationError",
    "sample_acf",
    "sample_cumulants",
    "moment_stat_series",
    "sample_moment_vector",
    "model_moment_vector",
    "model_moment_jacobian",
    "long_run_moment_covariance",
    "two_step_from_moments",
    "fit_gmm_two_step",
    "fit_gmm_full_from_moments",
    "fit_gmm_full",
    "gmm_avar",
]


class EstimationError(RuntimeError):
    """Raised when an estimator cannot produce a usable value."""


def sample_acf(values, lags):
    """Sample autocorrelations at lags 1..lags (denominator n)."""
    x = np.asarray(values, dtype=float)
    n = x.size
    lags = int(lags)
    if lags < 1 or lags >= n:
        raise ValueError("lags must lie in [1, n)")
    xc = x - x.mean()
    gamma0 = float(np.dot(xc, xc)) / n
    if gamma0 <= 0.0:
        raise EstimationError("series has zero variance; autocorrelation undefined")
    out = np.empty(lags)
    for k in range(1, lags + 1):
        out[k - 1] = float(np.dot(xc[:-k], xc[k:])) / n / gamma0
    return out


def sample_cumulants(values):
    """First two sample cumulants (variance with denominator n)."""
    x = np.asarray(values, dtype=float)
    k1 = float(x.mean())
    k2 = float(np.mean((x - k1) ** 2))
    return k1, k2


def moment_stat_series(values, m):
    """Per-time data statistics (X_t, X_t^2, X_t X_{t+1}, ..., X_t X_{t+m}).

    Rows run over t = 0..n-m-1 so every entry exists.
    """
    x = np.asarray(values, dtype=float)
    m = int(m)
    n = x.size
    if m < 1 or m >= n:
        raise ValueError("m must lie in [1, n)")
    head = x[: n - m]
    cols = [head, head**2]
    for k in range(1, m + 1):
        cols.append(head * x[k : n - m + k])
    return np.column_stack(cols)


def sample_moment_vector(values, m):
    return moment_stat_series(values, m).mean(axis=0)


def _seed_cumulant_gradients(seed):
    """(kappa1, kappa2, dkappa1, dkappa2) w.r.t. the seed parameters."""
    if isinstance(seed, PoissonSeed):
        nu = seed.intensity
        return nu, nu, np.array([1.0]), np.array([1.0])
    if isinstance(seed, NegBinSeed):
        m, p = seed.m, seed.p
        q = 1.0 - p
        k1 = p * m / q
        k2 = p * m / q**2
        dk1 = np.array([p / q, m / q**2])
        dk2 = np.array([p / q**2, m * (1.0 + p) / q**3])
        return k1, k2, dk1, dk2
    if isinstance(seed, SkellamSeed):
        up, dn = seed.up_rate, seed.down_rate
        return up - dn, up + dn, np.array([1.0, -1.0]), np.array([1.0, 1.0])
    raise TypeError(f"unknown seed type {type(seed).__name__}")


def model_moment_vector(model, m):
    """(E X, E X^2, E X_t X_{t+1}, ..., E X_t X_{t+m}) under the model."""
    m = int(m)
    seed, trawl = model.seed, model.trawl
    k1 = seed.cumulant(1)
    k2 = seed.cumulant(2)
    leb = trawl.leb_full()
    mu = k1 * leb
    out = np.empty(m + 2)
    out[0] = mu
    out[1] = mu**2 + k2 * leb
    lags = np.arange(1, m + 1) * model.delta
    out[2:] = mu**2 + k2 * trawl.leb_intersection(lags)
    return out


def model_moment_jacobian(model, m):
    """Jacobian of model_moment_vector w.r.t. the natural parameters."""
    m = int(m)
    seed, trawl = model.seed, model.trawl
    k1, k2, dk1, dk2 = _seed_cumulant_gradients(seed)
    dim_seed = dk1.size
    leb = trawl.leb_full()
    dleb = trawl.leb_full_gradient()
    dim = dim_seed + dleb.size
    mu = k1 * leb

    dmu = np.empty(dim)
    dmu[:dim_seed] = dk1 * leb
    dmu[dim_seed:] = k1 * dleb

    jac = np.empty((m + 2, dim))
    jac[0] = dmu
    jac[1, :dim_seed] = 2.0 * mu * dmu[:dim_seed] + dk2 * leb
    jac[1, dim_seed:] = 2.0 * mu * dmu[dim_seed:] + k2 * dleb
    for k in range(1, m + 1):
        h = k * model.delta
        inter = float(trawl.leb_intersection(h))
        d_inter, _ = trawl.leb_gradients(h)
        jac[1 + k, :dim_seed] = 2.0 * mu * dmu[:dim_seed] + dk2 * inter
        jac[1 + k, dim_seed:] = 2.0 * mu * dmu[dim_seed:] + k2 * d_inter
    return jac


def long_run_moment_covariance(stats, max_lag=50):
    """Long-run covariance of a vector stat series: C0 + sum (C_l + C_l')."""
    z = np.asarray(stats, dtype=float)
    t_len = z.shape[0]
    max_lag = int(min(max_lag, t_len - 1))
    zc = z - z.mean(axis=0)
    sigma = zc.T @ zc / t_len
    for lag in range(1, max_lag + 1):
        c = zc[:-lag].T @ zc[lag:] / t_len
        sigma = sigma + c + c.T
    return sigma


# ---------------------------------------------------------------------------
# two-step estimator

_TRAWL_STARTS = {
    "exp": [(1.0,), (4.0,), (0.3,)],
    "ig": [(1.0, 1.0), (0.5, 2.0), (2.0, 0.5)],
    "gamma": [(1.5, 1.0), (0.8, 0.5), (4.0, 2.0)],
}


def _supexp_starts(q, delta):
    base = np.geomspace(0.5 / delta, 4.0 / delta, q)
    return [tuple(np.full(q, 1.0 / q)) + tuple(base), tuple(np.full(q, 1.0 / q)) + tuple(base / 4.0)]


def _fit_trawl_to_acf(fam: ModelFamily, rho_hat, delta):
    """Least-squares trawl parameters matching the sample ACF."""
    lags = np.arange(1, rho_hat.size + 1) * delta
    kinds = fam.kinds[fam.dim_seed :]
    from .families import ParamTransform

    tf = ParamTransform(kinds)

    if fam.trawl_tag == "exp" and rho_hat.size == 1:
        if rho_hat[0] <= 0.0:
            raise EstimationError("lag-1 autocorrelation is not positive; cannot invert the ACF")
        return np.array([-np.log(rho_hat[0]) / delta])

    def objective(internal):
        trawl = fam.build_trawl(tf.to_natural(internal))
        resid = trawl.acf(lags) - rho_hat
        return float(np.dot(resid, resid))

    if fam.trawl_tag == "exp":
        if rho_hat[0] <= 0.0:
            raise EstimationError("lag-1 autocorrelation is not positive; cannot invert the ACF")
        starts = [(-np.log(rho_hat[0]) / delta,)]
    elif fam.trawl_tag == "supexp":
        starts = _supexp_starts(fam.dim_trawl // 2, delta)
    else:
        starts = _TRAWL_STARTS[fam.trawl_tag]

    best = None
    for start in starts:
        res = minimize(objective, tf.to_internal(np.asarray(start, dtype=float)), method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
        if best is None or res.fun < best.fun:
            best = res
    return tf.to_natural(best.x)


def _match_seed_cumulants(fam: ModelFamily, k1, k2, leb, diagnostics):
    def flag(name):
        if diagnostics is not None:
            diagnostics[name] = True

    if fam.seed_tag == "poisson":
        nu = k1 / leb
        if nu <= 0.0:
            flag("seed_boundary")
            nu = 1e-8
        return np.array([nu])
    if fam.seed_tag == "nb":
        p = 1.0 - k1 / k2 if k2 > 0 else 0.0
        if p <= 0.0:
            flag("nb_boundary")
            p = 1e-4
        p = min(p, 1.0 - 1e-10)
        m = k1 * (1.0 - p) / (p * leb)
        if m <= 0.0:
            flag("seed_boundary")
            m = 1e-8
        return np.array([m, p])
    # skellam
    up = (k2 + k1) / (2.0 * leb)
    dn = (k2 - k1) / (2.0 * leb)
    if up <= 0.0 or dn <= 0.0:
        flag("seed_boundary")
        up, dn = max(up, 1e-8), max(dn, 1e-8)
    return np.array([up, dn])


def two_step_from_moments(fam: ModelFamily, rho_hat, k1, k2, delta, diagnostics=None):
    """Two-step estimate from precomputed sample ACF and cumulants."""
    rho_hat = np.asarray(rho_hat, dtype=float)
    if rho_hat.size < fam.dim_trawl:
        raise ValueError("need at least dim(trawl) autocorrelation lags")
    theta_trawl = _fit_trawl_to_acf(fam, rho_hat, delta)
    trawl = fam.build_trawl(theta_trawl)
    theta_seed = _match_seed_cumulants(fam, k1, k2, trawl.leb_full(), diagnostics)
    return np.concatenate([theta_seed, theta_trawl])


def fit_gmm_two_step(fam: ModelFamily, series, lags=None, diagnostics=None):
    """ACF least squares for the trawl, then cumulant matching for the seed."""
    if lags is None:
        lags = max(fam.default_lags, fam.dim_trawl)
    rho_hat = sample_acf(series.values, lags)
    k1, k2 = sample_cumulants(series.values)
    return two_step_from_moments(fam, rho_hat, k1, k2, series.delta, diagnostics)


# ---------------------------------------------------------------------------
# full GMM

def _resolve_weight(weight, dim_moments):
    if isinstance(weight, str):
        return weight
    a = np.asarray(weight, dtype=float)
    if a.shape != (dim_moments, dim_moments):
        raise ValueError("weight matrix has the wrong shape")
    if not np.allclose(a, a.T, atol=1e-10):
        raise ValueError("weight matrix must be symmetric")
    if np.linalg.eigvalsh(a)[0] <= 0.0:
        raise ValueError("weight matrix must be positive definite")
    return a


def fit_gmm_full_from_moments(fam: ModelFamily, moments, delta, weight="identity", init=None):
    """Minimize the quadratic form in (sample minus model) moments.

    ``moments`` is the stacked sample vector (mean, second moment, cross
    moments at lags 1..m). ``weight`` is the identity by default or an
    explicit symmetric positive-definite matrix.
    """
    s = np.asarray(moments, dtype=float)
    m = s.size - 2
    if s.size < fam.dim or m < fam.dim_trawl:
        raise ValueError(
            "need at least dim(theta) moments and dim(trawl) cross-moment lags"
        )
    a_mat = _resolve_weight(weight, s.size)
    if isinstance(a_mat, str):
        a_mat = np.eye(s.size)
    if init is None:
        raise ValueError("full GMM needs an initial point")
    tf = fam.transform

    def objective(internal):
        theta = tf.to_natural(internal)
        try:
            model = fam.build(theta, delta)
        except ValueError:
            # a long line-search step can round a logit coordinate to 0 or 1
            return 1e10, np.zeros_like(internal)
        resid = s - model_moment_vector(model, m)
        grad_nat = -2.0 * (model_moment_jacobian(model, m).T @ (a_mat @ resid))
        return float(resid @ a_mat @ resid), grad_nat * tf.jacobian(theta)

    res = minimize(objective, tf.to_internal(np.asarray(init, dtype=float)), jac=True,
                   method="BFGS", options={"gtol": 1e-10, "maxiter": 500})
    return tf.to_natural(res.x)


def fit_gmm_full(fam: ModelFamily, series, m=10, weight="identity", init=None, diagnostics=None):
    """Full GMM fit; two-stage reweighting when ``weight='two-stage'``."""
    if init is None:
        init = fit_gmm_two_step(fam, series, diagnostics=diagnostics)
    s = sample_moment_vector(series.values, m)
    if isinstance(weight, str) and weight == "two-stage":
        theta1 = fit_gmm_full_from_moments(fam, s, series.delta, "identity", init)
        sigma = long_run_moment_covariance(moment_stat_series(series.values, m))
        a_mat = np.linalg.pinv(sigma)
        a_mat = 0.5 * (a_mat + a_mat.T)
        # pinv of a near-singular covariance can leave zero or slightly
        # negative eigenvalues; floor them so the weight stays usable
        w, v = np.linalg.eigh(a_mat)
        a_mat = (v * np.maximum(w, 1e-12 * w.max())) @ v.T
        return fit_gmm_full_from_moments(fam, s, series.delta, a_mat, theta1)
    return fit_gmm_full_from_moments(fam, s, series.delta, weight, init)


def gmm_avar(fam: ModelFamily, theta, delta, m=10, n_paths=500, path_length=500,
             max_lag=50, rng_seed=0, weight="identity"):
    """Asymptotic covariance of the full GMM estimator at ``theta``.

    The long-run moment covariance is averaged over simulated paths; the
    moment Jacobian is evaluated analytically at ``theta``. Returns the
    covariance of sqrt(n) times the estimation error.
    """
    theta = np.asarray(theta, dtype=float)
    model = fam.build(theta, delta)
    if n_paths < 2:
        raise ValueError("n_paths must be at least 2")
    sigma = np.zeros((m + 2, m + 2))
    for b in range(int(n_paths)):
        path = simulate_path(model, int(path_length), replication_rng(rng_seed, b))
        stats = moment_stat_series(path.values, m)
        sigma += long_run_moment_covariance(stats, max_lag)
    sigma /= n_paths

    a_mat = _resolve_weight(weight, m + 2)
    if isinstance(a_mat, str):
        a_mat = np.eye(m + 2)
    g0 = -model_moment_jacobian(model, m)
    bread = np.linalg.inv(g0.T @ a_mat @ g0)
    m_mat = bread @ g0.T @ a_mat
    return m_mat @ sigma @ m_mat.T
