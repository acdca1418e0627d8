"""Maximum composite likelihood estimation.

The objective is the pairwise log composite likelihood; optimization
runs in unconstrained coordinates (log for positive parameters, logit
for probabilities) with the analytic gradient. Initial values come from
the two-step moment fit, with jittered restarts when the first ascent
fails to converge.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .families import ModelFamily
from .gmm import EstimationError, fit_gmm_two_step, sample_cumulants, _match_seed_cumulants
from .pairwise import cl_value_and_gradient, log_composite_likelihood
from .simulate import replication_rng

__all__ = ["FitResult", "fit_mcl"]

_BOUNDARY_INTERNAL = 10.0


@dataclass(frozen=True)
class FitResult:
    """Outcome of one composite likelihood fit."""

    family: ModelFamily
    theta: np.ndarray
    logcl: float
    converged: bool
    n_iter: int
    grad_norm: float
    K: int
    delta: float
    diagnostics: dict = field(default_factory=dict)

    def model(self):
        return self.family.build(self.theta, self.delta)

    def params(self):
        return dict(zip(self.family.param_names, (float(v) for v in self.theta)))


_FALLBACK_TRAWL = {
    "ig": (1.0, 1.0),
    "gamma": (2.0, 1.0),
}


def _fallback_init(fam: ModelFamily, series):
    if fam.trawl_tag == "exp":
        theta_trawl = np.array([np.log(2.0) / series.delta])
    elif fam.trawl_tag == "supexp":
        q = fam.dim_trawl // 2
        theta_trawl = np.concatenate([np.full(q, 1.0 / q), np.geomspace(0.5, 4.0, q) / series.delta])
    else:
        theta_trawl = np.asarray(_FALLBACK_TRAWL[fam.trawl_tag], dtype=float)
    k1, k2 = sample_cumulants(series.values)
    k2 = max(k2, 1e-6)
    leb = fam.build_trawl(theta_trawl).leb_full()
    theta_seed = _match_seed_cumulants(fam, max(k1, 1e-6) if fam.seed_tag != "skellam" else k1, k2, leb, None)
    return np.concatenate([theta_seed, theta_trawl])


def _sanitize(fam: ModelFamily, theta):
    theta = np.array(theta, dtype=float)
    for i, kind in enumerate(fam.kinds):
        if kind == "logit":
            theta[i] = min(max(theta[i], 1e-4), 1.0 - 1e-4)
        else:
            theta[i] = min(max(theta[i], 1e-8), 1e8)
    return theta


def _jitter(fam: ModelFamily, theta, rng):
    out = theta * rng.uniform(0.8, 1.2, size=theta.size)
    return _sanitize(fam, out)


def _ascend(fam: ModelFamily, series, K, theta0):
    tf = fam.transform
    delta = series.delta
    scale = 1.0 / series.n  # per-observation objective keeps gtol meaningful

    def neg_cl(u):
        try:
            theta = tf.to_natural(u)
            model = fam.build(theta, delta)
            val, grad = cl_value_and_gradient(model, series, K)
        except (ValueError, ArithmeticError):
            return 1e10, np.zeros_like(u)
        if not np.isfinite(val):
            return 1e10, np.zeros_like(u)
        return -val * scale, -grad * scale

    res = minimize(neg_cl, tf.to_internal(theta0), jac=True, method="BFGS",
                   options={"gtol": 1e-6, "maxiter": 500})
    grad_norm = float(np.max(np.abs(res.jac)))
    converged = np.isfinite(res.fun) and (bool(res.success) or grad_norm < 1e-5)
    boundary = bool(np.any(np.abs(res.x) > _BOUNDARY_INTERNAL))
    return {
        "theta": tf.to_natural(res.x),
        "internal": res.x,
        "logcl": -float(res.fun) / scale,
        "converged": converged and not boundary,
        "boundary": boundary,
        "n_iter": int(res.nit),
        "grad_norm": grad_norm,
    }


def fit_mcl(fam: ModelFamily, series, K=None, init=None, rng_seed=0, n_restarts=3):
    """Fit a model family by maximum composite likelihood.

    Starts from the two-step moment estimate (or ``init``); when that
    ascent does not converge, up to ``n_restarts`` jittered starts are
    tried and the best end point is kept.
    """
    if fam.seed_tag in ("poisson", "nb") and int(series.values.min()) < 0:
        raise ValueError("series contains negative values outside the seed support")
    if K is None:
        K = max(fam.default_lags, fam.dim_trawl)
    K = int(K)
    if K < fam.dim_trawl:
        raise ValueError("K must be at least the number of trawl parameters")
    if series.n <= K:
        raise ValueError("series too short for the requested K")

    diagnostics = {}
    if init is None:
        try:
            init = fit_gmm_two_step(fam, series, diagnostics=diagnostics)
        except (EstimationError, ValueError):
            diagnostics["init_fallback"] = True
            init = _fallback_init(fam, series)
    init = _sanitize(fam, np.asarray(init, dtype=float))

    runs = [_ascend(fam, series, K, init)]
    if not runs[0]["converged"]:
        for j in range(int(n_restarts)):
            rng = replication_rng(rng_seed, j)
            runs.append(_ascend(fam, series, K, _jitter(fam, init, rng)))

    converged_runs = [r for r in runs if r["converged"]]
    pool = converged_runs if converged_runs else runs
    best = max(pool, key=lambda r: r["logcl"])

    diagnostics["n_starts"] = len(runs)
    if len(runs) > 1:
        finite = [r for r in runs if np.isfinite(r["logcl"])]
        if len(finite) > 1:
            top = max(finite, key=lambda r: r["logcl"])
            spread = max(
                float(np.max(np.abs(r["theta"] - top["theta"]) / np.maximum(1.0, np.abs(top["theta"]))))
                for r in finite
            )
            diagnostics["multistart_spread"] = spread
    if best["boundary"]:
        diagnostics["boundary"] = True

    model = fam.build(best["theta"], series.delta)
    final_diag = {}
    logcl = log_composite_likelihood(model, series, K, diagnostics=final_diag)
    diagnostics["zero_prob_pairs"] = final_diag["zero_prob_pairs"]

    return FitResult(
        family=fam,
        theta=best["theta"],
        logcl=logcl,
        converged=best["converged"],
        n_iter=best["n_iter"],
        grad_norm=best["grad_norm"],
        K=K,
        delta=series.delta,
        diagnostics=diagnostics,
    )
