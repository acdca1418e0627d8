"""Command-line front end: simulate, estimate, select, forecast, backtest.

Outputs are deterministic given the inputs and the seed: JSON is emitted
with sorted keys, CSV with fixed column order and newline discipline,
and all randomness flows through explicit seed arguments.
"""

from __future__ import annotations

import csv as _csv
import json
import sys

import click
import numpy as np

from .evaluate import METRICS, BacktestConfig, backtest as run_backtest
from .families import CORE_FAMILIES, family
from .gmm import EstimationError, fit_gmm_full, fit_gmm_two_step
from .inference import claic_clbic, sandwich_estimate
from .mcl import fit_mcl
from .model import CountSeries
from .forecast import point_forecast, predictive_pmf
from .simulate import simulate_path

__all__ = ["main"]


def _load_series(path, delta):
    rows = np.genfromtxt(path, delimiter=",", names=True)
    names = rows.dtype.names
    if names is None:
        raise click.UsageError("input CSV needs a header row ('x' or 't,x')")
    if "x" not in names:
        raise click.UsageError("input CSV needs an 'x' column")
    x = np.atleast_1d(rows["x"])
    if "t" in names:
        t = np.atleast_1d(rows["t"])
        if t.size < 2:
            raise click.UsageError("need at least two rows to infer the grid spacing")
        diffs = np.diff(t)
        step = float(diffs.mean())
        if step <= 0 or np.max(np.abs(diffs - step)) > 1e-9 * abs(step):
            raise click.UsageError("time column is not an equidistant grid")
        if delta is not None and abs(delta - step) > 1e-9 * abs(step):
            raise click.UsageError(f"--delta {delta} disagrees with the time column spacing {step}")
        return CountSeries(np.rint(x).astype(np.int64), step, start=float(t[0]))
    if delta is None:
        raise click.UsageError("--delta is required when the input has no time column")
    return CountSeries(np.rint(x).astype(np.int64), float(delta))


def _build_family(tag, supexp_terms):
    try:
        return family(tag, supexp_terms=supexp_terms)
    except (ValueError, KeyError) as exc:
        raise click.UsageError(str(exc))


def _parse_params(fam, text):
    given = {}
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise click.UsageError(f"malformed parameter setting {chunk!r}; use name=value")
        key, val = chunk.split("=", 1)
        given[key.strip()] = float(val)
    missing = [p for p in fam.param_names if p not in given]
    extra = [p for p in given if p not in fam.param_names]
    if missing or extra:
        raise click.UsageError(
            f"family {fam.name} takes parameters {', '.join(fam.param_names)};"
            f" missing {missing or 'none'}, unknown {extra or 'none'}"
        )
    return np.array([given[p] for p in fam.param_names])


def _write_json(path, obj):
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _open_csv(path):
    fh = open(path, "w", newline="")
    return fh, _csv.writer(fh, lineterminator="\n")


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def _parse_horizons(text):
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        out = list(range(int(lo), int(hi) + 1))
    else:
        out = [int(c) for c in text.split(",") if c.strip()]
    if not out or any(h < 1 for h in out):
        raise click.UsageError("horizons must be positive integers")
    return out


@click.group()
def main():
    """Simulation, estimation, selection, and forecasting for
    integer-valued trawl processes on an equidistant grid."""


@main.command()
@click.option("--family", "family_tag", required=True, help="model family tag, e.g. poisson-exp")
@click.option("--params", required=True, help="comma-separated name=value parameter settings")
@click.option("--delta", type=float, required=True, help="grid spacing")
@click.option("--n", type=int, required=True, help="number of observations")
@click.option("--seed", type=int, required=True, help="rng seed")
@click.option("--supexp-terms", type=int, default=2, show_default=True)
@click.option("--output", required=True, type=click.Path(), help="output CSV path")
def simulate(family_tag, params, delta, n, seed, supexp_terms, output):
    """Simulate a path and write it as CSV (t,x)."""
    fam = _build_family(family_tag, supexp_terms)
    theta = _parse_params(fam, params)
    model = fam.build(theta, delta)
    path = simulate_path(model, n, seed)
    fh, writer = _open_csv(output)
    with fh:
        writer.writerow(["t", "x"])
        for t, x in zip(path.times, path.values):
            writer.writerow([_fmt(float(t)), int(x)])
    click.echo(f"wrote {n} observations to {output}")


def _fit_payload(fam, series, fit, sandwich, criteria):
    theta = dict(zip(fam.param_names, (float(v) for v in fit.theta)))
    se = None
    method = None
    claic = clbic = None
    diagnostics = {k: v for k, v in fit.diagnostics.items()}
    if sandwich is not None:
        method = sandwich.method
        if sandwich.se is not None:
            se = dict(zip(fam.param_names, (float(v) for v in sandwich.se)))
        else:
            diagnostics["se_suppressed_reason"] = sandwich.flags["se_suppressed_reason"]
        diagnostics.update({k: v for k, v in sandwich.flags.items() if k != "se_suppressed_reason"})
    if criteria is not None:
        claic, clbic = criteria
    return {
        "family": fam.name,
        "delta": series.delta,
        "n": series.n,
        "K": fit.K,
        "theta": theta,
        "se": se,
        "method": method,
        "CL": fit.logcl,
        "CLAIC": claic,
        "CLBIC": clbic,
        "converged": bool(fit.converged),
        "diagnostics": diagnostics,
    }


@main.command()
@click.option("--family", "family_tag", required=True)
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--output", required=True, type=click.Path())
@click.option("--delta", type=float, default=None, help="grid spacing (single-column input)")
@click.option("--K", "k_lags", type=int, default=None, help="number of composite likelihood lags")
@click.option("--method", type=click.Choice(["mcl", "gmm", "gmm-full"]), default="mcl", show_default=True)
@click.option("--vcov", type=click.Choice(["sim", "hac", "none"]), default="sim", show_default=True)
@click.option("--B", "n_paths", type=int, default=500, show_default=True, help="vcov sim replications")
@click.option("--N", "path_length", type=int, default=500, show_default=True, help="vcov sim path length")
@click.option("--q", "hac_lags", type=int, default=None, help="HAC lag count (default n^(1/3))")
@click.option("--m-lags", type=int, default=10, show_default=True, help="GMM moment lags")
@click.option("--two-stage", is_flag=True, help="reweight full GMM with the long-run moment covariance")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--supexp-terms", type=int, default=2, show_default=True)
@click.option("--workers", type=int, default=None, help="worker processes (default IVT_WORKERS or cores)")
def estimate(family_tag, input_path, output, delta, k_lags, method, vcov, n_paths,
             path_length, hac_lags, m_lags, two_stage, seed, supexp_terms, workers):
    """Fit one model family and write the result as JSON."""
    fam = _build_family(family_tag, supexp_terms)
    series = _load_series(input_path, delta)

    if method in ("gmm", "gmm-full"):
        diagnostics = {}
        try:
            if method == "gmm":
                theta = fit_gmm_two_step(fam, series, lags=k_lags, diagnostics=diagnostics)
            else:
                weight = "two-stage" if two_stage else "identity"
                theta = fit_gmm_full(fam, series, m=m_lags, weight=weight, diagnostics=diagnostics)
        except (EstimationError, ValueError) as exc:
            click.echo(f"estimation failed: {exc}", err=True)
            sys.exit(1)
        payload = {
            "family": fam.name,
            "delta": series.delta,
            "n": series.n,
            "K": None,
            "theta": dict(zip(fam.param_names, (float(v) for v in theta))),
            "se": None,
            "method": "gmm-two-step" if method == "gmm" else "gmm-full",
            "CL": None,
            "CLAIC": None,
            "CLBIC": None,
            "converged": True,
            "diagnostics": diagnostics,
        }
        _write_json(output, payload)
        click.echo(f"wrote fit to {output}")
        return

    fit = fit_mcl(fam, series, K=k_lags, rng_seed=seed)
    sandwich = None
    criteria = None
    if vcov != "none":
        sandwich = sandwich_estimate(fit, series, method=vcov, q=hac_lags, n_paths=n_paths,
                                     path_length=path_length, rng_seed=seed, workers=workers)
        criteria = claic_clbic(fit.logcl, sandwich.v_hat, sandwich.h_hat, series.n)
    _write_json(output, _fit_payload(fam, series, fit, sandwich, criteria))
    click.echo(f"wrote fit to {output}")
    if not fit.converged:
        sys.exit(1)


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--output", required=True, type=click.Path())
@click.option("--families", default=",".join(CORE_FAMILIES), show_default=True,
              help="comma-separated family tags")
@click.option("--delta", type=float, default=None)
@click.option("--K", "k_lags", type=int, default=None)
@click.option("--vcov", type=click.Choice(["sim", "hac"]), default="hac", show_default=True)
@click.option("--B", "n_paths", type=int, default=500, show_default=True)
@click.option("--N", "path_length", type=int, default=500, show_default=True)
@click.option("--q", "hac_lags", type=int, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--supexp-terms", type=int, default=2, show_default=True)
@click.option("--workers", type=int, default=None)
def select(input_path, output, families, delta, k_lags, vcov, n_paths, path_length,
           hac_lags, seed, supexp_terms, workers):
    """Fit several families and rank them by the information criteria."""
    series = _load_series(input_path, delta)
    tags = [t.strip() for t in families.split(",") if t.strip()]
    rows = []
    all_ok = True
    for tag in tags:
        fam = _build_family(tag, supexp_terms)
        try:
            fit = fit_mcl(fam, series, K=k_lags, rng_seed=seed)
            sandwich = sandwich_estimate(fit, series, method=vcov, q=hac_lags, n_paths=n_paths,
                                         path_length=path_length, rng_seed=seed, workers=workers)
            claic, clbic = claic_clbic(fit.logcl, sandwich.v_hat, sandwich.h_hat, series.n)
            rows.append({"family": fam.name, "converged": fit.converged, "CL": fit.logcl,
                         "CLAIC": claic, "CLBIC": clbic, "error": ""})
            all_ok = all_ok and fit.converged
        except (ValueError, ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
            rows.append({"family": fam.name, "converged": False, "CL": None,
                         "CLAIC": None, "CLBIC": None, "error": str(exc)})
            all_ok = False

    def sort_key(row):
        return -(row["CLBIC"] if row["CLBIC"] is not None else -np.inf)

    rows.sort(key=sort_key)
    best_claic = max((r["CLAIC"] for r in rows if r["CLAIC"] is not None), default=None)
    best_clbic = max((r["CLBIC"] for r in rows if r["CLBIC"] is not None), default=None)
    fh, writer = _open_csv(output)
    with fh:
        writer.writerow(["family", "converged", "CL", "CLAIC", "CLBIC",
                         "claic_best", "clbic_best", "error"])
        for r in rows:
            writer.writerow([
                r["family"], int(bool(r["converged"])), _fmt(r["CL"]), _fmt(r["CLAIC"]),
                _fmt(r["CLBIC"]),
                int(r["CLAIC"] is not None and r["CLAIC"] == best_claic),
                int(r["CLBIC"] is not None and r["CLBIC"] == best_clbic),
                r["error"],
            ])
    click.echo(f"wrote ranking of {len(rows)} families to {output}")
    if not all_ok:
        sys.exit(1)


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True),
              help="fit JSON from the estimate command")
@click.option("--output", required=True, type=click.Path())
@click.option("--h-steps", default="1..1", show_default=True, help="horizons, e.g. 1..20 or 1,5,10")
@click.option("--rule", type=click.Choice(["mean", "mode", "median"]), default="mean", show_default=True)
@click.option("--m-cap", type=int, default=60, show_default=True)
@click.option("--delta", type=float, default=None)
@click.option("--emit-pmf", is_flag=True, help="append the full predictive pmf columns")
@click.option("--supexp-terms", type=int, default=2, show_default=True)
def forecast(input_path, model_path, output, h_steps, rule, m_cap, delta, emit_pmf, supexp_terms):
    """Forecast from every origin in a series under a fitted model."""
    series = _load_series(input_path, delta)
    with open(model_path) as fh:
        spec = json.load(fh)
    fam = _build_family(spec["family"], supexp_terms)
    theta = np.array([spec["theta"][p] for p in fam.param_names])
    model = fam.build(theta, float(spec["delta"]))
    horizons = _parse_horizons(h_steps)

    cache = {}
    fh, writer = _open_csv(output)
    with fh:
        header = ["origin", "t", "x_t", "h", "point", "q05", "q25", "q50", "q75", "q95"]
        if emit_pmf:
            header += [f"p{k}" for k in range(m_cap + 1)]
        writer.writerow(header)
        for i in range(series.n):
            x_t = int(series.values[i])
            t_i = float(series.times[i])
            for h in horizons:
                key = (h, x_t)
                pmf = cache.get(key)
                if pmf is None:
                    pmf = predictive_pmf(model, h * series.delta, x_t, m_cap)
                    cache[key] = pmf
                row = [i + 1, _fmt(t_i), x_t, h, _fmt(point_forecast(pmf, rule)),
                       pmf.quantile(0.05), pmf.quantile(0.25), pmf.quantile(0.50),
                       pmf.quantile(0.75), pmf.quantile(0.95)]
                if emit_pmf:
                    row += [_fmt(float(p)) for p in pmf.probs]
                writer.writerow(row)
    click.echo(f"wrote forecasts for {series.n} origins to {output}")


@main.command(name="backtest")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--output", required=True, type=click.Path(), help="output prefix; writes <prefix>_losses.csv and <prefix>_dm.csv")
@click.option("--families", default="poisson-exp,nb-gamma", show_default=True)
@click.option("--initial-window", type=int, required=True)
@click.option("--max-horizon", type=int, default=20, show_default=True)
@click.option("--stride", type=int, default=24, show_default=True)
@click.option("--rule", type=click.Choice(["mean", "mode", "median"]), default="mean", show_default=True)
@click.option("--m-cap", type=int, default=60, show_default=True)
@click.option("--K", "k_lags", type=int, default=None)
@click.option("--delta", type=float, default=None)
@click.option("--benchmark", default=None, help="family name for loss ratios")
@click.option("--seed", type=int, required=True)
@click.option("--supexp-terms", type=int, default=2, show_default=True)
def backtest_cmd(input_path, output, families, initial_window, max_horizon, stride, rule,
                 m_cap, k_lags, delta, benchmark, seed, supexp_terms):
    """Expanding-window forecast comparison across families."""
    series = _load_series(input_path, delta)
    fams = [_build_family(t.strip(), supexp_terms) for t in families.split(",") if t.strip()]
    config = BacktestConfig(initial_window=initial_window, max_horizon=max_horizon,
                            stride=stride, rule=rule, m_cap=m_cap, K=k_lags, rng_seed=seed)
    result = run_backtest(fams, series, config)

    ratios = result.ratio_table(benchmark) if benchmark else None
    fh, writer = _open_csv(f"{output}_losses.csv")
    with fh:
        header = ["family", "horizon"] + list(METRICS)
        if ratios is not None:
            header += [f"{m}_ratio" for m in METRICS]
        writer.writerow(header)
        for name in result.family_names:
            means = result.mean_losses(name)
            for h in range(1, max_horizon + 1):
                row = [name, h] + [_fmt(float(means[m][h - 1])) for m in METRICS]
                if ratios is not None:
                    row += [_fmt(float(ratios[name][m][h - 1])) for m in METRICS]
                writer.writerow(row)

    fh, writer = _open_csv(f"{output}_dm.csv")
    with fh:
        writer.writerow(["metric", "horizon", "family_a", "family_b", "p_value"])
        for metric in METRICS:
            for h in range(1, max_horizon + 1):
                pmat = result.dm_pvalues(metric, h)
                for i, a in enumerate(result.family_names):
                    for j, b in enumerate(result.family_names):
                        if i != j:
                            writer.writerow([metric, h, a, b, _fmt(float(pmat[i, j]))])

    click.echo(f"wrote {output}_losses.csv and {output}_dm.csv over {result.n_origins} origins")
    if any(v > 0 for v in result.diagnostics["fit_failures"].values()):
        sys.exit(1)


if __name__ == "__main__":
    main()
