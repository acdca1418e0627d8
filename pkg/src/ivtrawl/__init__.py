"""Integer-valued trawl processes: simulation, composite likelihood and
moment estimation, model selection, and exact conditional forecasting
on an equidistant observation grid."""

from .evaluate import BacktestConfig, BacktestResult, backtest, diebold_mariano, forecast_scores, losses
from .families import CORE_FAMILIES, ModelFamily, ParamTransform, family, family_of
from .forecast import PredictivePmf, overlap_conditional, point_forecast, predictive_pmf
from .gmm import (
    EstimationError,
    fit_gmm_full,
    fit_gmm_two_step,
    gmm_avar,
    model_moment_vector,
    sample_acf,
    sample_cumulants,
)
from .inference import SandwichEstimate, claic_clbic, hessian_estimate, sandwich_estimate, v_hat_hac, v_hat_sim
from .mcl import FitResult, fit_mcl
from .model import CountSeries, IvtModel
from .pairwise import (
    cl_gradient,
    cl_value_and_gradient,
    log_composite_likelihood,
    log_pair_pmf,
    pair_pmf,
    pair_pmf_unbiased,
    pair_scores,
)
from .seeds import EvaluationError, NegBinSeed, PoissonSeed, SkellamSeed
from .simulate import replication_rng, simulate_path
from .trawls import ExpTrawl, GammaTrawl, IGTrawl, SupExpTrawl

__version__ = "0.1.0"

__all__ = [
    "BacktestConfig",
    "BacktestResult",
    "CORE_FAMILIES",
    "CountSeries",
    "EstimationError",
    "EvaluationError",
    "ExpTrawl",
    "FitResult",
    "GammaTrawl",
    "IGTrawl",
    "IvtModel",
    "ModelFamily",
    "NegBinSeed",
    "ParamTransform",
    "PoissonSeed",
    "PredictivePmf",
    "SandwichEstimate",
    "SkellamSeed",
    "SupExpTrawl",
    "backtest",
    "claic_clbic",
    "cl_gradient",
    "cl_value_and_gradient",
    "diebold_mariano",
    "family",
    "family_of",
    "fit_gmm_full",
    "fit_gmm_two_step",
    "fit_mcl",
    "forecast_scores",
    "gmm_avar",
    "hessian_estimate",
    "log_composite_likelihood",
    "log_pair_pmf",
    "losses",
    "model_moment_vector",
    "overlap_conditional",
    "pair_pmf",
    "pair_pmf_unbiased",
    "pair_scores",
    "point_forecast",
    "predictive_pmf",
    "replication_rng",
    "sample_acf",
    "sample_cumulants",
    "sandwich_estimate",
    "simulate_path",
    "v_hat_hac",
    "v_hat_sim",
]
