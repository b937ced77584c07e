"""Joint modeling of daily returns, realized variance, and the VIX with
GARCH-family dynamics, closed-form VIX pricing, and volatility-risk-premium
analytics."""

from rgvix._backend import BACKEND
from rgvix.data import MarketSeries, annualized_vol, build_rvcc, load_csv, save_csv
from rgvix.estimation import (
    BacktestResult, FitOptions, FitResult, estimate, robust_se, rolling_backtest,
)
from rgvix.evaluation import (
    DmResult, ErrorStats, EvalReport, LossDiffSeries, build_report, dm_test,
    error_stats, loss_diff, parzen_lrv,
)
from rgvix.filters import (
    FilterOutput, filter_eg, filter_g, filter_hn, filter_rg, loglik_p, run_filter,
)
from rgvix.params import EGParams, GParams, HNParams, RGParams
from rgvix.riskneutral import (
    QParamsHN, QParamsRG, SDFState, leverage_corr, map_hn_lrnvr, map_hn_vd,
    map_rg_to_q, mgf_normal_quadratic, moments_logh, sdf_value,
    vrp_log_decomposition,
)
from rgvix.simulation import (
    MomentCurve, SimConfig, cumret_moments, density_grid, mc_vix_oracle,
    simulate_paths,
)
from rgvix.vix import (
    VixQuote, expected_h_path_rg, loglik_vix, price_series, vix_eg, vix_g,
    vix_hn, vix_hnvd, vix_rg,
)
from rgvix.vrp import HarFit, VrpSeries, har_fit, har_forecast, vrp_market_martingale, vrp_model

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "__version__",
    "MarketSeries", "annualized_vol", "build_rvcc", "load_csv", "save_csv",
    "RGParams", "EGParams", "GParams", "HNParams",
    "FilterOutput", "filter_rg", "filter_eg", "filter_g", "filter_hn",
    "run_filter", "loglik_p",
    "SDFState", "QParamsRG", "QParamsHN", "sdf_value", "mgf_normal_quadratic",
    "map_rg_to_q", "map_hn_lrnvr", "map_hn_vd", "moments_logh", "leverage_corr",
    "vrp_log_decomposition",
    "VixQuote", "expected_h_path_rg", "vix_rg", "vix_eg", "vix_g", "vix_hn",
    "vix_hnvd", "price_series", "loglik_vix",
    "FitOptions", "FitResult", "BacktestResult", "estimate", "robust_se",
    "rolling_backtest",
    "HarFit", "VrpSeries", "har_fit", "har_forecast", "vrp_market_martingale",
    "vrp_model",
    "ErrorStats", "EvalReport", "DmResult", "LossDiffSeries", "error_stats",
    "dm_test", "parzen_lrv", "loss_diff", "build_report",
    "SimConfig", "MomentCurve", "simulate_paths", "cumret_moments",
    "density_grid", "mc_vix_oracle",
]
