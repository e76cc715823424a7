"""Time-varying efficiency of futures markets.

Spot returns are regressed on the futures premium with a random-walk slope;
residual-bootstrap bands under the unbiasedness null flag inefficient months.
"""
__version__ = "0.1.0"

from .bootstrap import (BootstrapConfig, EfficiencyBand, EfficiencyTimeline, bootstrap_band,
                        detect)
from .impute import impute_missing
from .series import (AlignedSample, PriceSeries, align, describe, futures_premium,
                     read_price_csv, spot_return)
from .static import StaticFit, fit_static, hansen_lc, ols_fit
from .synthetic import BetaPath, Premium, ScenarioSpec, simulate_market
from .tvp import TvpFit, build_stacked, kalman_smoother_oracle, tvp_fit
from .unitroot import AdfGlsResult, adf_gls, gls_detrend

__all__ = [
    "AdfGlsResult", "AlignedSample", "BetaPath", "BootstrapConfig", "EfficiencyBand",
    "EfficiencyTimeline", "Premium", "PriceSeries", "ScenarioSpec", "StaticFit", "TvpFit",
    "adf_gls", "align", "bootstrap_band", "build_stacked", "describe", "detect",
    "fit_static", "futures_premium", "gls_detrend", "hansen_lc", "impute_missing",
    "kalman_smoother_oracle", "ols_fit", "read_price_csv", "simulate_market", "spot_return",
    "tvp_fit",
]
