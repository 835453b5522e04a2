"""Sliced local-linear-trend state-space model: filtering, Gibbs fitting,
simulation and CRPS-scored forecasts."""

from ._core import (
    ConfigError,
    DataError,
    NumericalError,
    SlicedSsmError,
    crps_empirical,
    crps_quadrature,
    ess,
    exact_joint_loglik,
    ffbs_sample,
    inverse_response,
    kalman_loglik,
    ols_baseline,
    rolling_forecast,
    run_gibbs,
    simulate,
    summarize,
    transform_response,
)

__all__ = [
    "ConfigError",
    "DataError",
    "NumericalError",
    "SlicedSsmError",
    "crps_empirical",
    "crps_quadrature",
    "ess",
    "exact_joint_loglik",
    "ffbs_sample",
    "inverse_response",
    "kalman_loglik",
    "ols_baseline",
    "rolling_forecast",
    "run_gibbs",
    "simulate",
    "summarize",
    "transform_response",
]
