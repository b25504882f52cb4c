"""Nonlinear least squares with Harris recurrent Markov chain regressors.

The package covers the full workflow: simulating recurrent chain families,
measuring recurrence from data (hitting counts and the exponent estimate),
plain and truncated least-squares fits for conditional means and volatility
scales, plug-in covariance matrices and confidence intervals, kernel
regression with leave-one-out bandwidth choice, and a replication-study
harness. The `harrisnls` console script exposes the same workflow from the
command line.
"""

from .chains import (ChainSpec, RecurrenceDiagnostics, Trajectory, ar1,
                     choose_small_set, estimate_beta, hitting_count,
                     occupation_ratios, random_walk, recurrence_diagnostics,
                     renewal, simulate_chain, tar, unit_bins, unit_root, var1)
from .errors import (ConfigurationError, DataError, DomainError,
                     EstimationError, EvaluationError, InferenceError,
                     NumericError, ParseError, StudyError)
from .estimation import (EstimateResult, OptimizerConfig, TruncationPlan,
                         critical_value, lmnls_fit, lnls_fit,
                         log_squared_series, mnls_fit, nls_fit, normal_cdf,
                         truncation_level)
from .inference import (CovarianceEstimate, KdeConfig, adaptive_simpson,
                        covariance_ah, covariance_integrable,
                        covariance_unit_root, kernel_density,
                        silverman_bandwidth, unit_root_information)
from .interval import Interval
from .models import (Dataset, FunctionClass, GAUSSIAN_CALIBRATION,
                     HOMOGENEOUS, INTEGRABLE, NoiseSpec, RegressionModel,
                     VolatilityModel, builtin_model, builtin_volatility,
                     custom_model, generate_dataset, generate_vol_dataset,
                     polynomial_model)
from .montecarlo import (CellStats, StudyConfig, StudySummary, rate_ratio,
                         run_study)
from .nonparametric import (KernelRegConfig, calibrate_polynomial,
                            cv_bandwidth, default_bandwidth_grid,
                            kernel_regression)
from .rng import derive_seed, make_stream

__version__ = "0.1.0"

__all__ = [
    "ChainSpec", "Trajectory", "RecurrenceDiagnostics", "Interval",
    "ar1", "random_walk", "tar", "renewal", "var1", "unit_root",
    "simulate_chain", "hitting_count", "choose_small_set", "estimate_beta",
    "occupation_ratios", "recurrence_diagnostics", "unit_bins",
    "Dataset", "NoiseSpec", "RegressionModel", "VolatilityModel",
    "FunctionClass", "INTEGRABLE", "HOMOGENEOUS", "GAUSSIAN_CALIBRATION",
    "builtin_model", "builtin_volatility", "custom_model", "polynomial_model",
    "generate_dataset", "generate_vol_dataset",
    "EstimateResult", "OptimizerConfig", "TruncationPlan",
    "normal_cdf", "critical_value", "truncation_level", "log_squared_series",
    "nls_fit", "mnls_fit", "lnls_fit", "lmnls_fit",
    "CovarianceEstimate", "KdeConfig", "adaptive_simpson",
    "silverman_bandwidth", "kernel_density", "covariance_integrable",
    "covariance_ah", "covariance_unit_root", "unit_root_information",
    "KernelRegConfig", "kernel_regression", "cv_bandwidth",
    "default_bandwidth_grid", "calibrate_polynomial",
    "StudyConfig", "StudySummary", "CellStats", "run_study", "rate_ratio",
    "derive_seed", "make_stream",
    "ConfigurationError", "DomainError", "DataError", "ParseError",
    "EstimationError", "InferenceError", "EvaluationError", "NumericError",
    "StudyError",
]
