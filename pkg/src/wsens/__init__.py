"""Sensitivity analysis for weighted-regression causal estimates.

Quantifies how unobserved confounding of a given strength, expressed as two
weighted partial R squared values, would change a weighted least-squares
treatment-effect estimate, its confidence interval, and its significance.
Includes builders for the common weight families, covariate benchmarking
via semi-weights, percentile-bootstrap adjusted inference, and a simulation
harness.
"""

from .bootstrap import (
    AdjustedInterval,
    BootstrapConfig,
    BootstrapReplicates,
    adjusted_interval,
    draw_replicates,
    rv_alpha,
)
from .estimators import Dataset, WlsFit, fit_with_z, fit_wls, weighted_diff_in_means
from .exceptions import (
    BalanceError,
    BenchmarkError,
    CollinearityError,
    ConvergenceError,
    DegenerateWeightsError,
    WsensError,
)
from .sensitivity import (
    BenchmarkResult,
    ContourGrid,
    SensitivityParams,
    adjusted_estimate,
    adjusted_from_bound,
    benchmark_bounds,
    bias,
    contour_grid,
    extreme_scenario_r2,
    params_from_z,
    robustness_value_q,
    translator_diagnostic,
    weight_comparison,
)
from .simulation import (
    CoverageResult,
    DgpSpec,
    coverage_experiment,
    estimate_plim_params,
    generate,
    translator_experiment,
)
from .weight_builders import (
    BuilderSpec,
    PropensityModel,
    build_weights,
    entropy_balance,
    exact_match_weights,
    fit_logistic,
    ipw_weights,
    ps_match_weights,
    semi_weights,
)
from .weighted_stats import (
    EssSummary,
    WeightSet,
    effective_sample_size,
    partial_corr,
    partial_r2,
    rescale_weights,
    residualize,
    uniform_weights,
    weighted_corr,
    weighted_cov,
    weighted_mean,
    weighted_sd,
    weighted_var,
)

__version__ = "0.1.0"

__all__ = [
    "AdjustedInterval",
    "BalanceError",
    "BenchmarkError",
    "BenchmarkResult",
    "BootstrapConfig",
    "BootstrapReplicates",
    "BuilderSpec",
    "CollinearityError",
    "ContourGrid",
    "ConvergenceError",
    "CoverageResult",
    "Dataset",
    "DegenerateWeightsError",
    "DgpSpec",
    "EssSummary",
    "PropensityModel",
    "SensitivityParams",
    "WeightSet",
    "WlsFit",
    "WsensError",
    "adjusted_estimate",
    "adjusted_from_bound",
    "adjusted_interval",
    "benchmark_bounds",
    "bias",
    "build_weights",
    "contour_grid",
    "coverage_experiment",
    "draw_replicates",
    "effective_sample_size",
    "entropy_balance",
    "estimate_plim_params",
    "exact_match_weights",
    "extreme_scenario_r2",
    "fit_logistic",
    "fit_with_z",
    "fit_wls",
    "generate",
    "ipw_weights",
    "params_from_z",
    "partial_corr",
    "partial_r2",
    "ps_match_weights",
    "rescale_weights",
    "residualize",
    "robustness_value_q",
    "rv_alpha",
    "semi_weights",
    "translator_diagnostic",
    "translator_experiment",
    "uniform_weights",
    "weight_comparison",
    "weighted_corr",
    "weighted_cov",
    "weighted_diff_in_means",
    "weighted_mean",
    "weighted_sd",
    "weighted_var",
]
