"""Omitted-variable sensitivity mathematics for weighted regressions.

Everything here is parametrized by two weighted partial R squared values:
how much leftover variation in the treatment a confounder explains given
the covariates, and how much leftover variation in the outcome it explains
given covariates and treatment. The module provides the bias formula, the
adjusted estimate, robustness values, the extreme-scenario statistic,
benchmark bounds anchored on observed covariates via semi-weights, the
translator diagnostic, and contour grids.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .estimators import Dataset, WlsFit, design_covariates
from .exceptions import BenchmarkError, CollinearityError
from .weighted_stats import as_weight_array, effective_sample_size, partial_corr, partial_r2

R2_BOUNDARY = 1.0 - 1e-12


@dataclass(frozen=True)
class SensitivityParams:
    """The two sensitivity parameters plus the product of correlation signs."""

    r2_d: float
    r2_y: float
    sign: int = 1

    def __post_init__(self):
        if not 0.0 <= self.r2_d < 1.0:
            raise ValueError("r2_d must lie in [0, 1)")
        if not 0.0 <= self.r2_y <= 1.0:
            raise ValueError("r2_y must lie in [0, 1]")
        if self.sign not in (-1, 1):
            raise ValueError("sign must be -1 or +1")


@dataclass(frozen=True)
class BenchmarkResult:
    """Bounds on the sensitivity parameters implied by benchmark covariates."""

    benchmark_columns: tuple[str, ...]
    kappa_d: float
    kappa_y: float
    bound_r2_d: float
    bound_r2_y: float
    eta_sq: float
    r2_semi_d_xj: float
    r2_full_d_xj: float
    r2_y_xj: float
    r2_z_xj: float
    bound_r2_y_clamped: bool = False

    def params(self, sign: int = 1) -> SensitivityParams:
        return SensitivityParams(r2_d=self.bound_r2_d, r2_y=self.bound_r2_y, sign=sign)


def bias_magnitude(r2_d: float, r2_y: float, fit: WlsFit) -> float:
    if r2_d >= 1.0:
        raise ValueError("r2_d = 1 leaves no treatment variation; bias undefined")
    if fit.sd_d_resid <= 0:
        raise ValueError("fit has zero residual treatment spread")
    return math.sqrt(r2_y * r2_d / (1.0 - r2_d)) * fit.sd_y_resid / fit.sd_d_resid


def bias(params: SensitivityParams, fit: WlsFit) -> float:
    """Signed bias of the weighted estimate implied by the parameters."""
    return params.sign * bias_magnitude(params.r2_d, params.r2_y, fit)


def params_from_z(data: Dataset, z, w, fit: WlsFit) -> SensitivityParams:
    """Measure the sensitivity parameters from an observed confounder column.

    Uses the same covariate block as ``fit`` (including any Lin centering),
    so plugging the result into :func:`bias` reproduces the difference
    between the original fit and the Z-augmented refit exactly.
    """
    z = np.asarray(z, dtype=float)
    wn = as_weight_array(w, data.n)
    xd, _ = design_covariates(data, wn, fit.centering)
    r_d = partial_corr(data.d, z, xd, wn)
    if r_d**2 >= R2_BOUNDARY:
        raise CollinearityError("z explains essentially all treatment variation given x")
    xdd = np.column_stack([xd, data.d])
    r_y = partial_corr(data.y, z, xdd, wn)
    sign = 1 if r_y * r_d >= 0 else -1
    return SensitivityParams(r2_d=min(r_d**2, R2_BOUNDARY), r2_y=min(r_y**2, 1.0), sign=sign)


def adjusted_estimate(params: SensitivityParams, fit: WlsFit, worst_case: bool = True) -> float:
    """Adjusted point estimate: the original estimate minus the implied bias.

    With ``worst_case`` (the default) the bias sign is taken to push the
    estimate toward zero, matching how adjusted estimates are reported;
    pass ``worst_case=False`` to use the sign recorded in ``params``.
    """
    mag = bias_magnitude(params.r2_d, params.r2_y, fit)
    if worst_case:
        sign = 1.0 if fit.tau_hat >= 0 else -1.0
    else:
        sign = float(params.sign)
    return fit.tau_hat - sign * mag


def adjusted_from_bound(bound: BenchmarkResult, fit: WlsFit, worst_case: bool = True) -> float:
    return adjusted_estimate(bound.params(), fit, worst_case=worst_case)


def robustness_value_q(fit: WlsFit, q: float = 1.0) -> float:
    """Equal-parameter confounding strength that removes 100*q percent of the estimate."""
    if not 0.0 < q <= 1.0:
        raise ValueError("q must lie in (0, 1]")
    r2 = fit.r2_yd_given_x
    if r2 >= 1.0:
        return 1.0
    omega = q * math.sqrt(r2 / (1.0 - r2))
    return 0.5 * (math.sqrt(omega**4 + 4.0 * omega**2) - omega**2)


def extreme_scenario_r2(fit: WlsFit) -> float:
    """Treatment-side strength that zeroes the estimate when the outcome side is maximal.

    If confounding explained all remaining weighted outcome variation, it
    would suffice for it to explain this share of the remaining treatment
    variation to bring the adjusted estimate to zero.
    """
    return fit.r2_yd_given_x


def _design_split(data: Dataset, w, centering: str, benchmark_columns):
    """Split the fit's covariate block into benchmark-derived and remaining columns."""
    idx = set(data.column_indices(benchmark_columns))
    xd, _ = design_covariates(data, w, centering)
    p = data.p
    if centering == "none":
        bench_cols = sorted(idx)
        rest_cols = [j for j in range(p) if j not in idx]
    else:
        # centered block is [x - m, d * (x - m)]: each raw column owns two
        bench_cols = sorted(idx) + [p + j for j in sorted(idx)]
        rest_cols = [j for j in range(p) if j not in idx] + [
            p + j for j in range(p) if j not in idx
        ]
    return xd[:, bench_cols], xd[:, rest_cols]


def benchmark_bounds(
    fit: WlsFit,
    data: Dataset,
    w,
    w_semi,
    benchmark_columns,
    kappa_d: float = 1.0,
    kappa_y: float = 1.0,
) -> BenchmarkResult:
    """Bound the sensitivity parameters by confounding kappa times as strong
    as the benchmark covariates.

    The treatment-side bound compares against the benchmark's strength in
    the semi-weighted distribution (weights rebuilt without the benchmark
    columns), since the full weights typically erase treatment-covariate
    correlation. The outcome-side bound is conservative and is clamped at 1
    when vacuous.
    """
    benchmark_columns = tuple(benchmark_columns)
    if not benchmark_columns:
        raise ValueError("at least one benchmark column is required")
    if kappa_d < 0 or kappa_y < 0:
        raise ValueError("kappa values must be nonnegative")
    wn = as_weight_array(w, data.n)
    wn_semi = as_weight_array(w_semi, data.n)
    x1, x_rest = _design_split(data, wn, fit.centering, benchmark_columns)

    r2_semi_d = partial_r2(data.d, x1, x_rest, wn_semi)
    r2_full_d = partial_r2(data.d, x1, x_rest, wn)
    cond_yd = np.column_stack([x_rest, data.d]) if x_rest.size else data.d.reshape(-1, 1)
    r2_y_xj = partial_r2(data.y, x1, cond_yd, wn)

    if r2_full_d >= 1.0:
        raise BenchmarkError("benchmark columns explain all weighted treatment variation")
    bound_r2_d = kappa_d * r2_semi_d / (1.0 - r2_full_d)
    if bound_r2_d >= 1.0:
        raise BenchmarkError(
            f"benchmark too strong: implied treatment-side bound {bound_r2_d:.4f} >= 1"
        )

    kd_r2 = kappa_d * r2_semi_d
    if kd_r2 >= 1.0:
        raise BenchmarkError("kappa_d times the semi-weighted benchmark strength reaches 1")
    r2_z = (kd_r2 / (1.0 - kd_r2)) * (r2_full_d / (1.0 - r2_full_d))
    if r2_z >= 1.0:
        raise BenchmarkError("implied confounder-benchmark association reaches 1")
    eta_sq = (math.sqrt(kappa_y) + math.sqrt(r2_z)) ** 2 / (1.0 - r2_z)

    if r2_y_xj >= 1.0:
        raise BenchmarkError("benchmark columns explain all remaining weighted outcome variation")
    bound_r2_y = eta_sq * r2_y_xj / (1.0 - r2_y_xj)
    clamped = bound_r2_y > 1.0
    return BenchmarkResult(
        benchmark_columns=benchmark_columns,
        kappa_d=kappa_d,
        kappa_y=kappa_y,
        bound_r2_d=float(bound_r2_d),
        bound_r2_y=float(min(bound_r2_y, 1.0)),
        eta_sq=float(eta_sq),
        r2_semi_d_xj=float(r2_semi_d),
        r2_full_d_xj=float(r2_full_d),
        r2_y_xj=float(r2_y_xj),
        r2_z_xj=float(r2_z),
        bound_r2_y_clamped=clamped,
    )


def translator_diagnostic(data: Dataset, z, w, w_semi, benchmark_columns) -> dict:
    """How much the weighting amplifies a confounder's treatment association.

    Returns the semi-strength (confounder versus benchmark, both measured
    under the semi-weights) and the translator (the ratio of the
    confounder's treatment R squared under the full weights to that under
    the semi-weights). Their product is the effective treatment-side kappa.
    """
    z = np.asarray(z, dtype=float)
    benchmark_columns = tuple(benchmark_columns)
    rest = data.drop_columns(benchmark_columns)
    x_rest = rest.x
    x1 = data.x[:, data.column_indices(benchmark_columns)]
    wn = as_weight_array(w, data.n)
    wn_semi = as_weight_array(w_semi, data.n)

    r2_w_dz = partial_r2(data.d, z, x_rest, wn)
    r2_semi_dz = partial_r2(data.d, z, x_rest, wn_semi)
    if r2_semi_dz <= 1e-12:
        raise ValueError("confounder has zero semi-weighted treatment association; translator undefined")
    r2_semi_dx1 = partial_r2(data.d, x1, x_rest, wn_semi)
    if r2_semi_dx1 <= 1e-12:
        raise ValueError("benchmark has zero semi-weighted treatment association; semi-strength undefined")
    return {
        "translator": r2_w_dz / r2_semi_dz,
        "semi_strength": r2_semi_dz / r2_semi_dx1,
    }


@dataclass(frozen=True)
class ContourGrid:
    """Adjusted estimates (or CI endpoints) over a grid of parameter values."""

    r2_d_axis: np.ndarray
    r2_y_axis: np.ndarray
    values: np.ndarray
    mode: str

    def to_csv(self, path) -> None:
        """Long-format rows (r2_d, r2_y, value) for external plotting."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["r2_d", "r2_y", "value"])
            for i, rd in enumerate(self.r2_d_axis):
                for j, ry in enumerate(self.r2_y_axis):
                    writer.writerow([f"{rd:.12g}", f"{ry:.12g}", f"{self.values[i, j]:.12g}"])


def default_grid_axis(points: int = 21, upper: float = 0.5) -> np.ndarray:
    return np.linspace(0.0, upper, points, endpoint=False)


def contour_grid(
    fit: WlsFit,
    r2_d_axis=None,
    r2_y_axis=None,
    mode: str = "estimate",
    replicates=None,
    alpha: float = 0.05,
    worst_case: bool = True,
) -> ContourGrid:
    """Evaluate the adjusted estimate (or a bootstrap CI endpoint) on a grid.

    ``mode`` is one of "estimate", "lower_ci", "upper_ci"; the CI modes
    need a BootstrapReplicates object and reuse it across all cells.
    """
    from .bootstrap import adjusted_interval  # local import to avoid a cycle

    r2_d_axis = default_grid_axis() if r2_d_axis is None else np.asarray(r2_d_axis, dtype=float)
    r2_y_axis = default_grid_axis() if r2_y_axis is None else np.asarray(r2_y_axis, dtype=float)
    if np.any(r2_d_axis < 0) or np.any(r2_d_axis >= 1):
        raise ValueError("r2_d axis values must lie in [0, 1)")
    if np.any(r2_y_axis < 0) or np.any(r2_y_axis > 1):
        raise ValueError("r2_y axis values must lie in [0, 1]")
    if mode not in ("estimate", "lower_ci", "upper_ci"):
        raise ValueError(f"unknown contour mode {mode!r}")
    if mode != "estimate" and replicates is None:
        raise ValueError("CI contour modes require bootstrap replicates")

    sign = 1 if fit.tau_hat >= 0 else -1
    values = np.empty((r2_d_axis.size, r2_y_axis.size))
    for i, rd in enumerate(r2_d_axis):
        for j, ry in enumerate(r2_y_axis):
            params = SensitivityParams(r2_d=float(rd), r2_y=float(ry), sign=sign)
            if mode == "estimate":
                values[i, j] = adjusted_estimate(params, fit, worst_case=worst_case)
            else:
                interval = adjusted_interval(replicates, params, alpha=alpha)
                values[i, j] = interval.ci[0] if mode == "lower_ci" else interval.ci[1]
    return ContourGrid(r2_d_axis=r2_d_axis, r2_y_axis=r2_y_axis, values=values, mode=mode)


def weight_comparison(w, w_semi, d) -> dict:
    """Summaries for judging how far the semi-weights drift from the full weights."""
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    wv = as_weight_array(w, n)
    sv = as_weight_array(w_semi, n)
    if np.std(wv) == 0 or np.std(sv) == 0:
        raise ValueError("weight comparison undefined for a constant weight vector")
    corr = float(np.corrcoef(wv, sv)[0, 1])
    by_group = []
    for group in (0, 1):
        mask = d == group
        if np.std(wv[mask]) == 0 or np.std(sv[mask]) == 0:
            by_group.append(float("nan"))
        else:
            by_group.append(float(np.corrcoef(wv[mask], sv[mask])[0, 1]))
    return {
        "correlation": corr,
        "correlation_by_group": (by_group[0], by_group[1]),
        "ess_full": effective_sample_size(wv, d),
        "ess_semi": effective_sample_size(sv, d),
    }
