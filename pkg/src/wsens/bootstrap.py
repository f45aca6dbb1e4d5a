"""Percentile-bootstrap inference for adjusted estimates.

Replicates store the triple (effect estimate, residual outcome spread,
residual treatment spread), so confidence intervals for any values of the
sensitivity parameters can be recomputed from one replicate set without
resampling again. Three resampling modes are supported: full
re-estimation of the weights per sample, resampling tuples with the
original weights held fixed, and cluster resampling.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .estimators import Dataset, design_covariates, fit_wls
from .exceptions import (
    BalanceError,
    CollinearityError,
    ConvergenceError,
    DegenerateWeightsError,
    WsensError,
)
from .sensitivity import SensitivityParams
from .weighted_stats import as_weight_array
from .weight_builders import BuilderSpec, build_weights
from .weighted_stats import WeightSet, rescale_weights

MODES = ("reestimate", "fixed_weights", "cluster")

_REPLICATE_ERRORS = (CollinearityError, ConvergenceError, BalanceError, DegenerateWeightsError)


@dataclass(frozen=True)
class BootstrapConfig:
    """Resampling configuration. ``seed`` is mandatory: no silent nondeterminism."""

    n_replicates: int = 1000
    mode: str = "fixed_weights"
    alpha: float = 0.05
    seed: int = 0
    max_failures: int | None = None

    def __post_init__(self):
        if self.n_replicates < 2:
            raise ValueError("at least 2 bootstrap replicates are required")
        if self.mode not in MODES:
            raise ValueError(f"unknown bootstrap mode {self.mode!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")

    @property
    def failure_budget(self) -> int:
        if self.max_failures is not None:
            return self.max_failures
        return int(math.ceil(0.02 * self.n_replicates))


@dataclass(frozen=True)
class BootstrapReplicates:
    """Per-replicate statistics plus the failure count and config echo."""

    tau: np.ndarray
    sd_y: np.ndarray
    sd_d: np.ndarray
    failures: int
    config: BootstrapConfig

    def __len__(self) -> int:
        return self.tau.shape[0]

    def save_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(
                f"# mode={self.config.mode} alpha={self.config.alpha} "
                f"seed={self.config.seed} B={self.config.n_replicates} "
                f"failures={self.failures}\n"
            )
            fh.write("replicate_index,tau_hat,sd_y,sd_d\n")
            for i in range(len(self)):
                fh.write(f"{i},{self.tau[i]:.17g},{self.sd_y[i]:.17g},{self.sd_d[i]:.17g}\n")

    @classmethod
    def load_csv(cls, path) -> "BootstrapReplicates":
        meta = {}
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    for token in line[1:].split():
                        key, _, value = token.partition("=")
                        meta[key] = value
                    continue
                if line.startswith("replicate_index"):
                    continue
                rows.append([float(v) for v in line.split(",")])
        arr = np.asarray(rows)
        config = BootstrapConfig(
            n_replicates=int(meta.get("B", len(rows))),
            mode=meta.get("mode", "fixed_weights"),
            alpha=float(meta.get("alpha", 0.05)),
            seed=int(meta.get("seed", 0)),
        )
        return cls(
            tau=arr[:, 1],
            sd_y=arr[:, 2],
            sd_d=arr[:, 3],
            failures=int(meta.get("failures", 0)),
            config=config,
        )


def _replicate_rng(seed: int, index: int) -> np.random.Generator:
    # keyed by (seed, replicate index) so serial and parallel runs agree
    return np.random.default_rng(np.random.SeedSequence((seed, index)))


def _replicate_stats(data: Dataset, w, centering: str) -> tuple[float, float, float]:
    """(tau_hat, sd_y_resid, sd_d_resid) for one resample, tolerating dead columns.

    Resampling can zero out or duplicate covariate columns (cluster
    resampling with cluster fixed effects omits whole indicator columns),
    which the strict fit would reject wholesale. The treatment coefficient
    stays identified as long as the treatment is not itself in the
    collinear set, so replicates solve by minimum-norm least squares and
    fail only when the residual treatment variation vanishes.
    """
    wn = as_weight_array(w, data.n)
    xd, _ = design_covariates(data, wn, centering)
    sw = np.sqrt(wn / data.n)
    design = np.column_stack([np.ones(data.n), data.d, xd])
    coef, *_ = np.linalg.lstsq(sw[:, None] * design, sw * data.y, rcond=None)
    y_resid = data.y - design @ coef
    sd_y = float(np.sqrt(np.average(y_resid**2, weights=wn)))

    base = np.column_stack([np.ones(data.n), xd])
    c0, *_ = np.linalg.lstsq(sw[:, None] * base, sw * data.d, rcond=None)
    d_resid = data.d - base @ c0
    var_d_resid = float(np.average(d_resid**2, weights=wn))
    d_centered = data.d - np.average(data.d, weights=wn)
    var_d = float(np.average(d_centered**2, weights=wn))
    if var_d_resid <= var_d * 1e-24:
        raise DegenerateWeightsError("treatment collinear with covariates in this resample")
    return float(coef[1]), sd_y, float(np.sqrt(var_d_resid))


def _resample_indices(data: Dataset, mode: str, rng: np.random.Generator) -> np.ndarray:
    n = data.n
    if mode in ("reestimate", "fixed_weights"):
        return rng.integers(0, n, size=n)
    labels = np.unique(data.cluster)
    drawn = rng.integers(0, labels.size, size=labels.size)
    parts = [np.flatnonzero(data.cluster == labels[g]) for g in drawn]
    return np.concatenate(parts)


def draw_replicates(
    data: Dataset,
    weight_source,
    centering: str,
    config: BootstrapConfig,
) -> BootstrapReplicates:
    """Draw bootstrap replicates of (tau_hat, sd_y_resid, sd_d_resid).

    ``weight_source`` is either a BuilderSpec (weights recomputed on each
    resample, as in reestimate and builder-backed cluster mode) or a
    WeightSet whose raw weights ride along with the resampled tuples and
    are renormalized per sample. Degenerate resamples (a single treatment
    arm, rank deficiency, builder failures) are dropped and counted; the
    run aborts once the failure budget is exceeded.
    """
    is_spec = isinstance(weight_source, BuilderSpec)
    if not is_spec and not isinstance(weight_source, WeightSet):
        raise TypeError("weight_source must be a BuilderSpec or a WeightSet")
    if config.mode == "reestimate" and not is_spec:
        raise ValueError("reestimate mode requires a BuilderSpec weight source")
    if config.mode == "cluster" and data.cluster is None:
        raise ValueError("cluster mode requires cluster labels on the dataset")

    if config.mode == "fixed_weights" and is_spec:
        weight_source = build_weights(weight_source, data)
        is_spec = False
    raw_full = None if is_spec else weight_source.raw_weights

    taus, sdys, sdds = [], [], []
    failures = 0
    for b in range(config.n_replicates):
        rng = _replicate_rng(config.seed, b)
        idx = _resample_indices(data, config.mode, rng)
        db = data.d[idx]
        if db.min() == db.max():
            failures += 1
        else:
            try:
                sample = data.take(idx)
                if is_spec:
                    wb = build_weights(weight_source, sample)
                else:
                    wb = rescale_weights(raw_full[idx], db)
                tau, sd_y, sd_d = _replicate_stats(sample, wb, centering)
            except _REPLICATE_ERRORS:
                failures += 1
            else:
                taus.append(tau)
                sdys.append(sd_y)
                sdds.append(sd_d)
        if failures > config.failure_budget:
            raise WsensError(
                f"{failures} degenerate bootstrap replicates exceed the budget "
                f"of {config.failure_budget}"
            )
    return BootstrapReplicates(
        tau=np.asarray(taus),
        sd_y=np.asarray(sdys),
        sd_d=np.asarray(sdds),
        failures=failures,
        config=config,
    )


@dataclass(frozen=True)
class AdjustedInterval:
    ci: tuple[float, float]
    se: float


def _adjusted_values(reps: BootstrapReplicates, params: SensitivityParams) -> np.ndarray:
    factor = math.sqrt(params.r2_y * params.r2_d / (1.0 - params.r2_d))
    return reps.tau - params.sign * factor * reps.sd_y / reps.sd_d


def adjusted_interval(
    reps: BootstrapReplicates, params: SensitivityParams, alpha: float | None = None
) -> AdjustedInterval:
    """Percentile CI and bootstrap SE of the adjusted estimate at fixed parameters.

    Applies the bias formula inside each replicate with that replicate's
    spreads, then takes empirical quantiles (linear interpolation between
    order statistics) and the sample standard deviation.
    """
    if len(reps) == 0:
        raise ValueError("no successful bootstrap replicates")
    alpha = reps.config.alpha if alpha is None else alpha
    adj = _adjusted_values(reps, params)
    lo, hi = np.quantile(adj, [alpha / 2.0, 1.0 - alpha / 2.0])
    se = float(np.std(adj, ddof=1)) if len(reps) > 1 else float("nan")
    return AdjustedInterval(ci=(float(lo), float(hi)), se=se)


def rv_alpha(
    data: Dataset,
    weight_source,
    centering: str = "none",
    alpha: float = 0.05,
    config: BootstrapConfig | None = None,
    replicates: BootstrapReplicates | None = None,
    tol: float = 1e-4,
) -> float:
    """Smallest equal sensitivity-parameter value whose adjusted CI includes zero.

    Reuses a single replicate set across the search. Returns 0 when the
    unadjusted CI already includes zero, and 1 (with a warning) when even
    near-maximal confounding leaves the interval away from zero.
    """
    if replicates is None:
        if config is None:
            raise ValueError("either a config or a precomputed replicate set is required")
        replicates = draw_replicates(data, weight_source, centering, config)

    if isinstance(weight_source, BuilderSpec):
        w_full = build_weights(weight_source, data)
    else:
        w_full = weight_source
    fit = fit_wls(data, w_full, centering=centering)
    sign = 1 if fit.tau_hat >= 0 else -1

    def insignificant(x: float) -> bool:
        # as x grows the interval slides toward (and past) zero; the
        # endpoint on the near side crossing zero is the monotone event
        params = SensitivityParams(r2_d=x, r2_y=x, sign=sign)
        lo, hi = adjusted_interval(replicates, params, alpha=alpha).ci
        return lo <= 0.0 if sign > 0 else hi >= 0.0

    if insignificant(0.0):
        return 0.0
    hi = 1.0 - 1e-6
    if not insignificant(hi):
        warnings.warn(
            "adjusted CI stays away from zero even at near-maximal confounding; returning 1",
            stacklevel=2,
        )
        return 1.0
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if insignificant(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
