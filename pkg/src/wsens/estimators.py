"""Weighted least-squares treatment-effect estimators.

The main entry point is :func:`fit_wls`, which regresses the outcome on
treatment and covariates under a weight vector and records the residual
spreads and partial R squared that every downstream sensitivity formula
consumes. :func:`fit_with_z` refits with a candidate confounder included
and serves as the exact oracle for the bias decomposition.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .exceptions import DegenerateWeightsError
from .weighted_stats import (
    WeightSet,
    as_weight_array,
    partial_corr,
    residualize,
    _weighted_solve,
)

CENTERINGS = ("none", "ATE", "ATT", "ATC")


@dataclass(frozen=True)
class Dataset:
    """Covariates, binary treatment, outcome, and optional cluster labels."""

    x: np.ndarray
    d: np.ndarray
    y: np.ndarray
    columns: tuple[str, ...]
    cluster: np.ndarray | None = None

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        if x.shape[0] == 1 and len(np.asarray(self.d)) != 1:
            x = x.T
        d = np.asarray(self.d, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "columns", tuple(self.columns))
        n = d.shape[0]
        if x.shape[0] != n or y.shape[0] != n:
            raise ValueError("x, d, and y must have the same number of rows")
        if len(self.columns) != x.shape[1]:
            raise ValueError("column names must match the number of covariates")
        if len(set(self.columns)) != len(self.columns):
            raise ValueError("covariate column names must be unique")
        for arr, name in ((x, "x"), (d, "d"), (y, "y")):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
        uniq = np.unique(d)
        if not np.all(np.isin(uniq, (0.0, 1.0))) or uniq.size != 2:
            raise ValueError("treatment must be binary with both arms present")
        if self.cluster is not None:
            cl = np.asarray(self.cluster)
            if cl.shape[0] != n:
                raise ValueError("cluster labels must have one entry per unit")
            object.__setattr__(self, "cluster", cl)

    @property
    def n(self) -> int:
        return self.d.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def column_indices(self, names) -> list[int]:
        lookup = {name: j for j, name in enumerate(self.columns)}
        missing = [name for name in names if name not in lookup]
        if missing:
            raise KeyError(f"unknown covariate column(s): {', '.join(missing)}")
        return [lookup[name] for name in names]

    def drop_columns(self, names) -> "Dataset":
        drop = set(self.column_indices(names))
        keep = [j for j in range(self.p) if j not in drop]
        return replace(
            self,
            x=self.x[:, keep],
            columns=tuple(self.columns[j] for j in keep),
        )

    def take(self, idx) -> "Dataset":
        """Row subset/resample; cluster labels follow along."""
        idx = np.asarray(idx)
        return Dataset(
            x=self.x[idx],
            d=self.d[idx],
            y=self.y[idx],
            columns=self.columns,
            cluster=None if self.cluster is None else self.cluster[idx],
        )


@dataclass(frozen=True)
class WlsFit:
    """Fitted weighted regression with the statistics sensitivity needs.

    ``sd_y_resid`` is the weighted sd of the outcome residual from the full
    design (treatment included); ``sd_d_resid`` the weighted sd of the
    treatment residual given the covariate block alone. ``r2_yd_given_x``
    is the weighted partial R squared of outcome on treatment given the
    covariate block actually used in the fit (centered/interacted when Lin
    centering is on).
    """

    tau_hat: float
    mu_hat: float
    beta_hat: np.ndarray
    sd_y_resid: float
    sd_d_resid: float
    r2_yd_given_x: float
    centering: str
    weights: WeightSet
    n: int
    p: int
    design_columns: tuple[str, ...] = ()
    gamma_hat: float | None = None


def design_covariates(data: Dataset, w, centering: str) -> tuple[np.ndarray, tuple[str, ...]]:
    """Covariate block entering the regression alongside the intercept and D.

    For ``centering="none"`` this is X unchanged. Otherwise X is replaced by
    (X - m(X), D * (X - m(X))) where m(X) is the plain sample mean of the
    group matching the estimand (everyone for ATE, treated for ATT,
    controls for ATC).
    """
    if centering not in CENTERINGS:
        raise ValueError(f"unknown centering {centering!r}")
    if centering == "none" or data.p == 0:
        return data.x, data.columns
    if centering == "ATE":
        m = data.x.mean(axis=0)
    elif centering == "ATT":
        m = data.x[data.d == 1].mean(axis=0)
    else:
        m = data.x[data.d == 0].mean(axis=0)
    xc = data.x - m
    names = tuple(f"{c}.c" for c in data.columns) + tuple(f"d:{c}.c" for c in data.columns)
    return np.hstack([xc, data.d[:, None] * xc]), names


def _check_arms(d: np.ndarray, wn: np.ndarray) -> None:
    for group in (0, 1):
        if wn[d == group].sum() <= 0:
            raise DegenerateWeightsError(f"treatment arm {group} has zero total weight")


def _solve_wls(design: np.ndarray, y: np.ndarray, wn: np.ndarray, names) -> np.ndarray:
    sw = np.sqrt(wn / wn.sum())
    return _weighted_solve(sw[:, None] * design, sw * y, columns=names)


def fit_wls(data: Dataset, w, centering: str = "none") -> WlsFit:
    """Weighted regression of Y on (1, D, covariate block).

    Solves the weighted normal equations through a QR factorization of the
    sqrt-weight scaled design, which stays stable when weights span orders
    of magnitude, and stores every quantity the sensitivity formulas need.
    """
    wn = as_weight_array(w, data.n)
    _check_arms(data.d, wn)
    xd, names = design_covariates(data, wn, centering)
    design = np.column_stack([np.ones(data.n), data.d, xd])
    design_names = ("intercept", "d") + tuple(names)
    coef = _solve_wls(design, data.y, wn, design_names)

    y_resid = data.y - design @ coef
    sd_y = float(np.sqrt(np.average(y_resid**2, weights=wn)))
    d_resid = residualize(data.d, xd, wn)
    var_d = float(np.average(d_resid**2, weights=wn))
    if var_d <= 0:
        raise DegenerateWeightsError("treatment has zero weighted variance given covariates")
    sd_d = float(np.sqrt(var_d))

    y_resid_x = residualize(data.y, xd, wn)
    var_yx = float(np.average(y_resid_x**2, weights=wn))
    r2_yd = 0.0 if var_yx <= 0 else 1.0 - (sd_y**2) / var_yx
    r2_yd = float(min(1.0, max(0.0, r2_yd)))

    weight_set = w if isinstance(w, WeightSet) else WeightSet(wn, rescaled=False)
    return WlsFit(
        tau_hat=float(coef[1]),
        mu_hat=float(coef[0]),
        beta_hat=coef[2:].copy(),
        sd_y_resid=sd_y,
        sd_d_resid=sd_d,
        r2_yd_given_x=r2_yd,
        centering=centering,
        weights=weight_set,
        n=data.n,
        p=data.p,
        design_columns=design_names,
    )


def fit_with_z(data: Dataset, z, w, centering: str = "none") -> WlsFit:
    """Refit with a confounder column included: the target regression.

    ``tau_hat`` of the returned fit is the adjusted effect and ``gamma_hat``
    the coefficient on the confounder; the residual spreads refer to the
    Z-augmented design.
    """
    z = np.asarray(z, dtype=float)
    if z.shape != (data.n,):
        raise ValueError("z must be a vector with one entry per unit")
    wn = as_weight_array(w, data.n)
    _check_arms(data.d, wn)
    xd, names = design_covariates(data, wn, centering)
    design = np.column_stack([np.ones(data.n), data.d, xd, z])
    design_names = ("intercept", "d") + tuple(names) + ("z",)
    coef = _solve_wls(design, data.y, wn, design_names)

    xz = np.column_stack([xd, z])
    y_resid = data.y - design @ coef
    sd_y = float(np.sqrt(np.average(y_resid**2, weights=wn)))
    d_resid = residualize(data.d, xz, wn)
    sd_d = float(np.sqrt(np.average(d_resid**2, weights=wn)))
    y_resid_x = residualize(data.y, xz, wn)
    var_yx = float(np.average(y_resid_x**2, weights=wn))
    r2_yd = 0.0 if var_yx <= 0 else 1.0 - (sd_y**2) / var_yx

    weight_set = w if isinstance(w, WeightSet) else WeightSet(wn, rescaled=False)
    return WlsFit(
        tau_hat=float(coef[1]),
        mu_hat=float(coef[0]),
        beta_hat=coef[2:-1].copy(),
        sd_y_resid=sd_y,
        sd_d_resid=sd_d,
        r2_yd_given_x=float(min(1.0, max(0.0, r2_yd))),
        centering=centering,
        weights=weight_set,
        n=data.n,
        p=data.p,
        design_columns=design_names,
        gamma_hat=float(coef[-1]),
    )


def weighted_diff_in_means(data: Dataset, w) -> float:
    """Hajek estimator: weights renormalized within each treatment arm."""
    wn = as_weight_array(w, data.n)
    out = 0.0
    for group, sign in ((1, 1.0), (0, -1.0)):
        mask = data.d == group
        total = wn[mask].sum()
        if total <= 0:
            raise DegenerateWeightsError(f"treatment arm {group} has zero total weight")
        out += sign * float(wn[mask] @ data.y[mask] / total)
    return out


def partial_corr_given_design(data: Dataset, a, w, centering: str, include_d: bool) -> float:
    """Weighted partial correlation of (Y or D) with ``a`` given the fit's design.

    Helper shared by the sensitivity module: conditions on the same
    covariate block (and optionally the treatment) that a fit with this
    centering would use.
    """
    xd, _ = design_covariates(data, w, centering)
    if include_d:
        cond = np.column_stack([xd, data.d])
        return partial_corr(data.y, a, cond, w)
    return partial_corr(data.d, a, xd, w)
