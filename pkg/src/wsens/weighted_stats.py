"""Sample statistics for weighted empirical distributions.

Unit i carries probability w_i / n, so every statistic below is the plain
(population-divisor) moment of that distribution: means, covariances,
correlations, residualization against a covariate block, (partial) R
squared, and effective sample sizes. Weights are normalized internally,
which makes every statistic invariant to rescaling all weights by a
positive constant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import CollinearityError, DegenerateWeightsError

PIVOT_RTOL = 1e-12

WEIGHT_METHODS = ("uniform", "ipw", "entropy_balance", "ps_match", "exact_match", "external")
ESTIMANDS = ("ATE", "ATT", "ATC", "none")


@dataclass(frozen=True)
class WeightSet:
    """Per-unit weights plus provenance.

    ``weights`` is the working vector (summing to n once ``rescaled`` is
    set); ``raw`` keeps the pre-rescaling values so bootstrap resampling
    can renormalize from the original scale. Zero weights are legal and
    units are never dropped from the arrays, so indices stay aligned
    between full weights and semi-weights.
    """

    weights: np.ndarray
    method: str = "external"
    estimand: str = "none"
    rescaled: bool = False
    raw: np.ndarray | None = None
    clamp_count: int = 0
    dropped: tuple[int, ...] = ()

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if w.ndim != 1:
            raise ValueError("weights must be one-dimensional")
        if not np.all(np.isfinite(w)):
            raise DegenerateWeightsError("weights contain non-finite values")
        if np.any(w < 0):
            raise DegenerateWeightsError("weights must be nonnegative")
        if not np.any(w > 0):
            raise DegenerateWeightsError("all weights are zero")
        if self.method not in WEIGHT_METHODS:
            raise ValueError(f"unknown weight method {self.method!r}")
        if self.estimand not in ESTIMANDS:
            raise ValueError(f"unknown estimand {self.estimand!r}")
        if self.raw is not None:
            object.__setattr__(self, "raw", np.asarray(self.raw, dtype=float))

    def __len__(self) -> int:
        return self.weights.shape[0]

    @property
    def raw_weights(self) -> np.ndarray:
        return self.weights if self.raw is None else self.raw


def uniform_weights(n: int) -> WeightSet:
    """All-ones weights (the unweighted empirical distribution)."""
    return WeightSet(np.ones(n), method="uniform", estimand="none", rescaled=True)


def as_weight_array(w, n: int) -> np.ndarray:
    """Extract a length-n weight vector normalized to sum to n."""
    arr = w.weights if isinstance(w, WeightSet) else np.asarray(w, dtype=float)
    if arr.shape != (n,):
        raise ValueError(f"weight length {arr.shape} does not match data length {n}")
    total = arr.sum()
    if not np.isfinite(total) or total <= 0:
        raise DegenerateWeightsError("weights must sum to a positive finite value")
    if np.any(arr < 0):
        raise DegenerateWeightsError("weights must be nonnegative")
    return arr * (n / total)


def weighted_mean(values, w):
    """Mean of ``values`` under the weighted empirical distribution.

    ``values`` may be a vector or a matrix (column-wise means). Weights are
    normalized internally, so any positive scaling of ``w`` is accepted.
    """
    values = np.asarray(values, dtype=float)
    wn = as_weight_array(w, values.shape[0]) / values.shape[0]
    if values.ndim == 1:
        return float(wn @ values)
    return wn @ values


def weighted_cov(a, b, w):
    """Weighted covariance with population (divide-by-n) normalization.

    Returns a scalar when both inputs are vectors, otherwise the full
    cross-covariance matrix between the columns of ``a`` and ``b``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[0] != b.shape[0]:
        raise ValueError("a and b must have the same number of rows")
    n = a.shape[0]
    wn = as_weight_array(w, n) / n
    scalar = a.ndim == 1 and b.ndim == 1
    a2 = a.reshape(n, -1)
    b2 = b.reshape(n, -1)
    ac = a2 - wn @ a2
    bc = b2 - wn @ b2
    cov = (ac * wn[:, None]).T @ bc
    return float(cov[0, 0]) if scalar else cov


def weighted_var(a, w):
    """Weighted variance (scalar input) or covariance matrix (matrix input)."""
    return weighted_cov(a, a, w)


def weighted_sd(a, w) -> float:
    return float(np.sqrt(weighted_var(np.asarray(a, dtype=float), w)))


def weighted_corr(a, b, w) -> float:
    """Weighted correlation between two vectors."""
    va = weighted_var(a, w)
    vb = weighted_var(b, w)
    if va <= 0 or vb <= 0:
        raise ValueError("correlation undefined for a variable with zero weighted variance")
    return float(weighted_cov(a, b, w) / np.sqrt(va * vb))


def _center(values: np.ndarray, wn: np.ndarray) -> np.ndarray:
    return values - wn @ values


def residualize(b, a, w, columns=None):
    """Partial a covariate block out of ``b`` in the weighted metric.

    Centers everything by weighted means (an implicit intercept), then
    removes the weighted projection of ``b`` on the columns of ``a``. With
    an empty ``a`` the result is simply the centered ``b``. Residuals have
    zero weighted mean and zero weighted covariance with every column of
    ``a``.

    Args:
      b: vector (n,) or matrix (n, k) to residualize, column by column.
      a: conditioning matrix (n, p); None or zero columns for none.
      w: WeightSet or raw weight vector.
      columns: optional names for the columns of ``a``, used in the
        collinearity error message.

    Raises:
      CollinearityError: ``a`` is rank deficient under the weights, found
        via QR with column pivoting at relative pivot tolerance 1e-12.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    wn = as_weight_array(w, n) / n
    b_was_1d = b.ndim == 1
    b2 = b.reshape(n, -1)
    bc = _center(b2, wn)
    if a is None:
        return bc[:, 0] if b_was_1d else bc
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a.reshape(n, 1)
    if a.shape[1] == 0:
        return bc[:, 0] if b_was_1d else bc
    if a.shape[0] != n:
        raise ValueError("a and b must have the same number of rows")
    ac = _center(a, wn)
    sw = np.sqrt(wn)
    coef = _weighted_solve(sw[:, None] * ac, sw[:, None] * bc, columns)
    resid = bc - ac @ coef
    return resid[:, 0] if b_was_1d else resid


def _weighted_solve(qa: np.ndarray, qb: np.ndarray, columns=None) -> np.ndarray:
    """Least-squares solve of qa @ coef = qb with pivoted-QR rank checking."""
    q, r, piv = scipy.linalg.qr(qa, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0.0:
        raise CollinearityError(_collinear_message(piv, 0, columns))
    rank = int(np.sum(diag >= PIVOT_RTOL * diag[0]))
    if rank < qa.shape[1]:
        raise CollinearityError(_collinear_message(piv, rank, columns))
    coef_piv = scipy.linalg.solve_triangular(r, q.T @ qb)
    coef = np.empty_like(coef_piv)
    coef[piv] = coef_piv
    return coef


def _collinear_message(piv, rank, columns) -> str:
    bad = piv[rank:]
    if columns is not None:
        names = [str(columns[j]) for j in bad]
    else:
        names = [f"column {j}" for j in bad]
    return "conditioning matrix is rank deficient in the weighted metric; collinear: " + ", ".join(
        names
    )


def partial_r2(b, a, x, w) -> float:
    """Weighted partial R squared of ``b`` on ``a`` given ``x``.

    Residualizes both sides on ``x`` and returns the share of leftover
    weighted variance in ``b`` explained by ``a``. Always in [0, 1]; equal
    to the squared weighted partial correlation when ``a`` is a single
    column.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    wn = as_weight_array(w, n)
    b_res = residualize(b, x, wn)
    var_b = float(np.average(b_res**2, weights=wn))
    var_total = float(np.average(residualize(b, None, wn) ** 2, weights=wn))
    # residual variance at rounding-noise level counts as zero
    if var_b <= 0 or var_b <= var_total * (PIVOT_RTOL**2):
        raise ValueError("b has zero weighted residual variance given x; partial R2 undefined")
    a = np.asarray(a, dtype=float)
    a_res = residualize(a.reshape(n, -1), x, wn)
    e = residualize(b_res, a_res, wn)
    r2 = 1.0 - float(np.average(e**2, weights=wn)) / var_b
    return float(min(1.0, max(0.0, r2)))


def partial_corr(b, a, x, w) -> float:
    """Signed weighted partial correlation of vectors ``b`` and ``a`` given ``x``."""
    b_res = residualize(b, x, w)
    a_res = residualize(a, x, w)
    return weighted_corr(b_res, a_res, w)


@dataclass(frozen=True)
class EssSummary:
    """Effective sample sizes overall and per treatment arm."""

    overall: float
    fraction_of_n: float
    by_group: tuple[float, float] | None = None
    by_group_fraction: tuple[float, float] | None = None


def _ess(w: np.ndarray) -> float:
    total = w.sum()
    if total <= 0:
        raise DegenerateWeightsError("effective sample size undefined for all-zero weights")
    return float(total**2 / np.sum(w**2))


def effective_sample_size(w, d=None) -> EssSummary:
    """(sum w)^2 / sum w^2, overall and optionally within each arm of ``d``."""
    arr = w.weights if isinstance(w, WeightSet) else np.asarray(w, dtype=float)
    n = arr.shape[0]
    overall = _ess(arr)
    if d is None:
        return EssSummary(overall=overall, fraction_of_n=overall / n)
    d = np.asarray(d)
    by = []
    frac = []
    for group in (0, 1):
        mask = d == group
        if not mask.any():
            raise DegenerateWeightsError(f"treatment group {group} is empty")
        by.append(_ess(arr[mask]))
        frac.append(by[-1] / mask.sum())
    return EssSummary(
        overall=overall,
        fraction_of_n=overall / n,
        by_group=(by[0], by[1]),
        by_group_fraction=(frac[0], frac[1]),
    )


def rescale_weights(
    w_raw,
    d,
    method: str = "external",
    estimand: str = "none",
    clamp_count: int = 0,
    dropped: tuple[int, ...] = (),
) -> WeightSet:
    """Rescale raw weights so the arm-level effective sample sizes add up.

    Each arm is scaled to carry weight mass n * EFF_d / (EFF_0 + EFF_1),
    which leaves within-arm proportions (and thus all Hajek-style group
    means) untouched while making EFF(w) = EFF_0(w) + EFF_1(w) and the
    total sum equal to n.
    """
    w_raw = np.asarray(w_raw, dtype=float)
    d = np.asarray(d)
    n = w_raw.shape[0]
    if d.shape[0] != n:
        raise ValueError("weights and treatment vector must have the same length")
    masks = [d == 0, d == 1]
    sums = [w_raw[m].sum() for m in masks]
    if sums[0] <= 0 or sums[1] <= 0:
        raise DegenerateWeightsError("each treatment arm needs positive total raw weight")
    effs = [_ess(w_raw[m]) for m in masks]
    out = np.empty(n)
    for mask, total, eff in zip(masks, sums, effs):
        out[mask] = n * (w_raw[mask] / total) * (eff / (effs[0] + effs[1]))
    return WeightSet(
        out,
        method=method,
        estimand=estimand,
        rescaled=True,
        raw=w_raw.copy(),
        clamp_count=clamp_count,
        dropped=dropped,
    )
