"""Constructors for the supported weight families.

Covers inverse propensity score weights (ATE/ATT/ATC), entropy balancing,
nearest-neighbor propensity score matching, exact matching on discrete
covariates, and the semi-weights obtained by rerunning a builder with
benchmark covariates removed. Every builder is deterministic given its
inputs and finishes by applying the arm-wise rescaling from
:func:`wsens.weighted_stats.rescale_weights`.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit, logsumexp

from .estimators import Dataset
from .exceptions import BalanceError, ConvergenceError
from .weighted_stats import WeightSet, rescale_weights, uniform_weights

SCORE_CLAMP = 1e-6

BUILDER_METHODS = ("uniform", "ipw", "entropy_balance", "ps_match", "exact_match")


@dataclass(frozen=True)
class PropensityModel:
    """Logistic treatment model: intercept-first coefficients and fitted scores."""

    coefficients: np.ndarray
    fitted_scores: np.ndarray
    n_iter: int

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return expit(self.coefficients[0] + x @ self.coefficients[1:])


@dataclass(frozen=True)
class BuilderSpec:
    """Recipe for (re)constructing weights, e.g. inside the bootstrap.

    ``columns`` selects the covariates the builder sees; an empty tuple
    means all dataset columns. ``match_ratio`` and ``with_replacement``
    only apply to ``ps_match``; ``balance_tol`` only to
    ``entropy_balance``.
    """

    method: str
    estimand: str = "ATT"
    columns: tuple[str, ...] = ()
    match_ratio: int = 1
    with_replacement: bool = True
    balance_tol: float = 1e-8

    def __post_init__(self):
        if self.method not in BUILDER_METHODS:
            raise ValueError(f"unknown builder method {self.method!r}")
        if self.estimand not in ("ATE", "ATT", "ATC"):
            raise ValueError(f"unknown estimand {self.estimand!r}")
        if self.match_ratio < 1:
            raise ValueError("match_ratio must be at least 1")
        object.__setattr__(self, "columns", tuple(self.columns))

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "estimand": self.estimand,
            "columns": ",".join(self.columns),
            "match_ratio": self.match_ratio,
            "with_replacement": self.with_replacement,
            "balance_tol": self.balance_tol,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BuilderSpec":
        cols = d.get("columns", "")
        if isinstance(cols, str):
            cols = tuple(c for c in cols.split(",") if c)
        return cls(
            method=d["method"],
            estimand=d.get("estimand", "ATT"),
            columns=tuple(cols),
            match_ratio=int(d.get("match_ratio", 1)),
            with_replacement=_as_bool(d.get("with_replacement", True)),
            balance_tol=float(d.get("balance_tol", 1e-8)),
        )


def _as_bool(v) -> bool:
    if isinstance(v, bool):
        return v
    return str(v).strip().lower() in ("1", "true", "yes", "on")


def fit_logistic(x, d, max_iter: int = 100, tol: float = 1e-8) -> PropensityModel:
    """Maximum-likelihood logistic regression of ``d`` on ``x`` via IRLS.

    Newton steps with halving on deviance increase; converged when the max
    coefficient change drops below ``tol``. Diverging coefficients (the
    perfect-separation signature) or hitting ``max_iter`` raise
    ConvergenceError.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[0] == 1 and len(np.asarray(d)) != 1:
        x = x.T
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    design = np.column_stack([np.ones(n), x])
    beta = np.zeros(design.shape[1])

    def deviance(b):
        eta = design @ b
        # -2 loglik up to constant, numerically stable log(1 + exp(eta))
        return 2.0 * float(np.sum(np.logaddexp(0.0, eta) - d * eta))

    dev = deviance(beta)
    for it in range(1, max_iter + 1):
        eta = design @ beta
        p = expit(eta)
        grad = design.T @ (d - p)
        wdiag = p * (1.0 - p)
        hess = design.T @ (design * wdiag[:, None])
        # minimum-norm step: aliased columns (zero or duplicated, e.g. an
        # indicator level absent from a bootstrap resample) get coefficient
        # zero; fitted scores stay unique
        step, *_ = np.linalg.lstsq(hess, grad, rcond=None)
        scale = 1.0
        for _ in range(30):
            cand = beta + scale * step
            dev_new = deviance(cand)
            if dev_new <= dev + 1e-12:
                break
            scale *= 0.5
        else:
            raise ConvergenceError("logistic fit cannot improve the likelihood")
        change = np.max(np.abs(cand - beta))
        beta, dev = cand, dev_new
        if np.max(np.abs(beta)) > 1e4:
            raise ConvergenceError("logistic coefficients diverging; perfect separation likely")
        if change < tol:
            return PropensityModel(coefficients=beta, fitted_scores=expit(design @ beta), n_iter=it)
    raise ConvergenceError(f"logistic fit did not converge in {max_iter} iterations")


def ipw_weights(model: PropensityModel, d, estimand: str = "ATE") -> WeightSet:
    """Inverse propensity score weights for the requested estimand.

    ATE weights each unit by the inverse probability of its own arm; ATT
    keeps treated weights at 1 and gives controls the odds of treatment;
    ATC mirrors ATT. Scores are clamped to [1e-6, 1 - 1e-6] with the clamp
    count recorded on the returned WeightSet.
    """
    d = np.asarray(d, dtype=float)
    scores = np.asarray(model.fitted_scores, dtype=float)
    clamped = int(np.sum((scores < SCORE_CLAMP) | (scores > 1.0 - SCORE_CLAMP)))
    scores = np.clip(scores, SCORE_CLAMP, 1.0 - SCORE_CLAMP)
    if estimand == "ATE":
        raw = np.where(d == 1, 1.0 / scores, 1.0 / (1.0 - scores))
    elif estimand == "ATT":
        raw = np.where(d == 1, 1.0, scores / (1.0 - scores))
    elif estimand == "ATC":
        raw = np.where(d == 1, (1.0 - scores) / scores, 1.0)
    else:
        raise ValueError(f"unknown estimand {estimand!r}")
    return rescale_weights(raw, d, method="ipw", estimand=estimand, clamp_count=clamped)


def _ebal_group(xg: np.ndarray, target: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    """Maximum-entropy weights for one group, balancing its mean to ``target``.

    Solves the dual problem: minimize logsumexp((x - target) @ lam) over
    lam, whose gradient is exactly the balance violation. Damped Newton
    with step halving (at most 30 halvings per iteration). Returns weights
    summing to the group size; all strictly positive.
    """
    ng, p = xg.shape
    shifted = xg - target
    scale = shifted.std(axis=0)
    keep = scale > 0
    for j in np.flatnonzero(~keep):
        if abs(shifted[:, j].mean()) > max(tol, 1e-10):
            raise BalanceError(f"constant covariate column {j} cannot be balanced to target")
    xs = shifted[:, keep] / scale[keep]
    if xs.shape[1] == 0:
        return np.ones(ng)

    lam = np.zeros(xs.shape[1])

    def dual(lam_):
        return float(logsumexp(xs @ lam_))

    f = dual(lam)
    stalls = 0
    for _ in range(max_iter):
        eta = xs @ lam
        eta -= eta.max()
        prob = np.exp(eta)
        prob /= prob.sum()
        grad = prob @ xs
        # raw-coordinate balance violation: grad is in standardized units;
        # stop a decade inside tol so downstream recomputation stays within it
        if np.max(np.abs(grad) * scale[keep]) < 0.1 * tol and np.max(np.abs(grad)) < 0.1 * tol:
            break
        hess = (xs * prob[:, None]).T @ xs - np.outer(grad, grad)
        # min-norm step keeps duplicated columns harmless; infeasibility
        # still surfaces as diverging dual variables below
        step, *_ = np.linalg.lstsq(hess, grad, rcond=None)
        t = 1.0
        improved = False
        for _ in range(30):
            cand = lam - t * step
            f_new = dual(cand)
            if f_new < f:
                improved = True
                break
            t *= 0.5
        if improved:
            stalls = 0
            lam, f = cand, f_new
        else:
            # near the optimum the decrement can fall below float resolution;
            # the full Newton step still drives the gradient to zero
            stalls += 1
            if stalls > 5:
                raise ConvergenceError("entropy-balance line search stalled")
            lam = lam - step
            f = dual(lam)
        if np.max(np.abs(lam)) > 1e6:
            raise BalanceError("dual variables diverging; target mean outside the feasible hull")
    else:
        raise ConvergenceError(f"entropy balancing did not converge in {max_iter} iterations")

    eta = xs @ lam
    eta -= eta.max()
    w = np.exp(eta)
    return ng * w / w.sum()


def entropy_balance(x, d, estimand: str = "ATT", tol: float = 1e-8, max_iter: int = 200) -> WeightSet:
    """Maximum-entropy weights with exact mean balance.

    ATT reweights controls to the treated covariate means (treated weights
    stay 1); ATC mirrors that; ATE reweights both arms to the overall
    sample means. Post condition: per-coordinate balance violation below
    ``tol`` and every weight strictly positive.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[0] == 1 and len(np.asarray(d)) != 1:
        x = x.T
    d = np.asarray(d, dtype=float)
    raw = np.ones(d.shape[0])
    if estimand == "ATT":
        plans = [(d == 0, x[d == 1].mean(axis=0))]
    elif estimand == "ATC":
        plans = [(d == 1, x[d == 0].mean(axis=0))]
    elif estimand == "ATE":
        overall = x.mean(axis=0)
        plans = [(d == 0, overall), (d == 1, overall)]
    else:
        raise ValueError(f"unknown estimand {estimand!r}")
    for mask, target in plans:
        raw[mask] = _ebal_group(x[mask], target, tol, max_iter)
    return rescale_weights(raw, d, method="entropy_balance", estimand=estimand)


def _k_nearest_sorted(sorted_scores: np.ndarray, sorted_idx: np.ndarray, s: float, k: int):
    """Indices (original) of the k nearest scores; ties go to the lowest index."""
    nc = sorted_scores.shape[0]
    pos = int(np.searchsorted(sorted_scores, s))
    lo, hi = pos - 1, pos
    picked = []
    while len(picked) < k:
        d_lo = s - sorted_scores[lo] if lo >= 0 else np.inf
        d_hi = sorted_scores[hi] - s if hi < nc else np.inf
        if d_lo <= d_hi:
            picked.append(lo)
            lo -= 1
        else:
            picked.append(hi)
            hi += 1
    dmax = max(abs(s - sorted_scores[j]) for j in picked)
    while lo >= 0 and s - sorted_scores[lo] == dmax:
        picked.append(lo)
        lo -= 1
    while hi < nc and sorted_scores[hi] - s == dmax:
        picked.append(hi)
        hi += 1
    cand = sorted((abs(s - sorted_scores[j]), int(sorted_idx[j])) for j in picked)
    return [idx for _, idx in cand[:k]]


def ps_match_weights(
    model: PropensityModel, d, k: int = 1, with_replacement: bool = True
) -> WeightSet:
    """ATT nearest-neighbor matching on the fitted propensity score.

    With replacement, each treated unit is matched to its k nearest control
    scores and a control's raw weight is its match count. Without
    replacement, treated units are processed in descending score order,
    each consuming up to k still-available controls; treated units left
    with no available control are dropped (weight zero, indices reported on
    the WeightSet). Distance ties always resolve to the lowest control
    index.
    """
    d = np.asarray(d, dtype=float)
    scores = np.asarray(model.fitted_scores, dtype=float)
    treated = np.flatnonzero(d == 1)
    controls = np.flatnonzero(d == 0)
    if treated.size == 0 or controls.size == 0:
        raise ValueError("both treatment arms must be nonempty for matching")
    if k > controls.size:
        raise ValueError(f"match ratio k={k} exceeds the number of controls ({controls.size})")

    raw = np.zeros(d.shape[0])
    dropped: list[int] = []
    if with_replacement:
        order = np.argsort(scores[controls], kind="stable")
        sorted_scores = scores[controls][order]
        sorted_idx = controls[order]
        raw[treated] = 1.0
        for t in treated:
            for c in _k_nearest_sorted(sorted_scores, sorted_idx, scores[t], k):
                raw[c] += 1.0
    else:
        # greedy pass over treated units, most extreme propensity first
        t_order = treated[np.lexsort((treated, -scores[treated]))]
        avail = sorted((scores[c], int(c)) for c in controls)
        avail_scores = [s for s, _ in avail]
        avail_idx = [c for _, c in avail]
        for t in t_order:
            if not avail_idx:
                dropped.append(int(t))
                continue
            take = min(k, len(avail_idx))
            s = scores[t]
            for _ in range(take):
                pos = bisect.bisect_left(avail_scores, s)
                cands = []
                if pos < len(avail_idx):
                    cands.append((avail_scores[pos] - s, avail_idx[pos], pos))
                if pos > 0:
                    # head of the run of the next-lower score carries the
                    # lowest original index among its ties
                    head = bisect.bisect_left(avail_scores, avail_scores[pos - 1])
                    cands.append((s - avail_scores[head], avail_idx[head], head))
                _, c_idx, c_pos = min(cands)
                raw[c_idx] = 1.0
                del avail_scores[c_pos]
                del avail_idx[c_pos]
            raw[t] = 1.0
    if raw[d == 1].sum() <= 0:
        raise BalanceError("every treated unit was dropped during matching")
    return rescale_weights(
        raw, d, method="ps_match", estimand="ATT", dropped=tuple(sorted(dropped))
    )


def exact_match_weights(x_discrete, d) -> tuple[WeightSet, list[int]]:
    """ATT exact matching: each treated unit matched to all same-stratum controls.

    Strata are the distinct rows of ``x_discrete``. Within a stratum
    holding both arms, each control gets raw weight (treated count) /
    (control count), which makes the Hajek difference in means the
    stratified ATT estimator. Treated units in strata without controls are
    dropped and their indices returned.
    """
    x_discrete = np.asarray(x_discrete)
    if x_discrete.ndim == 1:
        x_discrete = x_discrete.reshape(-1, 1)
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    if x_discrete.shape[0] != n:
        raise ValueError("x_discrete and d must have the same length")

    strata: dict[tuple, list[int]] = {}
    for i in range(n):
        strata.setdefault(tuple(x_discrete[i].tolist()), []).append(i)

    raw = np.zeros(n)
    dropped: list[int] = []
    overlap = False
    for members in strata.values():
        members = np.asarray(members)
        t = members[d[members] == 1]
        c = members[d[members] == 0]
        if t.size and c.size:
            overlap = True
            raw[t] = 1.0
            raw[c] = t.size / c.size
        elif t.size:
            dropped.extend(int(i) for i in t)
    if not overlap:
        raise BalanceError("no stratum contains both treated and control units")
    dropped.sort()
    ws = rescale_weights(raw, d, method="exact_match", estimand="ATT", dropped=tuple(dropped))
    return ws, dropped


def build_weights(spec: BuilderSpec, data: Dataset) -> WeightSet:
    """Run the builder described by ``spec`` on ``data``."""
    columns = spec.columns if spec.columns else data.columns
    if spec.method == "uniform":
        return uniform_weights(data.n)
    idx = data.column_indices(columns)
    xsub = data.x[:, idx]
    if spec.method == "ipw":
        model = fit_logistic(xsub, data.d)
        return ipw_weights(model, data.d, estimand=spec.estimand)
    if spec.method == "entropy_balance":
        return entropy_balance(xsub, data.d, estimand=spec.estimand, tol=spec.balance_tol)
    if spec.method == "ps_match":
        if spec.estimand != "ATT":
            raise ValueError("ps_match weights are defined for the ATT only")
        model = fit_logistic(xsub, data.d)
        return ps_match_weights(
            model, data.d, k=spec.match_ratio, with_replacement=spec.with_replacement
        )
    if spec.method == "exact_match":
        if spec.estimand != "ATT":
            raise ValueError("exact_match weights are defined for the ATT only")
        ws, _ = exact_match_weights(xsub, data.d)
        return ws
    raise ValueError(f"unknown builder method {spec.method!r}")


def semi_weights(spec: BuilderSpec, data: Dataset, benchmark_columns) -> WeightSet:
    """Rerun the builder with the benchmark covariates removed.

    When removing them empties the builder's column set the semi-weighted
    distribution is the unweighted one, so uniform weights are returned.
    """
    benchmark_columns = tuple(benchmark_columns)
    base = spec.columns if spec.columns else data.columns
    unknown = [c for c in benchmark_columns if c not in base]
    if unknown:
        raise KeyError(f"benchmark column(s) not used by the builder: {', '.join(unknown)}")
    remaining = tuple(c for c in base if c not in benchmark_columns)
    if not remaining:
        return uniform_weights(data.n)
    return build_weights(replace(spec, columns=remaining), data)
