"""Shared test helpers: randomized problem instances across weight families."""

from __future__ import annotations

import numpy as np
import pytest
from scipy.special import expit

from wsens import (
    Dataset,
    entropy_balance,
    exact_match_weights,
    fit_logistic,
    ipw_weights,
    ps_match_weights,
    uniform_weights,
)

FAMILIES = ("uniform", "ipw", "ebal", "psmatch", "exact")


def _draw_core(rng: np.random.Generator):
    n = int(rng.integers(50, 501))
    p = int(rng.integers(1, 6))
    x = rng.normal(size=(n, p))
    lin = x @ rng.normal(scale=0.5, size=p) - 0.3
    d = (rng.uniform(size=n) < expit(lin)).astype(float)
    # guarantee workable arm sizes
    need = max(6, p + 3)
    for _ in range(200):
        n1 = int(d.sum())
        if need <= n1 <= n - need:
            break
        flip = int(rng.integers(0, n))
        d[flip] = 1.0 if n1 < need else 0.0
    z = 0.6 * d + x @ rng.normal(scale=0.3, size=p) + rng.normal(size=n)
    beta = rng.normal(size=p)
    y = 1.0 + 1.5 * d + x @ beta + 0.8 * z + rng.normal(size=n)
    data = Dataset(x=x, d=d, y=y, columns=tuple(f"x{j+1}" for j in range(p)))
    return data, z


def _build_family(data: Dataset, family: str, rng: np.random.Generator):
    if family == "uniform":
        return uniform_weights(data.n)
    if family == "ipw":
        model = fit_logistic(data.x, data.d)
        return ipw_weights(model, data.d, estimand="ATE")
    if family == "ebal":
        return entropy_balance(data.x, data.d, estimand="ATT")
    if family == "psmatch":
        model = fit_logistic(data.x, data.d)
        return ps_match_weights(model, data.d, k=1, with_replacement=True)
    if family == "exact":
        strata = (data.x[:, 0] > 0).astype(int)
        if data.p > 1:
            strata = strata + 2 * (data.x[:, 1] > 0).astype(int)
        ws, _ = exact_match_weights(strata.reshape(-1, 1), data.d)
        return ws
    raise ValueError(family)


def random_instance(seed: int, family: str):
    """A random (Dataset, WeightSet, z) triple with weights from one family.

    Retries with shifted seeds when a builder hits an infeasible draw
    (e.g. an entropy-balance target outside the hull), so callers get a
    valid instance deterministically.
    """
    for attempt in range(5):
        rng = np.random.default_rng((seed, attempt))
        data, z = _draw_core(rng)
        try:
            w = _build_family(data, family, rng)
        except Exception:
            if attempt == 4:
                raise
            continue
        return data, w, z
    raise AssertionError("unreachable")


def semi_weights_for_family(data: Dataset, family: str, drop_first: bool = True):
    """Semi-weights: the family's builder rerun without the first covariate."""
    if family == "uniform" or data.p == 1:
        return uniform_weights(data.n)
    rest = data.x[:, 1:]
    if family == "ipw":
        return ipw_weights(fit_logistic(rest, data.d), data.d, estimand="ATE")
    if family == "ebal":
        return entropy_balance(rest, data.d, estimand="ATT")
    if family == "psmatch":
        return ps_match_weights(fit_logistic(rest, data.d), data.d, k=1)
    if family == "exact":
        # original strata came from signs of the first two columns
        strata = (data.x[:, 1] > 0).astype(int)
        ws, _ = exact_match_weights(strata.reshape(-1, 1), data.d)
        return ws
    raise ValueError(family)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
