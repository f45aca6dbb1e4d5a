import numpy as np
import pytest

from wsens import (
    BuilderSpec,
    DgpSpec,
    SensitivityParams,
    coverage_experiment,
    estimate_plim_params,
    fit_with_z,
    generate,
    translator_experiment,
)
from wsens.simulation import coverage_results_to_csv


class TestGenerate:
    def test_reproducible_bit_identical(self):
        spec = DgpSpec(kind="dgp1", n=500, theta_sq=4.0, seed=42)
        d1, z1 = generate(spec)
        d2, z2 = generate(spec)
        np.testing.assert_array_equal(d1.x, d2.x)
        np.testing.assert_array_equal(d1.y, d2.y)
        np.testing.assert_array_equal(z1, z2)

    def test_dgp1_residual_variance_is_two(self):
        data, z = generate(DgpSpec(kind="dgp1", n=100_000, theta_sq=0.0, seed=7))
        resid = data.y - data.x[:, 0] - z  # delta is zero here
        assert np.var(resid) == pytest.approx(2.0, rel=0.05)

    def test_dgp1_oracle_recovery(self):
        data, z = generate(DgpSpec(kind="dgp1", n=5000, theta_sq=0.0, seed=8))
        from wsens import uniform_weights

        fit = fit_with_z(data, z, uniform_weights(data.n))
        assert abs(fit.tau_hat) < 0.08  # roughly 3 standard errors at this n

    def test_dgp2_clusters(self):
        spec = DgpSpec(kind="dgp2", n_groups=12, group_size=30, theta_sq=4.0, seed=3)
        data, _ = generate(spec)
        assert data.n == 360
        assert data.cluster is not None
        labels, counts = np.unique(data.cluster, return_counts=True)
        assert labels.size == 12
        assert np.all(counts == 30)

    def test_dgp3_tail_treatment_rate(self):
        data, z = generate(DgpSpec(kind="dgp3", n=50_000, seed=9))
        tail = np.abs(z) > 1.0
        rate = data.d[tail].mean()
        n_tail = tail.sum()
        sigma = np.sqrt(0.007 * 0.993 / n_tail)
        assert abs(rate - 0.007) < 3.0 * sigma

    def test_dgp3_observed_covariate_is_fourth_power(self):
        data, z = generate(DgpSpec(kind="dgp3", n=2000, seed=10))
        np.testing.assert_allclose(data.x[:, 0], z**4)


class TestPlimParams:
    def test_dgp1_ipw_ate(self):
        params = estimate_plim_params(
            DgpSpec(kind="dgp1", seed=100),
            BuilderSpec(method="ipw", estimand="ATE", columns=("x1",)),
            draws=15,
            n_large=10000,
        )
        assert params.r2_d == pytest.approx(0.1442, abs=0.01)
        assert params.r2_y == pytest.approx(0.3006, abs=0.015)
        assert params.sign == 1

    def test_dgp1_entropy_balance_att(self):
        params = estimate_plim_params(
            DgpSpec(kind="dgp1", seed=101),
            BuilderSpec(method="entropy_balance", estimand="ATT", columns=("x1",)),
            draws=15,
            n_large=10000,
        )
        assert params.r2_d == pytest.approx(0.1736, abs=0.01)

    def test_dgp1_ps_match_att(self):
        params = estimate_plim_params(
            DgpSpec(kind="dgp1", seed=102),
            BuilderSpec(method="ps_match", estimand="ATT", columns=("x1",)),
            draws=15,
            n_large=10000,
        )
        assert params.r2_d == pytest.approx(0.1502, abs=0.01)


class TestCoverageExperiment:
    def test_smoke_deterministic(self):
        spec = DgpSpec(kind="dgp1", n=120, theta_sq=0.0)
        builder = BuilderSpec(method="ipw", estimand="ATE", columns=("x1",))
        params = SensitivityParams(0.14, 0.3)
        r1 = coverage_experiment(spec, builder, "fixed_weights", params, 2, 10, master_seed=5)
        r2 = coverage_experiment(spec, builder, "fixed_weights", params, 2, 10, master_seed=5)
        assert r1 == r2
        assert r1.iterations == 2
        assert r1.coverage in (0.0, 0.5, 1.0)

    def test_csv_emission(self, tmp_path):
        spec = DgpSpec(kind="dgp1", n=120)
        builder = BuilderSpec(method="ipw", estimand="ATE", columns=("x1",))
        result = coverage_experiment(
            spec, builder, "fixed_weights", SensitivityParams(0.14, 0.3), 2, 10, master_seed=6
        )
        path = tmp_path / "coverage.csv"
        coverage_results_to_csv([result], path)
        lines = path.read_text().strip().splitlines()
        assert lines[0].startswith("dgp,method,mode")
        assert lines[1].split(",")[0] == "dgp1"


class TestTranslatorExperiment:
    def test_moderate_n_band(self):
        result = translator_experiment(n=4000, seed=12)
        assert 3.0 < result["translator"] < 14.0
        assert 0.25 < result["ess_fraction_control"] < 0.55
        assert 0.1 < abs(result["corr_dz_unweighted"]) < 0.35

    def test_small_n_rejected(self):
        with pytest.raises(ValueError, match="1000"):
            translator_experiment(n=200, seed=1)
