from __future__ import annotations

import math

import numpy as np
import pytest
from clusterd2d.models import (
    AdaptiveWindow,
    ContentModel,
    CoverageTable,
    DesConfig,
    ExperimentConfig,
    FixedWindow,
    MonteCarloConfig,
    NetworkGeometry,
    QuadratureConfig,
    RadioConfig,
    SolverConfig,
    TrafficModel,
    check_caching_vector,
)


class TestNetworkGeometry:
    def test_unit_conversions(self) -> None:
        geometry = NetworkGeometry(lambda_p=50.0, lambda_b=10.0, p=0.5, n_bar=20.0)
        assert geometry.lambda_p_m2 == pytest.approx(5e-5)
        assert geometry.lambda_b_m2 == pytest.approx(1e-5)
        assert geometry.eta == pytest.approx(5.0)
        assert geometry.active_per_cluster == pytest.approx(10.0)

    def test_isolated_cluster(self) -> None:
        assert NetworkGeometry(lambda_p=0.0).lambda_p_m2 == 0.0

    @pytest.mark.parametrize(
        "changes",
        [{"lambda_p": -1.0}, {"sigma": 0.0}, {"n_bar": 0.0}, {"p": 1.5}, {"p": -0.1}, {"lambda_b": 0.0}],
    )
    def test_invalid(self, changes: dict[str, float]) -> None:
        with pytest.raises(ValueError):
            NetworkGeometry(**changes)

    def test_replace(self) -> None:
        geometry = NetworkGeometry().replace(sigma=20.0)
        assert geometry.sigma == 20.0
        assert geometry.lambda_p == NetworkGeometry().lambda_p


class TestRadioConfig:
    def test_reference_link(self) -> None:
        radio = RadioConfig.from_db(0.0)
        assert radio.theta == pytest.approx(1.0)
        assert radio.theta_db == pytest.approx(0.0)
        assert radio.spectral_efficiency == pytest.approx(1.0)
        assert radio.requests_per_hz == pytest.approx(2e-7)

    def test_threshold_in_db(self) -> None:
        assert RadioConfig.from_db(5.0).theta == pytest.approx(10**0.5)

    @pytest.mark.parametrize("changes", [{"alpha": 2.0}, {"bandwidth": 0.0}, {"theta": 0.0}, {"mean_size": -1.0}])
    def test_invalid(self, changes: dict[str, float]) -> None:
        with pytest.raises(ValueError):
            RadioConfig(**changes)

    def test_line_of_sight_needs_parameters(self) -> None:
        with pytest.raises(ValueError, match="requires both"):
            RadioConfig(channel_mode="nakagami_los_intra")
        with pytest.raises(ValueError, match="nakagami_m"):
            RadioConfig(channel_mode="nakagami_los_intra", alpha_los=2.09, nakagami_m=0.5)
        radio = RadioConfig(channel_mode="nakagami_los_intra", alpha_los=2.09, nakagami_m=3.0)
        assert radio.alpha_intra == pytest.approx(2.09)
        assert RadioConfig().alpha_intra == RadioConfig().alpha

    def test_unknown_channel(self) -> None:
        with pytest.raises(ValueError, match="channel_mode"):
            RadioConfig(channel_mode="rician")  # type: ignore[arg-type]


class TestContentModel:
    def test_from_zipf_caches_most_popular(self) -> None:
        content = ContentModel.from_zipf(10, 3, 0.5)
        np.testing.assert_array_equal(content.b, [1, 1, 1, 0, 0, 0, 0, 0, 0, 0])
        assert content.q.sum() == pytest.approx(1.0)

    def test_arrays_are_read_only(self) -> None:
        content = ContentModel.from_zipf(5, 1, 0.5)
        with pytest.raises(ValueError):
            content.b[0] = 0.5
        with pytest.raises(ValueError):
            content.q[0] = 0.5

    def test_with_caching(self) -> None:
        content = ContentModel.from_zipf(4, 2, 1.0)
        other = content.with_caching([0.5, 0.5, 0.5, 0.5])
        np.testing.assert_allclose(other.b, 0.5)
        np.testing.assert_array_equal(other.q, content.q)

    def test_invalid(self) -> None:
        with pytest.raises(ValueError, match="sum"):
            ContentModel.from_zipf(4, 2, 1.0, b=[1.0, 0.5, 0.0, 0.0])
        with pytest.raises(ValueError, match="non-increasing"):
            ContentModel(n_files=2, cache_size=1, beta=0.0, q=[0.4, 0.6], b=[1.0, 0.0])
        with pytest.raises(ValueError, match="cache_size"):
            ContentModel.from_zipf(4, 5, 1.0)
        with pytest.raises(ValueError, match="at least one file"):
            ContentModel.from_zipf(0, 0, 1.0)

    def test_check_caching_vector(self) -> None:
        np.testing.assert_allclose(check_caching_vector([0.25] * 4, 1, 4), 0.25)
        with pytest.raises(ValueError, match=r"\[0, 1\]"):
            check_caching_vector([1.5, -0.5], 1)
        with pytest.raises(ValueError, match="must hold 3 values"):
            check_caching_vector([0.5, 0.5], 1, 3)


def test_coverage_table() -> None:
    table = CoverageTable(upsilon_d=[0.2, 0.4], upsilon_b=0.5)
    assert table.upsilon_d.dtype == float
    assert table.upsilon_b == 0.5
    with pytest.raises(ValueError):
        CoverageTable(upsilon_d=[1.2], upsilon_b=0.5)
    with pytest.raises(ValueError):
        CoverageTable(upsilon_d=[0.2], upsilon_b=-0.1)


def test_traffic_from_geometry() -> None:
    traffic = TrafficModel.from_geometry(0.3, NetworkGeometry(lambda_p=50.0, lambda_b=10.0))
    assert traffic.zeta == 0.3
    assert traffic.eta == pytest.approx(5.0)
    with pytest.raises(ValueError):
        TrafficModel(zeta=-1.0)


class TestNumericalSettings:
    def test_windows(self) -> None:
        assert AdaptiveWindow().delta == pytest.approx(0.005)
        with pytest.raises(ValueError):
            FixedWindow(0.0)

    def test_montecarlo(self) -> None:
        with pytest.raises(ValueError, match="trial"):
            MonteCarloConfig(trials=0)
        with pytest.raises(ValueError, match="Thomas"):
            MonteCarloConfig(process_kind="mcp", intra_model="decoupled")
        with pytest.raises(TypeError):
            MonteCarloConfig(window=500.0)  # type: ignore[arg-type]
        with pytest.raises(TypeError):
            MonteCarloConfig(seed=1.5)  # type: ignore[arg-type]
        assert MonteCarloConfig().replace(trials=5).trials == 5

    def test_solver(self) -> None:
        with pytest.raises(ValueError, match="barrier_shrink"):
            SolverConfig(barrier_shrink=1.0)
        with pytest.raises(ValueError, match="upsilon_grid_points"):
            SolverConfig(upsilon_grid_points=4)

    def test_des(self) -> None:
        with pytest.raises(ValueError, match="horizon_requests"):
            DesConfig(horizon_requests=10, warmup_requests=10)
        with pytest.raises(ValueError, match="two batches"):
            DesConfig(n_batches=1)

    def test_quadrature(self) -> None:
        with pytest.raises(ValueError):
            QuadratureConfig(tail_mass_tol=1.0)
        with pytest.raises(ValueError):
            QuadratureConfig(order=0)


class TestExperimentConfig:
    def test_reference_point(self) -> None:
        config = ExperimentConfig()
        assert config.experiment is None
        assert config.radio.bandwidth == 20e6
        assert config.radio.theta == pytest.approx(1.0)
        assert (config.n_files, config.cache_size, config.beta) == (10, 1, 0.5)
        assert config.geometry == NetworkGeometry(lambda_p=50.0, sigma=10.0, n_bar=20.0, lambda_b=10.0)
        assert config.traffic.zeta == 0.5

    def test_for_figure_applies_recipe(self) -> None:
        config = ExperimentConfig.for_figure("Fig11_DelayVsP")
        assert config.experiment == "Fig11_DelayVsP"
        assert config.geometry.lambda_p == 10.0
        assert config.traffic.eta == 5.0
        assert config.radio.theta_db == pytest.approx(5.0)
        assert len(config.sweep_values) == 10

    def test_for_figure_changes(self) -> None:
        config = ExperimentConfig.for_figure("Fig6_CoverageVsSigma", seed=7)
        assert config.seed == 7
        assert config.geometry.p == 0.2

    def test_unknown_figure(self) -> None:
        with pytest.raises(ValueError, match="experiment"):
            ExperimentConfig.for_figure("Fig7_Unknown")  # type: ignore[arg-type]

    def test_content_follows_policy(self) -> None:
        config = ExperimentConfig(policy="uniform", n_files=4, cache_size=2)
        np.testing.assert_allclose(config.content.b, 0.5)

    def test_mc_takes_run_trials(self) -> None:
        config = ExperimentConfig(trials=123, seed=4)
        assert (config.mc.trials, config.mc.seed) == (123, 4)

    def test_invalid_library(self) -> None:
        with pytest.raises(ValueError):
            ExperimentConfig(n_files=2, cache_size=3)

    def test_to_dict(self) -> None:
        resolved = ExperimentConfig(radio=RadioConfig.from_db(10.0)).to_dict()
        assert resolved["radio"]["theta_db"] == pytest.approx(10.0)
        assert resolved["montecarlo"]["window_policy"] == "AdaptiveWindow"
        assert math.isclose(resolved["geometry"]["sigma"], 10.0)
