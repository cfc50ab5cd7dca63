from __future__ import annotations

import json
from pathlib import Path
from typing import get_args

import numpy as np
import pandas as pd
import pytest
from clusterd2d import FIGURE_RECIPES, d2d_coverage, run_experiment, run_figure
from clusterd2d.experiments import _bs_matched_geometry
from clusterd2d.models import ExperimentConfig, FigureId, FixedWindow, TrafficModel


def _small_fig6(**changes: object) -> ExperimentConfig:
    return ExperimentConfig.for_figure("Fig6_CoverageVsSigma", sweep_values=(10.0, 20.0), series=(50.0,), **changes)


class TestRecipes:
    def test_every_figure_has_a_recipe(self) -> None:
        assert set(FIGURE_RECIPES) == set(get_args(FigureId))
        for name, recipe in FIGURE_RECIPES.items():
            assert recipe.figure == name
            assert recipe.grid

    def test_configure_applies_overrides(self) -> None:
        config = ExperimentConfig.for_figure("Fig3_NearestPdf")
        assert config.geometry.sigma == 5.0
        assert config.geometry.p == 0.5
        assert config.trials == 100_000
        assert config.sweep_values == (0.5, 1.0)

    def test_delay_recipes_share_the_operating_point(self) -> None:
        for figure in ("Fig5_OptBandwidth", "Fig9_DelayCompare", "Fig11_DelayVsP"):
            config = ExperimentConfig.for_figure(figure)
            assert config.geometry.lambda_p == 10.0
            assert config.geometry.lambda_b == 2.0
            assert config.traffic.eta == 5.0
        assert ExperimentConfig.for_figure("Fig5_OptBandwidth").traffic.zeta == 0.1
        assert ExperimentConfig.for_figure("Fig11_DelayVsP").traffic.zeta == 0.1
        assert ExperimentConfig.for_figure("Fig9_DelayCompare").traffic.zeta == 0.225

    @pytest.mark.parametrize("figure", ["Fig5_OptBandwidth", "Fig9_DelayCompare", "Fig11_DelayVsP"])
    def test_delay_recipes_keep_clients_per_bs(self, figure: str) -> None:
        config = ExperimentConfig.for_figure(figure)
        assert config.geometry.lambda_p == pytest.approx(config.traffic.eta * config.geometry.lambda_b)

    @pytest.mark.parametrize("lambda_p", [10.0, 50.0, 100.0])
    def test_geometry_sweep_keeps_clients_per_bs(self, lambda_p: float) -> None:
        config = ExperimentConfig.for_figure("Fig10_DelayVsGeometry")
        geometry = _bs_matched_geometry(config, lambda_p, 25.0)
        assert geometry.lambda_p == lambda_p
        assert geometry.sigma == 25.0
        assert geometry.eta == pytest.approx(config.traffic.eta)

    def test_grids(self) -> None:
        assert FIGURE_RECIPES["Fig4_CoverageVsP"].grid[-1] == 1.0
        assert len(FIGURE_RECIPES["Fig6_CoverageVsSigma"].grid) == 10
        assert FIGURE_RECIPES["Fig9_DelayCompare"].grid[0] == 0.2


class TestRunFigure:
    def test_coverage_vs_sigma(self) -> None:
        config = _small_fig6()
        table = run_figure(config, threads=2)
        assert list(table.columns) == ["sigma_m", "lambda_p_km2", "analytic"]
        assert table["sigma_m"].tolist() == [10.0, 20.0]
        for sigma, value in zip(table["sigma_m"], table["analytic"]):
            geometry = config.geometry.replace(sigma=sigma, lambda_p=50.0)
            assert value == pytest.approx(d2d_coverage(1.0, geometry, config.radio, config.quad), rel=1e-12)
        assert table["analytic"].iloc[0] > table["analytic"].iloc[1]

    def test_nearest_pdf(self) -> None:
        config = ExperimentConfig.for_figure("Fig3_NearestPdf", sweep_values=(1.0,), trials=5_000)
        table = run_figure(config)
        assert list(table.columns) == ["b_i", "h_m", "analytic_pdf", "mc_density"]
        assert len(table) == 50
        assert (table["mc_density"] >= 0).all()
        assert table["h_m"].is_monotonic_increasing

    def test_coverage_vs_p(self) -> None:
        config = ExperimentConfig.for_figure("Fig4_CoverageVsP", sweep_values=(0.5,), series=(1.0,), trials=300)
        config = config.replace(montecarlo=config.montecarlo.replace(window=FixedWindow(300.0)))
        table = run_figure(config)
        assert list(table.columns) == ["p", "b_i", "analytic", "mc_mean", "mc_ci99"]
        assert len(table) == 1
        row = table.iloc[0]
        assert 0 <= row["mc_mean"] <= 1
        assert 0 < row["analytic"] < 1

    @pytest.mark.slow()
    def test_delay_compare(self) -> None:
        config = ExperimentConfig.for_figure("Fig9_DelayCompare", sweep_values=(1.0,))
        table = run_figure(config)
        assert list(table.columns) == ["beta", "scheme", "bandwidth", "t_seconds"]
        assert len(table) == 8
        assert table["scheme"].tolist()[-2:] == ["pc_optimized", "pc_optimized"]
        for scheme in ("uniform", "zipf_top_m", "zipf_proportional"):
            rows = table[table["scheme"] == scheme].set_index("bandwidth")["t_seconds"]
            assert rows["optimized"] <= rows["equal"] * (1 + 1e-9)

    @pytest.mark.slow()
    @pytest.mark.parametrize("beta", [0.2, 0.4])
    def test_optimized_caching_beats_the_baselines(self, beta: float) -> None:
        config = ExperimentConfig.for_figure("Fig9_DelayCompare", sweep_values=(beta,))
        table = run_figure(config)
        equal = table[table["bandwidth"] == "equal"].set_index("scheme")["t_seconds"]
        assert np.isfinite(equal).all()
        assert equal["pc_optimized"] < equal["zipf_top_m"] < equal["uniform"]
        assert equal["zipf_top_m"] / equal["pc_optimized"] >= 1.5
        optimized = table[table["bandwidth"] == "optimized"].set_index("scheme")["t_seconds"]
        assert optimized["pc_optimized"] <= equal["pc_optimized"]

    @pytest.mark.slow()
    def test_delay_vs_p_optimized_split_never_loses(self) -> None:
        table = run_figure(ExperimentConfig.for_figure("Fig11_DelayVsP"))
        delays = table.pivot(index="p", columns="bandwidth", values="t_seconds")
        assert len(delays) == 10
        stable = delays[np.isfinite(delays["equal"])]
        assert len(stable) > 0
        assert (stable["optimized"] <= stable["equal"]).all()

    @pytest.mark.slow()
    def test_coverage_falls_with_spread_and_density(self) -> None:
        table = run_figure(ExperimentConfig.for_figure("Fig6_CoverageVsSigma"))
        coverage = table.pivot(index="sigma_m", columns="lambda_p_km2", values="analytic")
        assert coverage.shape == (10, 3)
        assert (np.diff(coverage.to_numpy(), axis=0) <= 0).all()
        assert (np.diff(coverage.to_numpy(), axis=1) <= 0).all()

    def test_no_recipe(self) -> None:
        with pytest.raises(ValueError, match="no figure recipe"):
            run_figure(ExperimentConfig())


class TestRunExperiment:
    def test_writes_table_and_manifest(self, tmp_path: Path) -> None:
        config = _small_fig6(seed=4)
        csv_path, manifest_path = run_experiment(config, tmp_path / "out")
        assert csv_path == tmp_path / "out" / "Fig6_CoverageVsSigma.csv"
        assert manifest_path == tmp_path / "out" / "Fig6_CoverageVsSigma.manifest.json"
        table = pd.read_csv(csv_path)
        assert list(table.columns) == list(FIGURE_RECIPES["Fig6_CoverageVsSigma"].columns)
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        assert manifest["package"] == "clusterd2d"
        assert manifest["figure"] == "Fig6_CoverageVsSigma"
        assert manifest["rows"] == 2
        assert manifest["seed"] == 4
        assert manifest["sweep"] == {
            "axis": "sigma",
            "values": [10.0, 20.0],
            "series_axis": "lambda_p",
            "series": [50.0],
        }
        assert manifest["parameters"]["radio"]["theta_db"] == pytest.approx(0.0)
        assert manifest["parameters"]["geometry"]["p"] == 0.2

    def test_rerun_is_byte_identical(self, tmp_path: Path) -> None:
        config = _small_fig6()
        first, _ = run_experiment(config, tmp_path / "a")
        second, _ = run_experiment(config, tmp_path / "b", threads=2)
        assert first.read_bytes() == second.read_bytes()

    def test_output_names(self, tmp_path: Path) -> None:
        csv_path, manifest_path = run_experiment(_small_fig6(), tmp_path, name="sigma")
        assert csv_path.name == "sigma.csv"
        assert manifest_path.name == "sigma.manifest.json"
        csv_path, manifest_path = run_experiment(_small_fig6(output="coverage.csv"), tmp_path)
        assert csv_path.name == "coverage.csv"
        assert manifest_path.name == "coverage.manifest.json"

    def test_unstable_points_are_marked(self, tmp_path: Path) -> None:
        config = ExperimentConfig.for_figure("Fig11_DelayVsP", sweep_values=(0.5,))
        # a request rate no split can serve
        config = config.replace(traffic=TrafficModel(zeta=50.0, eta=5.0))
        csv_path, _ = run_experiment(config, tmp_path)
        lines = csv_path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "p,bandwidth,t_seconds"
        assert lines[1:] == ["0.5,equal,unstable", "0.5,optimized,unstable"]
        assert np.isinf(run_figure(config)["t_seconds"]).all()
