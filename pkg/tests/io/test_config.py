from __future__ import annotations

from pathlib import Path

import pytest
from clusterd2d import ConfigError, read_config
from clusterd2d._io.config import parse_config
from clusterd2d.models import AdaptiveWindow, ExperimentConfig, FixedWindow


def test_minimal_config_uses_recipe_defaults() -> None:
    config = parse_config('experiment = "Fig6_CoverageVsSigma"\n')
    reference = ExperimentConfig.for_figure("Fig6_CoverageVsSigma")
    assert config.experiment == "Fig6_CoverageVsSigma"
    assert config.geometry == reference.geometry
    assert config.sweep_values == reference.sweep_values
    assert config.series == reference.series
    assert config.output is None


def test_sections_override_defaults() -> None:
    text = """
experiment = "Fig9_DelayCompare"
seed = 7
trials = 500
output = "delay.csv"

[geometry]
lambda_p_km2 = 30
lambda_b_km2 = 2.0

[radio]
theta_db = 10.0

[content]
n_files = 6
cache_size = 2

[sweep]
values = [0.5, 1]
"""
    config = parse_config(text)
    assert config.seed == 7
    assert config.mc.trials == 500
    assert config.mc.seed == 7
    assert config.output == "delay.csv"
    assert config.geometry.lambda_p == 30.0
    # eta follows the densities when not given
    assert config.traffic.eta == pytest.approx(15.0)
    assert config.radio.theta == pytest.approx(10.0)
    assert config.radio.theta_db == pytest.approx(10.0)
    assert (config.n_files, config.cache_size) == (6, 2)
    assert config.sweep_values == (0.5, 1.0)


def test_explicit_eta_is_kept() -> None:
    text = """
experiment = "Fig9_DelayCompare"

[geometry]
lambda_p_km2 = 30.0

[traffic]
eta = 3.0
"""
    assert parse_config(text).traffic.eta == 3.0


class TestMonteCarloWindow:
    def test_fixed(self) -> None:
        text = 'experiment = "Fig4_CoverageVsP"\n[montecarlo]\nwindow = "fixed"\nwindow_radius_m = 250.0\n'
        assert parse_config(text).montecarlo.window == FixedWindow(250.0)

    def test_radius_alone_is_fixed(self) -> None:
        text = 'experiment = "Fig4_CoverageVsP"\n[montecarlo]\nwindow_radius_m = 300.0\n'
        assert parse_config(text).montecarlo.window == FixedWindow(300.0)

    def test_adaptive(self) -> None:
        text = 'experiment = "Fig4_CoverageVsP"\n[montecarlo]\nwindow = "adaptive"\ndelta = 0.005\n'
        assert parse_config(text).montecarlo.window == AdaptiveWindow(0.005)

    def test_fixed_without_radius(self) -> None:
        text = 'experiment = "Fig4_CoverageVsP"\n\n[montecarlo]\nwindow = "fixed"\n'
        with pytest.raises(ConfigError, match="window_radius_m") as excinfo:
            parse_config(text)
        assert excinfo.value.line == 3
        assert excinfo.value.field == "montecarlo"


class TestErrors:
    def test_missing_experiment(self) -> None:
        with pytest.raises(ConfigError) as excinfo:
            parse_config("seed = 1\n")
        assert excinfo.value.field == "experiment"

    def test_unknown_experiment(self) -> None:
        with pytest.raises(ConfigError) as excinfo:
            parse_config('experiment = "Fig7"\n')
        assert excinfo.value.line == 1

    def test_unknown_key(self) -> None:
        text = 'experiment = "Fig6_CoverageVsSigma"\n[geometry]\nradius = 3.0\n'
        with pytest.raises(ConfigError, match="geometry.radius") as excinfo:
            parse_config(text)
        assert excinfo.value.line == 3
        assert "line 3" in str(excinfo.value)

    def test_unknown_top_level_key(self) -> None:
        with pytest.raises(ConfigError) as excinfo:
            parse_config('experiment = "Fig6_CoverageVsSigma"\nthreads = 4\n')
        assert excinfo.value.line == 2

    def test_unknown_section(self) -> None:
        with pytest.raises(ConfigError, match="plot") as excinfo:
            parse_config('experiment = "Fig6_CoverageVsSigma"\n\n[plot]\ndpi = 300\n')
        assert excinfo.value.line == 3

    def test_wrong_type(self) -> None:
        text = 'experiment = "Fig9_DelayCompare"\n[content]\nbeta = 0.5\nn_files = "ten"\n'
        with pytest.raises(ConfigError, match="content.n_files") as excinfo:
            parse_config(text)
        assert excinfo.value.line == 4

    def test_boolean_is_not_a_number(self) -> None:
        with pytest.raises(ConfigError):
            parse_config('experiment = "Fig9_DelayCompare"\nseed = true\n')

    def test_syntax_error(self) -> None:
        with pytest.raises(ConfigError, match="Invalid TOML") as excinfo:
            parse_config('experiment = "Fig9_DelayCompare"\nseed 3\n')
        assert excinfo.value.line == 2

    def test_rejected_value(self) -> None:
        text = 'experiment = "Fig6_CoverageVsSigma"\n\n[geometry]\np = 1.5\n'
        with pytest.raises(ConfigError, match=r"Invalid \[geometry\] parameters") as excinfo:
            parse_config(text)
        assert excinfo.value.line == 3

    def test_rejected_policy(self) -> None:
        text = 'experiment = "Fig9_DelayCompare"\n[content]\npolicy = "random"\n'
        with pytest.raises(ConfigError, match="policy"):
            parse_config(text)


def test_read_config(tmp_path: Path) -> None:
    path = tmp_path / "fig11.toml"
    path.write_text('experiment = "Fig11_DelayVsP"\n[sweep]\nvalues = [0.2]\n', encoding="utf-8")
    config = read_config(path)
    assert config.experiment == "Fig11_DelayVsP"
    assert config.sweep_values == (0.2,)
    assert config.radio.theta_db == pytest.approx(5.0)
