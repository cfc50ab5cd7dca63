"""Figure recipes: the sweeps behind every evaluation figure, written as CSV tables."""

from __future__ import annotations

import dataclasses
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Callable, Optional, Union

import dask
import numpy as np
import pandas as pd

from clusterd2d._core.caching import baseline_caching
from clusterd2d._core.coverage import coverage_table, d2d_coverage, nearest_provider_pdf
from clusterd2d._core.delay import summarize_delay
from clusterd2d._core.montecarlo import estimate_coverage_variant, estimate_nearest_pdf
from clusterd2d._core.optimize import (
    CachingSolution,
    OptimizationResult,
    UpsilonMap,
    bcd_optimize,
    feasible_baseline,
    optimal_bandwidth,
    optimize_caching,
    tabulate_upsilon,
)
from clusterd2d._exceptions import InfeasibleError
from clusterd2d._io.format import CurrentResultsFormat
from clusterd2d._io.io_csv import write_manifest, write_results_csv
from clusterd2d._logging import logger
from clusterd2d._utils import _compute_in_order, db_to_linear
from clusterd2d.models import (
    ContentModel,
    ExperimentConfig,
    FigureId,
    MonteCarloConfig,
    NetworkGeometry,
    RadioConfig,
    TrafficModel,
)

__all__ = ["FIGURE_RECIPES", "FigureRecipe", "run_experiment", "run_figure"]

Row = dict[str, Any]

_NEAREST_BINS = 50
_VARIANTS = ("tcp", "mcp", "ppp", "nearest", "best_channel", "rayleigh_nlos", "nakagami_los_intra")
# line-of-sight intra-cluster links
_LOS_ALPHA = 2.09
_LOS_M = 3.0
_BASELINES = ("uniform", "zipf_top_m", "zipf_proportional")
_UNSTABLE = (np.inf, np.inf)


def _grid(start: float, stop: float, step: float) -> tuple[float, ...]:
    n = int(round((stop - start) / step)) + 1
    return tuple(round(start + k * step, 10) for k in range(n))


def _flatten(parts: tuple[list[Row], ...]) -> list[Row]:
    return [row for part in parts for row in part]


def _library(config: ExperimentConfig, beta: Optional[float] = None) -> ContentModel:
    return ContentModel.from_zipf(config.n_files, config.cache_size, config.beta if beta is None else beta)


def _upsilon(config: ExperimentConfig, geometry: NetworkGeometry) -> UpsilonMap:
    return tabulate_upsilon(geometry, config.radio, config.solver.upsilon_grid_points, config.quad)


def _joint_optimum(
    config: ExperimentConfig, library: ContentModel, traffic: TrafficModel, geometry: NetworkGeometry
) -> OptimizationResult:
    upsilon = _upsilon(config, geometry)
    _, b = feasible_baseline(library, traffic, geometry, config.radio, upsilon)
    return bcd_optimize(library.with_caching(b), traffic, geometry, config.radio, config.solver, upsilon)


def _optimized_point(
    config: ExperimentConfig, library: ContentModel, traffic: TrafficModel, geometry: NetworkGeometry
) -> tuple[float, float]:
    """Normalized D2D bandwidth and delay at the joint optimum; infinite when no stable point exists."""
    try:
        result = _joint_optimum(config, library, traffic, geometry)
    except InfeasibleError as e:
        logger.info(f"Unstable sweep point: {e}")
        return _UNSTABLE
    return result.w_d_star / config.radio.bandwidth, result.t_star


def _caching_only(
    config: ExperimentConfig, library: ContentModel, traffic: TrafficModel, geometry: NetworkGeometry, w_d: float
) -> Optional[CachingSolution]:
    """Caching optimized at a fixed split from the best stable baseline; ``None`` when no baseline is stable."""
    upsilon = _upsilon(config, geometry)
    starts = []
    for policy in _BASELINES:
        content = library.with_caching(baseline_caching(policy, library))
        t = summarize_delay(content, traffic, geometry, config.radio, upsilon.coverage(content.b), w_d).t_weighted
        if np.isfinite(t):
            starts.append((t, policy, content.b))
    if not starts:
        return None
    _, _, b = min(starts, key=lambda start: start[0])
    return optimize_caching(w_d, b, library, traffic, geometry, config.radio, upsilon, config.solver)


def _equal_and_optimized(
    config: ExperimentConfig, library: ContentModel, traffic: TrafficModel, geometry: NetworkGeometry
) -> tuple[float, float]:
    """Delays of the optimized caching at ``W_d = W / 2`` and at the joint optimum reached from it."""
    equal = _caching_only(config, library, traffic, geometry, 0.5 * config.radio.bandwidth)
    if equal is None:
        return np.inf, _optimized_point(config, library, traffic, geometry)[1]
    result = bcd_optimize(
        library.with_caching(equal.b), traffic, geometry, config.radio, config.solver, _upsilon(config, geometry)
    )
    return equal.t_seconds, result.t_star


def _nearest_pdf_rows(config: ExperimentConfig, b_i: float) -> list[Row]:
    histogram = estimate_nearest_pdf(config.geometry, b_i, _NEAREST_BINS, config.mc)
    availability = -math.expm1(-b_i * config.geometry.active_per_cluster)
    analytic = nearest_provider_pdf(histogram.centers, b_i, config.geometry, config.quad) / availability
    return [
        {"b_i": b_i, "h_m": h, "analytic_pdf": a, "mc_density": d}
        for h, a, d in zip(histogram.centers, analytic, histogram.density)
    ]


def _run_nearest_pdf(config: ExperimentConfig, threads: int) -> list[Row]:
    tasks = [dask.delayed(_nearest_pdf_rows)(config, b_i) for b_i in config.sweep_values]
    return _flatten(_compute_in_order(tasks, threads))


def _coverage_vs_p_row(config: ExperimentConfig, b_i: float, p: float) -> Row:
    geometry = config.geometry.replace(p=p)
    mc = config.mc
    analytic = d2d_coverage(b_i, geometry, config.radio, config.quad, normalize=mc.condition_on_provider)
    estimate = estimate_coverage_variant(geometry, config.radio, b_i, mc)
    return {"p": p, "b_i": b_i, "analytic": analytic, "mc_mean": estimate.mean, "mc_ci99": estimate.half_width_99}


def _run_coverage_vs_p(config: ExperimentConfig, threads: int) -> list[Row]:
    tasks = [dask.delayed(_coverage_vs_p_row)(config, b_i, p) for b_i in config.series for p in config.sweep_values]
    return list(_compute_in_order(tasks, threads))


def _bandwidth_row(config: ExperimentConfig, axis: str, value: float) -> Row:
    library = _library(config, value if axis == "beta" else None)
    traffic = dataclasses.replace(config.traffic, zeta=value) if axis == "zeta" else config.traffic
    w_d_over_w, t = _optimized_point(config, library, traffic, config.geometry)
    return {"axis": axis, "param_value": value, "w_d_over_w": w_d_over_w, "t_seconds": t}


def _run_opt_bandwidth(config: ExperimentConfig, threads: int) -> list[Row]:
    points = [("beta", beta) for beta in config.sweep_values] + [("zeta", zeta) for zeta in config.series]
    tasks = [dask.delayed(_bandwidth_row)(config, axis, value) for axis, value in points]
    return list(_compute_in_order(tasks, threads))


def _coverage_vs_sigma_row(config: ExperimentConfig, lambda_p: float, sigma: float) -> Row:
    geometry = config.geometry.replace(sigma=sigma, lambda_p=lambda_p)
    analytic = d2d_coverage(config.b_i, geometry, config.radio, config.quad)
    return {"sigma_m": sigma, "lambda_p_km2": lambda_p, "analytic": analytic}


def _run_coverage_vs_sigma(config: ExperimentConfig, threads: int) -> list[Row]:
    tasks = [
        dask.delayed(_coverage_vs_sigma_row)(config, lambda_p, sigma)
        for lambda_p in config.series
        for sigma in config.sweep_values
    ]
    return list(_compute_in_order(tasks, threads))


def _variant_setup(
    config: ExperimentConfig, variant: str, sigma: float
) -> tuple[NetworkGeometry, RadioConfig, MonteCarloConfig]:
    geometry = config.geometry.replace(sigma=sigma)
    radio = config.radio.replace(channel_mode="rayleigh_nlos", alpha_los=None, nakagami_m=None)
    mc = config.mc.replace(process_kind="tcp", provider_selection="nearest", ball_radius=None)
    if variant in ("mcp", "ppp"):
        mc = mc.replace(process_kind=variant, ball_radius=sigma if variant == "mcp" else None)
    elif variant == "best_channel":
        mc = mc.replace(provider_selection="best_channel")
    elif variant == "nakagami_los_intra":
        radio = radio.replace(channel_mode="nakagami_los_intra", alpha_los=_LOS_ALPHA, nakagami_m=_LOS_M)
    return geometry, radio, mc


def _variant_row(config: ExperimentConfig, variant: str, sigma: float) -> Row:
    geometry, radio, mc = _variant_setup(config, variant, sigma)
    estimate = estimate_coverage_variant(geometry, radio, config.b_i, mc)
    # the variants that coincide with the analytic model carry its value
    if variant in ("tcp", "nearest", "rayleigh_nlos"):
        analytic = d2d_coverage(config.b_i, geometry, radio, config.quad, normalize=mc.condition_on_provider)
    else:
        analytic = np.nan
    return {
        "variant": variant,
        "param_value": sigma,
        "mean": estimate.mean,
        "ci99": estimate.half_width_99,
        "trials": estimate.trials_used,
        "analytic_value": analytic,
    }


def _run_variants(config: ExperimentConfig, threads: int) -> list[Row]:
    tasks = [
        dask.delayed(_variant_row)(config, variant, sigma) for variant in _VARIANTS for sigma in config.sweep_values
    ]
    return list(_compute_in_order(tasks, threads))


def _delay_compare_rows(config: ExperimentConfig, beta: float) -> list[Row]:
    geometry, radio, traffic = config.geometry, config.radio, config.traffic
    library = _library(config, beta)
    equal = 0.5 * radio.bandwidth
    rows = []
    for scheme in _BASELINES:
        content = library.with_caching(baseline_caching(scheme, library))
        coverage = coverage_table(content, geometry, radio, config.quad)
        t_equal = summarize_delay(content, traffic, geometry, radio, coverage, equal).t_weighted
        try:
            w_d = optimal_bandwidth(content, traffic, geometry, radio, coverage)
            t_optimized = summarize_delay(content, traffic, geometry, radio, coverage, w_d).t_weighted
        except InfeasibleError:
            t_optimized = np.inf
        rows.append({"beta": beta, "scheme": scheme, "bandwidth": "equal", "t_seconds": t_equal})
        rows.append({"beta": beta, "scheme": scheme, "bandwidth": "optimized", "t_seconds": t_optimized})
    t_equal, t_optimized = _equal_and_optimized(config, library, traffic, geometry)
    rows.append({"beta": beta, "scheme": "pc_optimized", "bandwidth": "equal", "t_seconds": t_equal})
    rows.append({"beta": beta, "scheme": "pc_optimized", "bandwidth": "optimized", "t_seconds": t_optimized})
    return rows


def _run_delay_compare(config: ExperimentConfig, threads: int) -> list[Row]:
    tasks = [dask.delayed(_delay_compare_rows)(config, beta) for beta in config.sweep_values]
    return _flatten(_compute_in_order(tasks, threads))


def _bs_matched_geometry(config: ExperimentConfig, lambda_p: float, sigma: float) -> NetworkGeometry:
    """Geometry at ``(lambda_p, sigma)`` whose base-station density keeps ``lambda_p = eta lambda_b``."""
    return config.geometry.replace(sigma=sigma, lambda_p=lambda_p, lambda_b=lambda_p / config.traffic.eta)


def _delay_vs_geometry_row(config: ExperimentConfig, lambda_p: float, sigma: float) -> Row:
    geometry = _bs_matched_geometry(config, lambda_p, sigma)
    w_d_over_w, t = _optimized_point(config, _library(config), config.traffic, geometry)
    return {"sigma_m": sigma, "lambda_p_km2": lambda_p, "w_d_over_w": w_d_over_w, "t_seconds": t}


def _run_delay_vs_geometry(config: ExperimentConfig, threads: int) -> list[Row]:
    tasks = [
        dask.delayed(_delay_vs_geometry_row)(config, lambda_p, sigma)
        for lambda_p in config.series
        for sigma in config.sweep_values
    ]
    return list(_compute_in_order(tasks, threads))


def _delay_vs_p_rows(config: ExperimentConfig, p: float) -> list[Row]:
    geometry = config.geometry.replace(p=p)
    equal, optimized = _equal_and_optimized(config, _library(config), config.traffic, geometry)
    return [
        {"p": p, "bandwidth": "equal", "t_seconds": equal},
        {"p": p, "bandwidth": "optimized", "t_seconds": optimized},
    ]


def _run_delay_vs_p(config: ExperimentConfig, threads: int) -> list[Row]:
    tasks = [dask.delayed(_delay_vs_p_rows)(config, p) for p in config.sweep_values]
    return _flatten(_compute_in_order(tasks, threads))


@dataclass(frozen=True, eq=False)
class FigureRecipe:
    """
    Sweep reproducing one figure.

    Attributes
    ----------
    figure
        Figure identifier.
    description
        One-line summary.
    columns
        Columns of the CSV table, in order.
    sweep_axis
        Parameter swept by ``grid``.
    series_axis
        Parameter taking one value per curve, from ``series``; empty when the figure has a single family.
    grid, series
        Default values of the two axes.
    overrides
        Changes to the reference parameters: nested mappings update the record of the same name.
    runner
        Function computing the rows, in sweep order, given the configuration and the number of threads.
    """

    figure: FigureId
    description: str
    columns: tuple[str, ...]
    sweep_axis: str
    grid: tuple[float, ...]
    runner: Callable[[ExperimentConfig, int], list[Row]]
    series_axis: str = ""
    series: tuple[float, ...] = ()
    overrides: Mapping[str, Any] = field(default_factory=dict)

    def configure(self, config: ExperimentConfig) -> ExperimentConfig:
        """Apply the recipe's overrides and default grids."""
        changes: dict[str, Any] = {"sweep_values": self.grid, "series": self.series}
        for name, value in self.overrides.items():
            if isinstance(value, Mapping):
                changes[name] = dataclasses.replace(getattr(config, name), **value)
            else:
                changes[name] = value
        return config.replace(**changes)


# delay figures run at lambda_p = 10 per km^2 with eta = 5 clients per base station
_DELAY_LAMBDA_P = 10.0
_CLIENTS_PER_BS = 5.0
_DELAY_POINT: dict[str, Any] = {
    "geometry": {"lambda_p": _DELAY_LAMBDA_P, "lambda_b": _DELAY_LAMBDA_P / _CLIENTS_PER_BS},
    "traffic": {"zeta": 0.1, "eta": _CLIENTS_PER_BS},
}
# heavier request rate for the scheme comparison
_COMPARE_POINT: dict[str, Any] = {**_DELAY_POINT, "traffic": {"zeta": 0.225, "eta": _CLIENTS_PER_BS}}

FIGURE_RECIPES: dict[str, FigureRecipe] = {
    recipe.figure: recipe
    for recipe in (
        FigureRecipe(
            figure="Fig3_NearestPdf",
            description="Density of the nearest provider distance, analytic and simulated.",
            columns=("b_i", "h_m", "analytic_pdf", "mc_density"),
            sweep_axis="b_i",
            grid=(0.5, 1.0),
            runner=_run_nearest_pdf,
            overrides={"geometry": {"sigma": 5.0, "n_bar": 20.0, "p": 0.5}, "trials": 100_000},
        ),
        FigureRecipe(
            figure="Fig4_CoverageVsP",
            description="D2D rate coverage against the access probability.",
            columns=("p", "b_i", "analytic", "mc_mean", "mc_ci99"),
            sweep_axis="p",
            grid=_grid(0.1, 1.0, 0.1),
            runner=_run_coverage_vs_p,
            series_axis="b_i",
            series=(0.5, 1.0),
            overrides={"montecarlo": {"condition_on_provider": False, "intra_model": "decoupled"}},
        ),
        FigureRecipe(
            figure="Fig5_OptBandwidth",
            description="Optimized D2D bandwidth share against the Zipf exponent and the request rate.",
            columns=("axis", "param_value", "w_d_over_w", "t_seconds"),
            sweep_axis="beta",
            grid=_grid(0.2, 2.0, 0.2),
            runner=_run_opt_bandwidth,
            series_axis="zeta",
            series=_grid(0.05, 0.5, 0.05),
            overrides=_DELAY_POINT,
        ),
        FigureRecipe(
            figure="Fig6_CoverageVsSigma",
            description="D2D rate coverage against the cluster spread for several cluster densities.",
            columns=("sigma_m", "lambda_p_km2", "analytic"),
            sweep_axis="sigma",
            grid=_grid(5.0, 50.0, 5.0),
            runner=_run_coverage_vs_sigma,
            series_axis="lambda_p",
            series=(10.0, 50.0, 100.0),
            overrides={"geometry": {"p": 0.2}, "b_i": 1.0},
        ),
        FigureRecipe(
            figure="Fig8_Variants",
            description="Simulated coverage of the process, provider-selection and channel variants.",
            columns=("variant", "param_value", "mean", "ci99", "trials", "analytic_value"),
            sweep_axis="sigma",
            grid=(5.0, 10.0, 20.0, 40.0),
            runner=_run_variants,
            overrides={"b_i": 1.0},
        ),
        FigureRecipe(
            figure="Fig9_DelayCompare",
            description="Weighted delay of the caching schemes under equal and optimized bandwidth splits.",
            columns=("beta", "scheme", "bandwidth", "t_seconds"),
            sweep_axis="beta",
            grid=_grid(0.2, 2.0, 0.2),
            runner=_run_delay_compare,
            overrides=_COMPARE_POINT,
        ),
        FigureRecipe(
            figure="Fig10_DelayVsGeometry",
            description="Optimized bandwidth share and delay against the cluster spread and density.",
            columns=("sigma_m", "lambda_p_km2", "w_d_over_w", "t_seconds"),
            sweep_axis="sigma",
            grid=_grid(5.0, 50.0, 5.0),
            runner=_run_delay_vs_geometry,
            series_axis="lambda_p",
            series=(10.0, 50.0, 100.0),
            overrides={"traffic": _DELAY_POINT["traffic"]},
        ),
        FigureRecipe(
            figure="Fig11_DelayVsP",
            description="Delay of the optimized caching against the access probability, equal and optimized splits.",
            columns=("p", "bandwidth", "t_seconds"),
            sweep_axis="p",
            grid=_grid(0.1, 1.0, 0.1),
            runner=_run_delay_vs_p,
            overrides={**_DELAY_POINT, "radio": {"theta": db_to_linear(5.0)}},
        ),
    )
}


def _recipe(config: ExperimentConfig) -> FigureRecipe:
    if config.experiment is None:
        raise ValueError("The configuration selects no figure recipe.")
    return FIGURE_RECIPES[config.experiment]


def run_figure(config: ExperimentConfig, threads: int = 1) -> pd.DataFrame:
    """
    Compute the table of a figure.

    Parameters
    ----------
    config
        Resolved experiment parameters; the recipe is selected by ``config.experiment``.
    threads
        Worker threads; sweep points run concurrently but rows keep the sweep order.

    Returns
    -------
    The table, with the recipe's columns. Unstable delay points hold ``inf``.
    """
    recipe = _recipe(config)
    logger.info(f"Running {recipe.figure}: {recipe.description}")
    rows = recipe.runner(config, threads)
    table = pd.DataFrame(rows, columns=list(recipe.columns))
    logger.info(f"{recipe.figure} done: {len(table)} rows.")
    return table


def _package_version() -> str:
    try:
        return version("clusterd2d")
    except PackageNotFoundError:
        return "unknown"


def run_experiment(
    config: ExperimentConfig, out_dir: Union[str, Path], threads: int = 1, name: Optional[str] = None
) -> tuple[Path, Path]:
    """
    Run a figure recipe and write ``<name>.csv`` with its ``<name>.manifest.json``.

    The manifest records the resolved parameters, seeds, trial counts, package version and columns: rerunning it
    reproduces the CSV byte for byte.

    Parameters
    ----------
    config
        Resolved experiment parameters.
    out_dir
        Output directory, created when missing.
    threads
        Worker threads.
    name
        Base name of the output files; defaults to ``config.output`` and then to the figure identifier.

    Returns
    -------
    Paths of the CSV file and of the manifest.
    """
    recipe = _recipe(config)
    table = run_figure(config, threads)
    out_dir = Path(out_dir)
    if name is not None:
        csv_path = out_dir / f"{name}.csv"
    elif config.output is not None:
        csv_path = out_dir / config.output
    else:
        csv_path = out_dir / f"{config.experiment}.csv"
    write_results_csv(table, csv_path, recipe.columns)
    manifest = {
        "package": "clusterd2d",
        "version": _package_version(),
        "format_version": CurrentResultsFormat().version,
        "figure": recipe.figure,
        "columns": list(recipe.columns),
        "rows": len(table),
        "sweep": {
            "axis": recipe.sweep_axis,
            "values": list(config.sweep_values),
            "series_axis": recipe.series_axis,
            "series": list(config.series),
        },
        "seed": config.seed,
        "trials": config.trials,
        "threads": threads,
        "parameters": config.to_dict(),
    }
    manifest_path = write_manifest(manifest, csv_path.with_name(f"{csv_path.stem}.manifest.json"))
    return csv_path, manifest_path
