"""
The CLI Interaction module.

This module provides the command line interface of clusterd2d: the config-driven figure runner (``run`` and
``figure``) and one-shot commands evaluating the coverage, the delay, the joint optimization and the queue simulation
at a single operating point. Exit codes: 0 on success, 1 on a runtime error, 2 on an invalid configuration.
"""

from __future__ import annotations

import dataclasses
import functools
import sys
from pathlib import Path
from typing import Any, Callable, Optional, TypeVar, get_args

import click

from clusterd2d._exceptions import ConfigError
from clusterd2d.models import CachingPolicy, ExperimentConfig, FigureId

F = TypeVar("F", bound=Callable[..., Any])

_POLICIES = ("uniform", "zipf_top_m", "zipf_proportional")


def _exit_on_error(func: F) -> F:
    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except ConfigError as e:
            click.echo(f"Configuration error: {e}", err=True)
            sys.exit(2)
        except (ValueError, NotImplementedError) as e:
            click.echo(f"Error: {e}", err=True)
            sys.exit(1)

    return wrapper  # type: ignore[return-value]


def _run_options(func: F) -> F:
    """Options shared by the figure runners."""
    for option in reversed(
        [
            click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), default=Path(".")),
            click.option("--seed", type=int, default=None, help="Override the master seed."),
            click.option("--trials", type=int, default=None, help="Override the Monte Carlo trials per point."),
            click.option(
                "--threads",
                type=int,
                default=1,
                envvar="CLUSTERD2D_THREADS",
                show_default=True,
                help="Worker threads; defaults to $CLUSTERD2D_THREADS.",
            ),
        ]
    ):
        func = option(func)
    return func


def _point_options(func: F) -> F:
    """Operating-point options of the one-shot commands; they override the configuration file."""
    for option in reversed(
        [
            click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path)),
            click.option("--lambda-p", type=float, help="Cluster density, per km^2."),
            click.option("--lambda-b", type=float, help="Base-station density, per km^2."),
            click.option("--sigma", type=float, help="Cluster spread, in m."),
            click.option("--n-bar", type=float, help="Mean devices per cluster."),
            click.option("--p", "access", type=float, help="Access probability."),
            click.option("--theta-db", type=float, help="SIR threshold, in dB."),
            click.option("--beta", type=float, help="Zipf exponent."),
            click.option("--zeta", type=float, help="Requests per second per client."),
            click.option("--eta", type=float, help="Clients per base station."),
        ]
    ):
        func = option(func)
    return func


def _operating_point(config_path: Optional[Path], **overrides: Optional[float]) -> ExperimentConfig:
    from clusterd2d._io import read_config
    from clusterd2d._utils import db_to_linear

    config = read_config(config_path) if config_path is not None else ExperimentConfig()
    geometry_changes = {
        name: overrides[key]
        for key, name in (
            ("lambda_p", "lambda_p"),
            ("lambda_b", "lambda_b"),
            ("sigma", "sigma"),
            ("n_bar", "n_bar"),
            ("access", "p"),
        )
        if overrides.get(key) is not None
    }
    traffic_changes = {name: overrides[name] for name in ("zeta", "eta") if overrides.get(name) is not None}
    changes: dict[str, Any] = {}
    if geometry_changes:
        changes["geometry"] = config.geometry.replace(**geometry_changes)
    if traffic_changes:
        changes["traffic"] = dataclasses.replace(config.traffic, **traffic_changes)
    if overrides.get("theta_db") is not None:
        changes["radio"] = config.radio.replace(theta=db_to_linear(overrides["theta_db"]))
    if overrides.get("beta") is not None:
        changes["beta"] = overrides["beta"]
    return config.replace(**changes)


def _apply_run_overrides(config: ExperimentConfig, seed: Optional[int], trials: Optional[int]) -> ExperimentConfig:
    changes: dict[str, Any] = {}
    if seed is not None:
        changes["seed"] = seed
    if trials is not None:
        changes["trials"] = trials
    return config.replace(**changes)


@click.command(help="Run the experiment described by a TOML configuration file.")
@click.argument("config_file", required=False, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--config", "config_option", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@_run_options
@_exit_on_error
def run(
    config_file: Optional[Path],
    config_option: Optional[Path],
    out_dir: Path,
    seed: Optional[int],
    trials: Optional[int],
    threads: int,
) -> None:
    """
    Run the experiment described by a configuration file.

    Writes ``<name>.csv`` and ``<name>.manifest.json`` into the output directory, ``<name>`` being the stem of the
    configuration file unless the file sets ``output``.
    """
    from clusterd2d._io import read_config
    from clusterd2d.experiments import run_experiment

    path = config_option or config_file
    if path is None:
        raise ConfigError("No configuration file given: pass it as an argument or with --config.")
    config = _apply_run_overrides(read_config(path), seed, trials)
    csv_path, manifest_path = run_experiment(config, out_dir, threads, name=None if config.output else path.stem)
    click.echo(f"{csv_path}\n{manifest_path}")


@click.command(help="Run a figure recipe with its default parameters.")
@click.argument("figure_id", type=click.Choice(get_args(FigureId)))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@_run_options
@_exit_on_error
def figure(
    figure_id: str,
    config_path: Optional[Path],
    out_dir: Path,
    seed: Optional[int],
    trials: Optional[int],
    threads: int,
) -> None:
    """Run the recipe ``figure_id``, optionally with the parameters of a configuration file for the same figure."""
    from clusterd2d._io import read_config
    from clusterd2d.experiments import run_experiment

    if config_path is not None:
        config = read_config(config_path)
        if config.experiment != figure_id:
            raise ConfigError(f"The configuration describes {config.experiment}, not {figure_id}.", field="experiment")
    else:
        config = ExperimentConfig.for_figure(figure_id)  # type: ignore[arg-type]
    config = _apply_run_overrides(config, seed, trials)
    csv_path, manifest_path = run_experiment(config, out_dir, threads)
    click.echo(f"{csv_path}\n{manifest_path}")


@click.command(help="Rate coverage of one content over the D2D link.")
@click.option("--b-i", type=float, default=1.0, show_default=True, help="Caching probability of the content.")
@click.option("--monte-carlo/--no-monte-carlo", default=False, help="Also run the Monte Carlo estimator.")
@click.option("--unconditional", is_flag=True, help="Do not condition on the existence of a provider.")
@click.option("--seed", type=int, default=None)
@click.option("--trials", type=int, default=None)
@click.option("--threads", type=int, default=1, envvar="CLUSTERD2D_THREADS")
@_point_options
@_exit_on_error
def coverage(
    b_i: float,
    monte_carlo: bool,
    unconditional: bool,
    seed: Optional[int],
    trials: Optional[int],
    threads: int,
    config_path: Optional[Path],
    **overrides: Optional[float],
) -> None:
    """Print the analytic coverage and, on request, the Monte Carlo estimate with its 99% half-width."""
    from clusterd2d._core.coverage import bs_coverage, d2d_coverage
    from clusterd2d._core.montecarlo import estimate_coverage_variant

    config = _apply_run_overrides(_operating_point(config_path, **overrides), seed, trials)
    normalize = not unconditional
    analytic = d2d_coverage(b_i, config.geometry, config.radio, config.quad, normalize=normalize)
    click.echo(f"analytic_d2d_coverage: {analytic:.6f}")
    click.echo(f"bs_coverage: {bs_coverage(config.radio.theta, config.radio.alpha):.6f}")
    if monte_carlo:
        mc = config.mc.replace(condition_on_provider=normalize)
        estimate = estimate_coverage_variant(config.geometry, config.radio, b_i, mc, threads)
        click.echo(f"mc_mean: {estimate.mean:.6f}")
        click.echo(f"mc_ci99: {estimate.half_width_99:.6f}")
        click.echo(f"mc_window_radius_m: {estimate.window_radius_final:.6g}")


@click.command(help="Weighted delay and stability margins at a fixed bandwidth split.")
@click.option("--bandwidth-split", type=float, default=0.5, show_default=True, help="D2D share W_d / W.")
@click.option("--policy", type=click.Choice(_POLICIES), default="zipf_top_m", show_default=True)
@_point_options
@_exit_on_error
def delay(
    bandwidth_split: float, policy: CachingPolicy, config_path: Optional[Path], **overrides: Optional[float]
) -> None:
    """Print the delay report of a baseline caching policy; an unstable queue is reported, not an error."""
    from clusterd2d._core.coverage import coverage_table
    from clusterd2d._core.delay import summarize_delay

    if not 0 <= bandwidth_split <= 1:
        raise ValueError(f"The bandwidth split must lie in [0, 1], got {bandwidth_split}.")
    config = _operating_point(config_path, **overrides).replace(policy=policy)
    content = config.content
    table = coverage_table(content, config.geometry, config.radio, config.quad)
    w_d = bandwidth_split * config.radio.bandwidth
    summary = summarize_delay(content, config.traffic, config.geometry, config.radio, table, w_d)
    for name in ("t_weighted", "t_d", "t_b", "rho_d", "rho_b", "margin_d", "margin_b", "stable_d", "stable_b"):
        click.echo(f"{name}: {getattr(summary, name)}")


@click.command(help="Joint optimization of the caching vector and of the bandwidth split.")
@click.option("--trace", type=click.Path(dir_okay=False, path_type=Path), help="Write the iterates as CSV.")
@_point_options
@_exit_on_error
def optimize(trace: Optional[Path], config_path: Optional[Path], **overrides: Optional[float]) -> None:
    """Print b*, W_d*/W, T* and the number of rounds; infeasible operating points exit with code 1."""
    from clusterd2d._core.optimize import bcd_optimize, feasible_baseline, tabulate_upsilon
    from clusterd2d._io import write_trace_csv

    config = _operating_point(config_path, **overrides)
    library = config.content
    upsilon = tabulate_upsilon(config.geometry, config.radio, config.solver.upsilon_grid_points, config.quad)
    policy, b = feasible_baseline(library, config.traffic, config.geometry, config.radio, upsilon)
    result = bcd_optimize(
        library.with_caching(b), config.traffic, config.geometry, config.radio, config.solver, upsilon
    )
    click.echo(f"initial_policy: {policy}")
    click.echo(f"b_star: {' '.join(f'{v:.6f}' for v in result.b_star)}")
    click.echo(f"w_d_over_w: {result.w_d_star / config.radio.bandwidth:.6f}")
    click.echo(f"t_star: {result.t_star:.6g}")
    click.echo(f"iterations: {result.iterations}")
    click.echo(f"converged: {result.converged}")
    if trace is not None:
        write_trace_csv(result, trace)


def _rates(text: str) -> list[float]:
    try:
        return [float(value) for value in text.split(",") if value.strip()]
    except ValueError as e:
        raise click.BadParameter(f"expected comma-separated numbers, got {text!r}") from e


@click.command(name="simulate-queue", help="Discrete-event simulation of a multiclass FIFO queue.")
@click.option("--arrival-rates", required=True, help="Comma-separated arrival rate of every class, per s.")
@click.option("--service-rates", required=True, help="Comma-separated service rate of every class, per s.")
@click.option("--horizon", type=int, default=1_000_000, show_default=True, help="Simulated requests.")
@click.option("--warmup", type=int, default=10_000, show_default=True, help="Discarded initial requests.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--trace", type=click.Path(dir_okay=False, path_type=Path), help="Write the queue events as CSV.")
@_exit_on_error
def simulate_queue(
    arrival_rates: str, service_rates: str, horizon: int, warmup: int, seed: int, trace: Optional[Path]
) -> None:
    """Print the simulated mean sojourn time next to the exact and approximate values."""
    import numpy as np

    from clusterd2d._core.delay import pollaczek_khinchine_sojourn
    from clusterd2d._core.queue_simulation import simulate_mpsq
    from clusterd2d.models import DesConfig

    zeta_i, mu_i = np.array(_rates(arrival_rates)), np.array(_rates(service_rates))
    des = DesConfig(horizon_requests=horizon, warmup_requests=warmup, seed=seed)
    result = simulate_mpsq(zeta_i, mu_i, des, trace)
    if result.empty:
        click.echo("empty: True")
        return
    rho = float(np.sum(zeta_i / mu_i))
    click.echo(f"rho: {rho:.6f}")
    click.echo(f"des_mean_s: {result.mean_sojourn:.6g}")
    click.echo(f"des_ci95: {result.ci95:.6g}")
    click.echo(f"stable: {result.stable}")
    if result.stable:
        click.echo(f"pk_exact_s: {pollaczek_khinchine_sojourn(zeta_i, mu_i):.6g}")
        click.echo(f"approx_s: {rho / (1.0 - rho) / zeta_i.sum():.6g}")


@click.group()
def cli() -> None:
    """Provide the main Click command group.

    This function serves as the main entry point for the command-line interface. It creates a Click command
    group and adds the various cli commands to it.
    """


for command in (run, figure, coverage, delay, optimize, simulate_queue):
    cli.add_command(command)


def main() -> None:
    """Initialize and run the command-line interface."""
    cli()


if __name__ == "__main__":
    main()
