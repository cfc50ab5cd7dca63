"""Discrete-event simulation of the single-server FIFO queues, used to check the delay approximations."""

from __future__ import annotations

import math
import warnings
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import dask
import numpy as np
import pandas as pd
from scipy import stats

from clusterd2d._core.delay import pollaczek_khinchine_sojourn
from clusterd2d._io.io_csv import write_queue_trace
from clusterd2d._logging import logger
from clusterd2d._types import ArrayLike
from clusterd2d._utils import _compute_in_order, _parse_list_into_array, _spawn_generator
from clusterd2d.models import DesConfig

__all__ = ["QueueSimulationResult", "mpsq_approximation_report", "simulate_bs_queue", "simulate_mpsq"]


@dataclass(frozen=True)
class QueueSimulationResult:
    """
    Mean sojourn time measured after the warm-up.

    Attributes
    ----------
    mean_sojourn
        Mean time from arrival to departure, in s; ``nan`` for an empty result.
    ci95
        Half-width of the 95% batch-means confidence interval, in s.
    n_samples
        Requests measured.
    stable
        Whether the simulated queue satisfies ``rho < 1``. An unstable queue has no steady state: the estimate only
        describes the simulated horizon.
    empty
        ``True`` when the queue receives no arrivals.
    """

    mean_sojourn: float
    ci95: float
    n_samples: int
    stable: bool
    empty: bool = False


def _batch_means(samples: ArrayLike, n_batches: int) -> tuple[float, float]:
    means = np.array([batch.mean() for batch in np.array_split(samples, n_batches)])
    half_width = stats.t.ppf(0.975, n_batches - 1) * means.std(ddof=1) / math.sqrt(n_batches)
    return float(samples.mean()), float(half_width)


def simulate_mpsq(
    zeta_i: Union[ArrayLike, Sequence[float]],
    mu_i: Union[ArrayLike, Sequence[float]],
    des: DesConfig = DesConfig(),
    trace_path: Optional[Union[str, Path]] = None,
) -> QueueSimulationResult:
    """
    Simulate a multiclass single-server FIFO queue.

    Class ``i`` receives Poisson arrivals of rate ``zeta_i[i]`` and needs an exponential service time of rate
    ``mu_i[i]``. Waiting times follow the Lindley recursion ``W_{k+1} = max(0, W_k + S_k - (A_{k+1} - A_k))``.

    Parameters
    ----------
    zeta_i
        Arrival rate of every class, per s.
    mu_i
        Service rate of every class, per s.
    des
        Horizon, warm-up, seed and number of batches.
    trace_path
        Optional CSV file receiving every arrival and departure event.

    Returns
    -------
    The post-warm-up mean sojourn time with its batch-means confidence interval.
    """
    zeta_i = _parse_list_into_array(zeta_i).ravel()
    mu_i = _parse_list_into_array(mu_i).ravel()
    if zeta_i.shape != mu_i.shape:
        raise ValueError(f"Got {mu_i.size} service rates for {zeta_i.size} classes.")
    if np.any(zeta_i < 0) or np.any(mu_i <= 0):
        raise ValueError("Arrival rates must be non-negative and service rates positive.")
    rate = float(zeta_i.sum())
    if rate == 0:
        return QueueSimulationResult(mean_sojourn=np.nan, ci95=np.nan, n_samples=0, stable=True, empty=True)
    rho = float(np.sum(zeta_i / mu_i))
    stable = rho < 1
    if not stable:
        message = f"Simulating an unstable queue (rho = {rho:.4g}); the estimate only covers the simulated horizon."
        warnings.warn(message, RuntimeWarning, stacklevel=2)
        logger.warning(message)

    rng = _spawn_generator(des.seed, 0)
    n = des.horizon_requests
    arrivals = np.cumsum(rng.exponential(1.0 / rate, size=n))
    classes = rng.choice(zeta_i.size, size=n, p=zeta_i / rate)
    service = rng.exponential(1.0, size=n) / mu_i[classes]
    drift = np.concatenate([[0.0], np.cumsum(service[:-1] - np.diff(arrivals))])
    waiting = drift - np.minimum.accumulate(drift)
    sojourn = waiting + service

    if trace_path is not None:
        write_queue_trace(arrivals, arrivals + sojourn, classes, trace_path)
    mean, half_width = _batch_means(sojourn[des.warmup_requests :], des.n_batches)
    return QueueSimulationResult(
        mean_sojourn=mean, ci95=half_width, n_samples=n - des.warmup_requests, stable=stable, empty=False
    )


def simulate_bs_queue(
    eta: float,
    zeta_b: float,
    mu_b: float,
    des: DesConfig = DesConfig(),
    trace_path: Optional[Union[str, Path]] = None,
) -> QueueSimulationResult:
    """Simulate the base-station queue: M/M/1 with arrival rate ``eta * zeta_b`` and service rate ``mu_b``."""
    return simulate_mpsq([eta * zeta_b], [mu_b], des, trace_path)


def _report_row(name: str, zeta_i: ArrayLike, mu_i: ArrayLike, des: DesConfig) -> dict[str, Union[str, float]]:
    zeta_i = _parse_list_into_array(zeta_i).ravel()
    mu_i = _parse_list_into_array(mu_i).ravel()
    rho = float(np.sum(zeta_i / mu_i))
    approx = rho / (1.0 - rho) / float(zeta_i.sum())
    simulated = simulate_mpsq(zeta_i, mu_i, des)
    return {
        "case": name,
        "rho": rho,
        "approx_s": approx,
        "pk_exact_s": pollaczek_khinchine_sojourn(zeta_i, mu_i),
        "des_mean_s": simulated.mean_sojourn,
        "des_ci95": simulated.ci95,
        "rel_err_approx": (approx - simulated.mean_sojourn) / simulated.mean_sojourn,
    }


def mpsq_approximation_report(
    cases: Mapping[str, tuple[Sequence[float], Sequence[float]]], des: DesConfig = DesConfig(), threads: int = 1
) -> pd.DataFrame:
    """
    Compare the ``rho / (1 - rho)`` queue-size approximation with the exact mean and with simulation.

    Parameters
    ----------
    cases
        Stable multiclass queues by name, each given as ``(zeta_i, mu_i)``.
    des
        Simulation settings, shared by every case.
    threads
        Worker threads; cases run concurrently.

    Returns
    -------
    One row per case with columns ``case, rho, approx_s, pk_exact_s, des_mean_s, des_ci95, rel_err_approx``.
    """
    tasks = [dask.delayed(_report_row)(name, zeta, mu, des) for name, (zeta, mu) in cases.items()]
    return pd.DataFrame(list(_compute_in_order(tasks, threads)))
