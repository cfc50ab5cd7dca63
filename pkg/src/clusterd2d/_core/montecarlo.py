"""Monte Carlo estimators of the D2D coverage and of its building blocks.

The typical device sits at the origin. Every trial owns its random streams, derived from the master seed and the trial
index, so estimates do not depend on the number of worker threads or on the order in which trials run. The far field
is built ring by ring around the origin: ring 0 is a disc of radius ``R0`` and ring ``k`` the annulus
``(R0 2**(k-1), R0 2**k]``. Each ring has its own stream, so enlarging the window extends a realization instead of
redrawing it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import dask
import numpy as np
import pandas as pd
from numpy.random import Generator
from scipy import stats

from clusterd2d._core.point_process import _cluster_offsets, _uniform_in_annulus
from clusterd2d._exceptions import NoProviderError
from clusterd2d._logging import logger
from clusterd2d._types import ArrayLike, IntArray
from clusterd2d._utils import _check_probability, _compute_in_order, _spawn_generator
from clusterd2d.models import (
    AdaptiveWindow,
    FixedWindow,
    IntraModel,
    MonteCarloConfig,
    NetworkGeometry,
    ProcessKind,
    ProviderSelection,
    RadioConfig,
    WindowPolicy,
)

__all__ = [
    "CoverageEstimate",
    "NearestDistanceHistogram",
    "bernoulli_ci99",
    "estimate_coverage_variant",
    "estimate_d2d_coverage",
    "estimate_inter_laplace",
    "estimate_intra_laplace",
    "estimate_nearest_pdf",
]

_Z99 = float(stats.norm.ppf(0.995))
_CHUNK = 256
_NEAREST_CHUNK = 20_000
# conditioning on a provider gives up below this provider probability
_MIN_PROVIDER_PROBABILITY = 1e-3
_MAX_ATTEMPTS = 100_000
# stream of the representative cluster; far-field ring k uses 1 + k
_REPRESENTATIVE = 0


@dataclass(frozen=True)
class CoverageEstimate:
    """Monte Carlo coverage estimate with its normal-approximation 99% confidence half-width."""

    mean: float
    half_width_99: float
    trials_used: int
    window_radius_final: float


@dataclass(frozen=True, eq=False)
class NearestDistanceHistogram:
    """Histogram of the distance to the nearest provider, normalized to unit mass."""

    edges: ArrayLike
    density: ArrayLike
    samples: int

    @property
    def centers(self) -> ArrayLike:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def widths(self) -> ArrayLike:
        return np.diff(self.edges)

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"h_lo_m": self.edges[:-1], "h_hi_m": self.edges[1:], "h_m": self.centers, "density": self.density}
        )


def bernoulli_ci99(indicators: ArrayLike) -> tuple[float, float]:
    """Mean of 0/1 outcomes and the half-width of its normal-approximation 99% confidence interval."""
    indicators = np.asarray(indicators, dtype=float)
    if indicators.size == 0:
        raise ValueError("Cannot estimate a probability from zero trials.")
    mean = float(indicators.mean())
    return mean, _Z99 * math.sqrt(mean * (1.0 - mean) / indicators.size)


@dataclass(frozen=True)
class _Scenario:
    geometry: NetworkGeometry
    seed: int
    kind: ProcessKind = "tcp"
    ball_radius: Optional[float] = None
    b_i: float = 1.0
    theta: float = 1.0
    alpha: float = 4.0
    alpha_intra: float = 4.0
    nakagami_m: Optional[float] = None
    selection: ProviderSelection = "nearest"
    condition: bool = True
    intra_model: IntraModel = "geometric"

    @classmethod
    def from_configs(
        cls, geometry: NetworkGeometry, radio: RadioConfig, b_i: float, mc: MonteCarloConfig
    ) -> _Scenario:
        los = radio.channel_mode == "nakagami_los_intra"
        return cls(
            geometry=geometry,
            seed=mc.seed,
            kind=mc.process_kind,
            ball_radius=mc.ball_radius if mc.ball_radius is not None else geometry.sigma,
            b_i=b_i,
            theta=radio.theta,
            alpha=radio.alpha,
            alpha_intra=radio.alpha_intra,
            nakagami_m=radio.nakagami_m if los else None,
            selection=mc.provider_selection,
            condition=mc.condition_on_provider,
            intra_model=mc.intra_model,
        )

    @property
    def base_radius(self) -> float:
        return _base_radius(self.geometry)

    def intra_fading(self, rng: Generator, n: int) -> ArrayLike:
        if self.nakagami_m is None:
            return rng.exponential(1.0, size=n)
        return rng.gamma(self.nakagami_m, 1.0 / self.nakagami_m, size=n)

    def provider_probability(self) -> float:
        """Probability that a trial holds at least one provider."""
        mean = self.b_i * self.geometry.active_per_cluster
        if self.kind == "ppp":
            mean *= self.geometry.lambda_p_m2 * np.pi * self.base_radius**2
        return float(-np.expm1(-mean))


def _base_radius(geometry: NetworkGeometry) -> float:
    radius = 20.0 * geometry.sigma
    if geometry.lambda_p > 0:
        radius = max(radius, 3.0 / math.sqrt(math.pi * geometry.lambda_p_m2))
    return radius


def _ring_bounds(base_radius: float, ring: int) -> tuple[float, float]:
    if ring == 0:
        return 0.0, base_radius
    return base_radius * 2.0 ** (ring - 1), base_radius * 2.0**ring


def _ring_devices(
    sc: _Scenario, trial: int, attempt: int, ring: int, window_radius: float
) -> tuple[ArrayLike, ArrayLike, ArrayLike]:
    """Distances to the origin, fading gains and cache flags of the active far-field devices of one ring.

    The whole ring is drawn before devices of clusters centred beyond ``window_radius`` are dropped.
    """
    rng = _spawn_generator(sc.seed, trial, attempt, 1 + ring)
    inner, outer = _ring_bounds(sc.base_radius, ring)
    area = np.pi * (outer**2 - inner**2)
    geometry = sc.geometry
    if sc.kind == "ppp":
        density = geometry.n_bar * geometry.lambda_p_m2 * geometry.p
        positions = _uniform_in_annulus(rng, rng.poisson(density * area), inner, outer)
        inside = np.linalg.norm(positions, axis=1) <= window_radius
    else:
        parents = _uniform_in_annulus(rng, rng.poisson(geometry.lambda_p_m2 * area), inner, outer)
        counts = rng.poisson(geometry.active_per_cluster, size=len(parents))
        offsets = _cluster_offsets(rng, int(counts.sum()), sc.kind, geometry.sigma, sc.ball_radius)
        positions = np.repeat(parents, counts, axis=0) + offsets
        inside = np.repeat(np.linalg.norm(parents, axis=1) <= window_radius, counts)
    fading = rng.exponential(1.0, size=len(positions))
    cached = rng.random(len(positions)) < sc.b_i
    distances = np.linalg.norm(positions[inside], axis=1)
    return distances, fading[inside], cached[inside]


def _ring_power_chunk(
    sc: _Scenario, trials: IntArray, attempts: IntArray, ring: int, window_radius: float
) -> ArrayLike:
    power = np.empty(len(trials))
    for n, (trial, attempt) in enumerate(zip(trials, attempts)):
        distances, fading, _ = _ring_devices(sc, int(trial), int(attempt), ring, window_radius)
        power[n] = np.sum(fading * distances ** (-sc.alpha))
    return power


def _select(distances: ArrayLike, power: ArrayLike, cached: ArrayLike, selection: ProviderSelection) -> int:
    providers = np.flatnonzero(cached)
    if selection == "nearest":
        return int(providers[np.argmin(distances[providers])])
    return int(providers[np.argmax(power[providers])])


def _serve_trial(sc: _Scenario, trial: int, window_radius: float) -> tuple[float, float, int, bool]:
    """Serving power, intra-cluster (or, for Poisson devices, near-field) interference, attempts and provider flag."""
    geometry = sc.geometry
    for attempt in range(_MAX_ATTEMPTS):
        if sc.kind == "ppp":
            distances, fading, cached = _ring_devices(sc, trial, attempt, 0, window_radius)
            power = fading * distances ** (-sc.alpha)
        else:
            rng = _spawn_generator(sc.seed, trial, attempt, _REPRESENTATIVE)
            # the typical device is a member: its cluster centre follows the offset law
            centre = _cluster_offsets(rng, 1, sc.kind, geometry.sigma, sc.ball_radius)[0]
            n_active = rng.poisson(geometry.active_per_cluster)
            positions = centre + _cluster_offsets(rng, n_active, sc.kind, geometry.sigma, sc.ball_radius)
            cached = rng.random(n_active) < sc.b_i
            fading = sc.intra_fading(rng, n_active)
            distances = np.linalg.norm(positions, axis=1)
            power = fading * distances ** (-sc.alpha_intra)
        if not cached.any():
            if sc.condition:
                continue
            return 0.0, float(power.sum()), attempt, False
        served = _select(distances, power, cached, sc.selection)
        signal = float(power[served])
        if sc.intra_model == "decoupled":
            h = distances[served]
            n = rng.poisson(geometry.active_per_cluster)
            r = rng.rayleigh(math.sqrt(2.0) * geometry.sigma, size=n)
            closer_providers = (r <= h) & (rng.random(n) < sc.b_i)
            gains = sc.intra_fading(rng, n)
            interference = float(np.sum(gains[~closer_providers] * r[~closer_providers] ** (-sc.alpha_intra)))
        else:
            interference = float(np.sum(np.delete(power, served)))
        return signal, interference, attempt, True
    raise NoProviderError(f"Provider too rare: trial {trial} found no provider in {_MAX_ATTEMPTS} attempts.")


def _serve_chunk(sc: _Scenario, trials: IntArray, window_radius: float) -> tuple[ArrayLike, ...]:
    rows = [_serve_trial(sc, int(trial), window_radius) for trial in trials]
    signal, interference, attempts, served = (np.array(column) for column in zip(*rows))
    return signal, interference, attempts.astype(np.int64), served.astype(bool)


def _chunks(n: int, size: int = _CHUNK) -> list[slice]:
    return [slice(start, min(start + size, n)) for start in range(0, n, size)]


def _grow_far_field(
    sc: _Scenario,
    trials: IntArray,
    attempts: IntArray,
    window: WindowPolicy,
    max_doublings: int,
    statistic: Callable[[ArrayLike], float],
    first_ring: int,
    threads: int,
) -> tuple[float, float]:
    """Add far-field rings to every trial until ``statistic(interference)`` settles.

    Returns the final statistic and window radius.
    """
    slices = _chunks(len(trials))

    def ring_power(ring: int, radius: float) -> ArrayLike:
        tasks = [dask.delayed(_ring_power_chunk)(sc, trials[s], attempts[s], ring, radius) for s in slices]
        return np.concatenate(_compute_in_order(tasks, threads)) if tasks else np.zeros(0)

    interference = np.zeros(len(trials))
    if isinstance(window, FixedWindow):
        ring = first_ring
        while _ring_bounds(sc.base_radius, ring)[0] < window.radius:
            interference += ring_power(ring, window.radius)
            ring += 1
        return statistic(interference), window.radius

    radius = sc.base_radius
    if first_ring == 0:
        interference += ring_power(0, radius)
    estimate = statistic(interference)
    for level in range(1, max_doublings + 1):
        radius = sc.base_radius * 2.0**level
        interference = interference + ring_power(level, radius)
        updated = statistic(interference)
        logger.debug(f"Window {radius:.1f} m: estimate {updated:.6f} (change {updated - estimate:+.2e}).")
        if abs(updated - estimate) < window.delta:
            return updated, radius
        estimate = updated
    if max_doublings > 0:
        logger.warning(f"The adaptive window did not settle after {max_doublings} doublings (radius {radius:.1f} m).")
    return estimate, radius


def estimate_d2d_coverage(
    geometry: NetworkGeometry,
    radio: RadioConfig,
    b_i: float,
    mc: MonteCarloConfig = MonteCarloConfig(),
    threads: int = 1,
) -> CoverageEstimate:
    """
    Monte Carlo estimate of the rate coverage of content ``i`` over the D2D link.

    Every trial places the typical device at the origin, draws its own cluster, thins the active members into
    providers of the content (probability ``b_i``), picks the serving provider and records whether the SIR exceeds
    ``radio.theta``. Interference comes from every other active device of the own cluster and from the far-field
    clusters in the simulation window.

    Parameters
    ----------
    geometry
        Network geometry.
    radio
        Radio configuration; its channel mode sets the fading and path loss of the intra-cluster links.
    b_i
        Caching probability of the content.
    mc
        Monte Carlo settings: trials, seed, window policy, process kind, provider selection and conditioning.
    threads
        Worker threads used for the trial chunks. Results do not depend on it.

    Returns
    -------
    The coverage estimate.

    Raises
    ------
    NoProviderError
        If trials are conditioned on a provider and providers exist with probability below 0.1%.
    """
    _check_probability("b_i", b_i)
    sc = _Scenario.from_configs(geometry, radio, b_i, mc)
    if sc.condition and sc.provider_probability() < _MIN_PROVIDER_PROBABILITY:
        raise NoProviderError(
            f"Provider too rare: a trial holds a provider of the content with probability "
            f"{sc.provider_probability():.3g}."
        )
    window_radius = mc.window.radius if isinstance(mc.window, FixedWindow) else sc.base_radius
    trials = np.arange(mc.trials, dtype=np.int64)
    tasks = [dask.delayed(_serve_chunk)(sc, trials[s], window_radius) for s in _chunks(mc.trials)]
    parts = _compute_in_order(tasks, threads)
    signal, near_field, attempts, served = (np.concatenate(column) for column in zip(*parts))
    total_attempts = int(attempts.sum()) + mc.trials
    if sc.condition and total_attempts >= 1000 and mc.trials / total_attempts < _MIN_PROVIDER_PROBABILITY:
        raise NoProviderError(f"Provider too rare: {total_attempts - mc.trials} of {total_attempts} draws rejected.")

    def coverage(far_field: ArrayLike) -> float:
        return float(np.mean(served & (signal > sc.theta * (near_field + far_field))))

    mean, radius = _grow_far_field(
        sc,
        trials,
        attempts,
        mc.window,
        mc.max_doublings,
        coverage,
        first_ring=1 if sc.kind == "ppp" else 0,
        threads=threads,
    )
    half_width = _Z99 * math.sqrt(mean * (1.0 - mean) / mc.trials)
    logger.debug(f"Coverage {mean:.4f} +- {half_width:.4f} over {mc.trials} trials ({total_attempts} draws).")
    return CoverageEstimate(mean=mean, half_width_99=half_width, trials_used=mc.trials, window_radius_final=radius)


def estimate_coverage_variant(
    geometry: NetworkGeometry,
    radio: RadioConfig,
    b_i: float,
    mc: MonteCarloConfig = MonteCarloConfig(),
    threads: int = 1,
) -> CoverageEstimate:
    """
    Coverage under the device-layer variant selected by ``mc.process_kind``.

    ``"tcp"`` is the Thomas cluster process of :func:`estimate_d2d_coverage`. ``"mcp"`` scatters members uniformly
    in a disc of ``mc.ball_radius`` (default ``sigma``). ``"ppp"`` replaces the clusters by a Poisson process of the
    same mean device density ``n_bar * lambda_p``; providers are then the nearby active devices caching the content
    and every link is Rayleigh faded with exponent ``radio.alpha``.
    """
    logger.debug(f"Coverage variant {mc.process_kind}/{mc.provider_selection}/{radio.channel_mode}.")
    return estimate_d2d_coverage(geometry, radio, b_i, mc, threads)


def estimate_nearest_pdf(
    geometry: NetworkGeometry, b_i: float, bins: int = 50, mc: MonteCarloConfig = MonteCarloConfig(trials=100_000)
) -> NearestDistanceHistogram:
    """
    Histogram of the distance from the typical device to its nearest active provider, given that one exists.

    Parameters
    ----------
    geometry
        Network geometry.
    b_i
        Caching probability of the content.
    bins
        Number of bins, spanning ``[0, largest sample]``.
    mc
        ``trials`` sets the number of samples and ``seed`` the streams; ``process_kind`` must be clustered.

    Returns
    -------
    The histogram, normalized to unit mass.
    """
    if bins < 10:
        raise ValueError(f"At least 10 bins are needed, got {bins}.")
    if mc.process_kind == "ppp":
        raise ValueError("The nearest-provider distance is defined for clustered processes only.")
    _check_probability("b_i", b_i)
    mean_providers = b_i * geometry.active_per_cluster
    if -math.expm1(-mean_providers) < _MIN_PROVIDER_PROBABILITY:
        raise NoProviderError(f"Provider too rare: {mean_providers:.3g} providers per cluster on average.")
    ball_radius = mc.ball_radius if mc.ball_radius is not None else geometry.sigma
    collected: list[ArrayLike] = []
    n_collected, chunk = 0, 0
    while n_collected < mc.trials:
        rng = _spawn_generator(mc.seed, chunk)
        chunk += 1
        centres = _cluster_offsets(rng, _NEAREST_CHUNK, mc.process_kind, geometry.sigma, ball_radius)
        counts = rng.poisson(mean_providers, size=_NEAREST_CHUNK)
        offsets = _cluster_offsets(rng, int(counts.sum()), mc.process_kind, geometry.sigma, ball_radius)
        distances = np.linalg.norm(np.repeat(centres, counts, axis=0) + offsets, axis=1)
        starts = np.cumsum(counts) - counts
        if distances.size:
            nearest = np.minimum.reduceat(distances, starts[counts > 0])
            collected.append(nearest)
            n_collected += nearest.size
    samples = np.concatenate(collected)[: mc.trials]
    density, edges = np.histogram(samples, bins=bins, range=(0.0, float(samples.max())), density=True)
    return NearestDistanceHistogram(edges=edges, density=density, samples=samples.size)


def estimate_intra_laplace(
    s: float,
    h: float,
    b_i: float,
    geometry: NetworkGeometry,
    alpha: float = 4.0,
    samples: int = 100_000,
    seed: int = 0,
) -> float:
    """
    Monte Carlo value of ``E[exp(-s I)]`` for the intra-cluster interference of the approximate model.

    Interferer distances are i.i.d. Rayleigh(sqrt(2) sigma); active devices closer than ``h`` that cache the content
    are dropped, and fading is Rayleigh.
    """
    if s < 0:
        raise ValueError(f"The Laplace transform argument must be non-negative, got {s}.")
    _check_probability("b_i", b_i)
    rng = _spawn_generator(seed, 0)
    counts = rng.poisson(geometry.active_per_cluster, size=samples)
    total = int(counts.sum())
    r = rng.rayleigh(math.sqrt(2.0) * geometry.sigma, size=total)
    cached = rng.random(total) < b_i
    gains = rng.exponential(1.0, size=total)
    power = np.where((r <= h) & cached, 0.0, gains * r ** (-alpha))
    interference = np.bincount(np.repeat(np.arange(samples), counts), weights=power, minlength=samples)
    return float(np.mean(np.exp(-s * interference)))


def estimate_inter_laplace(
    s: float,
    geometry: NetworkGeometry,
    alpha: float = 4.0,
    trials: int = 10_000,
    seed: int = 0,
    window_radius: Optional[float] = None,
    threads: int = 1,
) -> float:
    """
    Monte Carlo value of ``E[exp(-s I)]`` for the interference of all the clusters other than the typical device's.

    ``window_radius=None`` grows the window until the value moves by less than 0.005.
    """
    if s < 0:
        raise ValueError(f"The Laplace transform argument must be non-negative, got {s}.")
    if geometry.lambda_p == 0:
        return 1.0
    sc = _Scenario(geometry=geometry, seed=seed, alpha=alpha)
    window: WindowPolicy = AdaptiveWindow() if window_radius is None else FixedWindow(window_radius)
    value, _ = _grow_far_field(
        sc,
        np.arange(trials, dtype=np.int64),
        np.zeros(trials, dtype=np.int64),
        window,
        MonteCarloConfig().max_doublings,
        lambda interference: float(np.mean(np.exp(-s * interference))),
        first_ring=0,
        threads=threads,
    )
    return value
