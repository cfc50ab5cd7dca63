"""Parameter records shared by the analytic, Monte Carlo, queueing and optimization code."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any, Literal, Optional, Union, get_args

import numpy as np

from clusterd2d._types import ArrayLike
from clusterd2d._utils import (
    _check_non_negative,
    _check_positive,
    _check_probability,
    _check_seed,
    _parse_list_into_array,
    db_to_linear,
    linear_to_db,
)

ProcessKind = Literal["tcp", "mcp", "ppp"]
ProviderSelection = Literal["nearest", "best_channel"]
ChannelMode = Literal["rayleigh_nlos", "nakagami_los_intra"]
IntraModel = Literal["geometric", "decoupled"]
CachingPolicy = Literal["uniform", "zipf_top_m", "zipf_proportional"]

# densities are given per km^2, distances in m
PER_KM2_TO_PER_M2 = 1e-6
SUM_TOL = 1e-9

__all__ = [
    "AdaptiveWindow",
    "CachingPolicy",
    "ChannelMode",
    "ContentModel",
    "CoverageTable",
    "DesConfig",
    "ExperimentConfig",
    "FigureId",
    "FixedWindow",
    "IntraModel",
    "MonteCarloConfig",
    "NetworkGeometry",
    "ProcessKind",
    "ProviderSelection",
    "QuadratureConfig",
    "RadioConfig",
    "SolverConfig",
    "TrafficModel",
    "WindowPolicy",
    "check_caching_vector",
]


def _check_choice(name: str, value: Any, choices: Any) -> None:
    allowed = get_args(choices)
    if value not in allowed:
        raise ValueError(f"`{name}` must be one of {allowed}, got {value!r}.")


def _read_only(array: ArrayLike) -> ArrayLike:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class NetworkGeometry:
    """Spatial layout of the clustered network.

    Attributes
    ----------
    lambda_p
        Density of cluster centres, per km^2. Zero is accepted and means an isolated cluster.
    sigma
        Standard deviation of the Gaussian scattering of devices around their cluster centre, in m.
    n_bar
        Mean number of devices per cluster.
    p
        Access probability: the probability that a device is active in a time slot.
    lambda_b
        Density of base stations, per km^2.
    """

    lambda_p: float = 50.0
    sigma: float = 10.0
    n_bar: float = 20.0
    p: float = 0.5
    lambda_b: float = 10.0

    def __post_init__(self) -> None:
        _check_non_negative("lambda_p", self.lambda_p)
        _check_positive("sigma", self.sigma)
        _check_positive("n_bar", self.n_bar)
        _check_probability("p", self.p)
        _check_positive("lambda_b", self.lambda_b)

    @property
    def lambda_p_m2(self) -> float:
        """Cluster density per m^2."""
        return self.lambda_p * PER_KM2_TO_PER_M2

    @property
    def lambda_b_m2(self) -> float:
        """Base-station density per m^2."""
        return self.lambda_b * PER_KM2_TO_PER_M2

    @property
    def eta(self) -> float:
        """Mean number of clients per base station."""
        return self.lambda_p / self.lambda_b

    @property
    def active_per_cluster(self) -> float:
        """Mean number of active devices per cluster, ``p * n_bar``."""
        return self.p * self.n_bar

    def replace(self, **changes: Any) -> NetworkGeometry:
        """Return a copy with some fields changed."""
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class RadioConfig:
    """Link-level parameters.

    Attributes
    ----------
    bandwidth
        Total bandwidth ``W`` shared by the D2D and base-station tiers, in Hz.
    theta
        SIR threshold on linear scale.
    alpha
        Path-loss exponent of non-line-of-sight links.
    mean_size
        Mean content size, in bits.
    channel_mode
        ``"rayleigh_nlos"`` for Rayleigh fading on every link, ``"nakagami_los_intra"`` for Nakagami-m line-of-sight
        links inside a cluster.
    alpha_los
        Path-loss exponent of the line-of-sight intra-cluster links.
    nakagami_m
        Nakagami shape parameter of the line-of-sight intra-cluster links.
    """

    bandwidth: float = 20e6
    theta: float = 1.0
    alpha: float = 4.0
    mean_size: float = 5e6
    channel_mode: ChannelMode = "rayleigh_nlos"
    alpha_los: Optional[float] = None
    nakagami_m: Optional[float] = None

    def __post_init__(self) -> None:
        _check_positive("bandwidth", self.bandwidth)
        _check_positive("theta", self.theta)
        _check_positive("mean_size", self.mean_size)
        if not self.alpha > 2:
            raise ValueError(f"`alpha` must be larger than 2, got {self.alpha}.")
        _check_choice("channel_mode", self.channel_mode, ChannelMode)
        if self.channel_mode == "nakagami_los_intra":
            if self.alpha_los is None or self.nakagami_m is None:
                raise ValueError("The Nakagami line-of-sight channel requires both `alpha_los` and `nakagami_m`.")
            if not self.alpha_los > 2:
                raise ValueError(f"`alpha_los` must be larger than 2, got {self.alpha_los}.")
            if not self.nakagami_m >= 1:
                raise ValueError(f"`nakagami_m` must be at least 1, got {self.nakagami_m}.")

    @classmethod
    def from_db(cls, theta_db: float, **kwargs: Any) -> RadioConfig:
        """Build a radio configuration from a threshold given in dB."""
        return cls(theta=db_to_linear(theta_db), **kwargs)

    @property
    def theta_db(self) -> float:
        return linear_to_db(self.theta)

    @property
    def spectral_efficiency(self) -> float:
        """Fixed rate per Hz of a successful link, ``log2(1 + theta)``."""
        return math.log2(1.0 + self.theta)

    @property
    def requests_per_hz(self) -> float:
        """Requests per second served per Hz of a link that is always in coverage, ``log2(1 + theta) / S``."""
        return self.spectral_efficiency / self.mean_size

    @property
    def alpha_intra(self) -> float:
        """Path-loss exponent of intra-cluster links."""
        if self.channel_mode == "nakagami_los_intra":
            return float(self.alpha_los)  # type: ignore[arg-type]
        return self.alpha

    def replace(self, **changes: Any) -> RadioConfig:
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True, eq=False)
class CoverageTable:
    """Rate coverage of every content over the D2D tier and of the base-station tier."""

    upsilon_d: ArrayLike
    upsilon_b: float

    def __post_init__(self) -> None:
        upsilon_d = _read_only(_parse_list_into_array(self.upsilon_d).ravel())
        if np.any((upsilon_d < 0) | (upsilon_d > 1)) or not np.all(np.isfinite(upsilon_d)):
            raise ValueError("Every D2D coverage probability must lie in [0, 1].")
        _check_probability("upsilon_b", self.upsilon_b)
        object.__setattr__(self, "upsilon_d", upsilon_d)
        object.__setattr__(self, "upsilon_b", float(self.upsilon_b))


@dataclass(frozen=True)
class QuadratureConfig:
    """Accuracy settings of the analytic integrals.

    Attributes
    ----------
    rel_tol, abs_tol
        Tolerances of the adaptive Gauss-Kronrod outer integrals.
    tail_mass_tol
        Probability mass left out when semi-infinite integrals over Rayleigh/Rice variables are truncated.
    order
        Gauss-Legendre nodes per panel.
    inner_panels
        Panels of the fixed inner rules (integrals nested inside an outer integrand).
    max_panels
        Cap on the number of subintervals of the adaptive integrals.
    """

    rel_tol: float = 1e-6
    abs_tol: float = 1e-8
    tail_mass_tol: float = 1e-10
    order: int = 16
    inner_panels: int = 4
    max_panels: int = 128

    def __post_init__(self) -> None:
        for name in ("rel_tol", "abs_tol", "tail_mass_tol", "order", "inner_panels", "max_panels"):
            _check_positive(name, getattr(self, name))
        if self.tail_mass_tol >= 1:
            raise ValueError(f"`tail_mass_tol` must be below 1, got {self.tail_mass_tol}.")


@dataclass(frozen=True, eq=False)
class ContentModel:
    """Content library, its popularity and the probabilistic caching vector.

    Attributes
    ----------
    n_files
        Library size.
    cache_size
        Number of files each provider caches.
    beta
        Zipf exponent of the popularity.
    q
        Request probability of each content, non-increasing.
    b
        Caching probability of each content; sums to ``cache_size``.
    """

    n_files: int
    cache_size: int
    beta: float
    q: ArrayLike
    b: ArrayLike

    def __post_init__(self) -> None:
        if self.n_files < 1:
            raise ValueError(f"The library must hold at least one file, got `n_files={self.n_files}`.")
        if not 0 <= self.cache_size <= self.n_files:
            raise ValueError(f"`cache_size` must lie in [0, n_files={self.n_files}], got {self.cache_size}.")
        _check_non_negative("beta", self.beta)
        q = _parse_list_into_array(self.q).ravel()
        if q.shape != (self.n_files,):
            raise ValueError(f"`q` must hold {self.n_files} values, got {q.size}.")
        if np.any(q < 0) or abs(q.sum() - 1.0) > SUM_TOL:
            raise ValueError("`q` must be a probability vector.")
        if np.any(np.diff(q) > SUM_TOL):
            raise ValueError("`q` must be non-increasing: contents are ranked by popularity.")
        object.__setattr__(self, "q", _read_only(q))
        object.__setattr__(self, "b", _read_only(check_caching_vector(self.b, self.cache_size, self.n_files)))

    @classmethod
    def from_zipf(
        cls, n_files: int, cache_size: int, beta: float, b: Optional[Union[ArrayLike, list[float]]] = None
    ) -> ContentModel:
        """Content model with Zipf popularity; caches the ``cache_size`` most popular files when ``b`` is omitted."""
        from clusterd2d._core.caching import zipf_popularity

        if b is None:
            b = np.zeros(n_files)
            b[:cache_size] = 1.0
        return cls(n_files=n_files, cache_size=cache_size, beta=beta, q=zipf_popularity(n_files, beta), b=b)

    def with_caching(self, b: Union[ArrayLike, list[float]]) -> ContentModel:
        """Return a copy with another caching vector."""
        return ContentModel(n_files=self.n_files, cache_size=self.cache_size, beta=self.beta, q=self.q, b=b)


def check_caching_vector(b: Union[ArrayLike, list[float]], cache_size: int, n_files: Optional[int] = None) -> ArrayLike:
    """Validate a caching vector: box ``[0, 1]`` and ``sum(b) == cache_size``.

    Returns the vector as a float array.
    """
    b = _parse_list_into_array(b).ravel()
    if n_files is not None and b.shape != (n_files,):
        raise ValueError(f"The caching vector must hold {n_files} values, got {b.size}.")
    if np.any(~np.isfinite(b)) or np.any(b < 0) or np.any(b > 1):
        raise ValueError("Caching probabilities must lie in [0, 1].")
    if abs(b.sum() - cache_size) > SUM_TOL:
        raise ValueError(f"Caching probabilities must sum to the cache size {cache_size}, got {b.sum():.12g}.")
    return b


@dataclass(frozen=True)
class TrafficModel:
    """Request traffic: ``zeta`` requests per second per client, ``eta`` clients per base station."""

    zeta: float = 0.5
    eta: float = 5.0

    def __post_init__(self) -> None:
        _check_non_negative("zeta", self.zeta)
        _check_positive("eta", self.eta)

    @classmethod
    def from_geometry(cls, zeta: float, geometry: NetworkGeometry) -> TrafficModel:
        """Traffic whose base-station load follows the mean load ``lambda_p / lambda_b``."""
        return cls(zeta=zeta, eta=geometry.eta)


@dataclass(frozen=True)
class FixedWindow:
    """Simulation window of a fixed radius, in m."""

    radius: float

    def __post_init__(self) -> None:
        _check_positive("radius", self.radius)


@dataclass(frozen=True)
class AdaptiveWindow:
    """Simulation window doubled until the estimate moves by less than ``delta``."""

    delta: float = 0.005

    def __post_init__(self) -> None:
        _check_positive("delta", self.delta)


WindowPolicy = Union[FixedWindow, AdaptiveWindow]


@dataclass(frozen=True)
class MonteCarloConfig:
    """Settings of the Monte Carlo coverage estimators.

    Attributes
    ----------
    trials
        Number of accepted trials.
    seed
        Master seed; trial ``j`` uses the sub-stream ``j`` of it.
    window
        Fixed or adaptive simulation window.
    process_kind
        ``"tcp"`` (Thomas), ``"mcp"`` (Matern) or ``"ppp"`` (Poisson, intensity ``n_bar * lambda_p``).
    ball_radius
        Radius of the Matern clusters, in m; defaults to ``sigma``.
    provider_selection
        ``"nearest"`` or ``"best_channel"``.
    condition_on_provider
        Redraw trials without any provider (conditional estimate). When ``False`` such trials count as failures.
    intra_model
        ``"geometric"`` simulates the cluster as it is; ``"decoupled"`` draws intra-cluster interferer distances
        i.i.d. Rayleigh(sqrt(2) sigma), independently of the serving link.
    max_doublings
        Cap on the number of window doublings of the adaptive window.
    """

    trials: int = 10_000
    seed: int = 0
    window: WindowPolicy = field(default_factory=AdaptiveWindow)
    process_kind: ProcessKind = "tcp"
    ball_radius: Optional[float] = None
    provider_selection: ProviderSelection = "nearest"
    condition_on_provider: bool = True
    intra_model: IntraModel = "geometric"
    max_doublings: int = 6

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError(f"At least one trial is needed, got `trials={self.trials}`.")
        _check_seed(self.seed)
        if not isinstance(self.window, (FixedWindow, AdaptiveWindow)):
            raise TypeError(f"Unknown window policy {self.window!r}.")
        _check_choice("process_kind", self.process_kind, ProcessKind)
        _check_choice("provider_selection", self.provider_selection, ProviderSelection)
        _check_choice("intra_model", self.intra_model, IntraModel)
        if self.ball_radius is not None:
            _check_positive("ball_radius", self.ball_radius)
        if self.intra_model == "decoupled" and self.process_kind != "tcp":
            raise ValueError("The decoupled intra-cluster model is defined for the Thomas cluster process only.")
        _check_non_negative("max_doublings", self.max_doublings)

    def replace(self, **changes: Any) -> MonteCarloConfig:
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class SolverConfig:
    """Settings of the caching/bandwidth optimization.

    Attributes
    ----------
    obj_tol
        Relative objective decrease below which iterations stop.
    max_outer_iters
        Cap on block coordinate descent rounds.
    barrier_mu0
        Initial barrier weight, relative to the delay at the initial point.
    barrier_shrink
        Factor applied to the barrier weight after each barrier stage.
    barrier_min
        Relative barrier weight at which the barrier stages stop.
    grad_step_tol
        Step length below which the line search gives up.
    max_inner_iters
        Cap on projected-gradient steps per barrier stage.
    fd_step
        Step of the central finite differences.
    interior_shift
        Weight of the uniform vector mixed into a boundary starting point to make it strictly interior.
    upsilon_grid_points
        Number of Chebyshev nodes of the tabulated coverage map.
    """

    obj_tol: float = 1e-6
    max_outer_iters: int = 50
    barrier_mu0: float = 1e-2
    barrier_shrink: float = 0.2
    barrier_min: float = 1e-8
    grad_step_tol: float = 1e-10
    max_inner_iters: int = 100
    fd_step: float = 1e-6
    interior_shift: float = 1e-3
    upsilon_grid_points: int = 32

    def __post_init__(self) -> None:
        for name in (
            "obj_tol",
            "max_outer_iters",
            "barrier_mu0",
            "barrier_min",
            "grad_step_tol",
            "max_inner_iters",
            "fd_step",
            "interior_shift",
        ):
            _check_positive(name, getattr(self, name))
        if not 0 < self.barrier_shrink < 1:
            raise ValueError(f"`barrier_shrink` must lie in (0, 1), got {self.barrier_shrink}.")
        if not 0 < self.interior_shift < 1:
            raise ValueError(f"`interior_shift` must lie in (0, 1), got {self.interior_shift}.")
        if self.upsilon_grid_points < 8:
            raise ValueError(f"`upsilon_grid_points` must be at least 8, got {self.upsilon_grid_points}.")


@dataclass(frozen=True)
class DesConfig:
    """Settings of the discrete-event queue simulation."""

    horizon_requests: int = 1_000_000
    warmup_requests: int = 10_000
    seed: int = 0
    n_batches: int = 20

    def __post_init__(self) -> None:
        if not self.horizon_requests > self.warmup_requests >= 0:
            raise ValueError(
                f"Need horizon_requests > warmup_requests >= 0, got {self.horizon_requests} and "
                f"{self.warmup_requests}."
            )
        _check_seed(self.seed)
        if self.n_batches < 2:
            raise ValueError(f"Batch means need at least two batches, got {self.n_batches}.")


FigureId = Literal[
    "Fig3_NearestPdf",
    "Fig4_CoverageVsP",
    "Fig5_OptBandwidth",
    "Fig6_CoverageVsSigma",
    "Fig8_Variants",
    "Fig9_DelayCompare",
    "Fig10_DelayVsGeometry",
    "Fig11_DelayVsP",
]


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved parameters of one figure run.

    The defaults are the reference operating point: W = 20 MHz, theta = 0 dB, beta = 0.5, N_f = 10, M = 1, alpha = 4,
    n_bar = 20, lambda_p = 50 per km^2, zeta = 0.5 per s, S = 5 Mbits, sigma = 10 m, lambda_b = 10 per km^2.

    Attributes
    ----------
    experiment
        Figure recipe to run; ``None`` for a bare operating point.
    geometry, radio, traffic
        Network, link and traffic parameters.
    n_files, cache_size, beta
        Content library.
    policy
        Baseline caching policy of the library.
    b_i
        Caching probability used by the single-content coverage figures.
    sweep_values
        Grid of the recipe's sweep axis.
    series
        Values of the recipe's secondary parameter (one curve each).
    seed
        Master seed of every Monte Carlo estimate and simulation.
    trials
        Monte Carlo trials per point.
    montecarlo, solver, des, quad
        Numerical settings; ``montecarlo.trials`` and ``montecarlo.seed`` are overridden by ``trials`` and ``seed``.
    output
        Output file name, relative to the output directory.
    """

    experiment: Optional[FigureId] = None
    geometry: NetworkGeometry = field(default_factory=NetworkGeometry)
    radio: RadioConfig = field(default_factory=RadioConfig)
    traffic: TrafficModel = field(default_factory=TrafficModel)
    n_files: int = 10
    cache_size: int = 1
    beta: float = 0.5
    policy: CachingPolicy = "zipf_top_m"
    b_i: float = 1.0
    sweep_values: tuple[float, ...] = ()
    series: tuple[float, ...] = ()
    seed: int = 0
    trials: int = 10_000
    montecarlo: MonteCarloConfig = field(default_factory=MonteCarloConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    des: DesConfig = field(default_factory=DesConfig)
    quad: QuadratureConfig = field(default_factory=QuadratureConfig)
    output: Optional[str] = None

    def __post_init__(self) -> None:
        if self.experiment is not None:
            _check_choice("experiment", self.experiment, FigureId)
        _check_choice("policy", self.policy, CachingPolicy)
        _check_probability("b_i", self.b_i)
        _check_seed(self.seed)
        if self.trials < 1:
            raise ValueError(f"At least one trial is needed, got `trials={self.trials}`.")
        object.__setattr__(self, "sweep_values", tuple(float(v) for v in self.sweep_values))
        object.__setattr__(self, "series", tuple(float(v) for v in self.series))
        ContentModel.from_zipf(self.n_files, self.cache_size, self.beta)

    @classmethod
    def for_figure(cls, experiment: FigureId, **changes: Any) -> ExperimentConfig:
        """Reference parameters with the overrides of a figure recipe, then ``changes``."""
        from clusterd2d.experiments import FIGURE_RECIPES

        _check_choice("experiment", experiment, FigureId)
        return FIGURE_RECIPES[experiment].configure(cls(experiment=experiment)).replace(**changes)

    @property
    def content(self) -> ContentModel:
        """Zipf library cached with the baseline policy."""
        from clusterd2d._core.caching import baseline_caching

        content = ContentModel.from_zipf(self.n_files, self.cache_size, self.beta)
        return content.with_caching(baseline_caching(self.policy, content))

    @property
    def mc(self) -> MonteCarloConfig:
        """Monte Carlo settings with the run's trial count and seed."""
        return self.montecarlo.replace(trials=self.trials, seed=self.seed)

    def replace(self, **changes: Any) -> ExperimentConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        """Nested plain-type view, with the threshold also given in dB."""
        resolved = dataclasses.asdict(self)
        resolved["radio"]["theta_db"] = self.radio.theta_db
        resolved["montecarlo"]["window_policy"] = type(self.montecarlo.window).__name__
        return resolved
