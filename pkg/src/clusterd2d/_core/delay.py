"""Mean service delay of the D2D and base-station queues and their stability conditions.

The D2D queue of a cluster is a multiclass single-server queue (one class per content) whose mean queue size is
approximated by ``rho / (1 - rho)``; the base-station queue is M/M/1 with arrival rate ``eta * zeta_b``. With
``C = log2(1 + theta) / S``, ``A = sum_i q_i a_i / Y_i`` and ``B = sum_i q_i (1 - a_i)``, where ``a_i`` is the
availability of content ``i``, the weighted delay is

    T = A / (W_d C - zeta A) + B / (W_b C Y_b - eta zeta B).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from clusterd2d._core.caching import ArrivalSplit, split_arrivals
from clusterd2d._exceptions import UnstableQueueError
from clusterd2d._types import ArrayLike
from clusterd2d._utils import _check_non_negative, _parse_list_into_array
from clusterd2d.models import ContentModel, CoverageTable, NetworkGeometry, RadioConfig, TrafficModel

__all__ = [
    "DelaySummary",
    "Stability",
    "bs_delay",
    "d2d_delay",
    "pollaczek_khinchine_sojourn",
    "service_rates",
    "stability_check",
    "summarize_delay",
    "weighted_delay",
]

# relative slack on W_d + W_b <= W
_BANDWIDTH_SLACK = 1e-12


@dataclass(frozen=True)
class DelaySummary:
    """
    Delay report of one operating point.

    Attributes
    ----------
    zeta_d, zeta_b
        Request rates per client served over D2D and by the base station, per s.
    rho_d, rho_b
        Traffic intensities of the D2D queue and of the base-station queue.
    t_d, t_b
        Mean delays of a D2D-served and of a BS-served request, in s; ``inf`` when the queue is unstable and ``nan``
        when it carries no traffic.
    t_weighted
        Mean delay of a request, in s.
    stable_d, stable_b
        Stability of the two queues.
    margin_d, margin_b
        Slack of the two stability conditions, in requests per s.
    w_d, w_b
        Bandwidth of the two tiers, in Hz.
    """

    zeta_d: float
    zeta_b: float
    rho_d: float
    rho_b: float
    t_d: float
    t_b: float
    t_weighted: float
    stable_d: bool
    stable_b: bool
    margin_d: float
    margin_b: float
    w_d: float
    w_b: float

    @property
    def stable(self) -> bool:
        return self.stable_d and self.stable_b


class Stability(NamedTuple):
    """Stability of both queues with the slack of each condition (right-hand minus left-hand side)."""

    stable_d: bool
    stable_b: bool
    margin_d: float
    margin_b: float


class _DelayTerms(NamedTuple):
    a: float
    b: float
    served_d2d: float
    cap_d: float
    cap_b: float
    zeta: float
    eta: float

    @property
    def load_d(self) -> float:
        # zeta * A, kept finite at zeta = 0
        return self.zeta * self.a if self.zeta > 0 else 0.0

    @property
    def load_b(self) -> float:
        return self.eta * self.zeta * self.b

    def total_delay(self) -> float:
        return _queue_term(self.a, self.cap_d, self.load_d) + _queue_term(self.b, self.cap_b, self.load_b)


def _check_split(w_d: float, radio: RadioConfig) -> float:
    if not 0 <= w_d <= radio.bandwidth * (1 + _BANDWIDTH_SLACK):
        raise ValueError(f"The D2D bandwidth must lie in [0, W={radio.bandwidth:g}] Hz, got {w_d:g}.")
    return max(radio.bandwidth - w_d, 0.0)


def _delay_terms(
    content: ContentModel,
    traffic: TrafficModel,
    geometry: NetworkGeometry,
    radio: RadioConfig,
    coverage: CoverageTable,
    w_d: float,
) -> _DelayTerms:
    upsilon = np.asarray(coverage.upsilon_d)
    if upsilon.shape != (content.n_files,):
        raise ValueError(f"The coverage table holds {upsilon.size} contents, the library {content.n_files}.")
    _check_split(w_d, radio)
    return _raw_terms(
        content.q, content.b, upsilon, coverage.upsilon_b, geometry.active_per_cluster, traffic, radio, w_d
    )


def _raw_terms(
    q: ArrayLike,
    b: ArrayLike,
    upsilon_d: ArrayLike,
    upsilon_b: float,
    active_per_cluster: float,
    traffic: TrafficModel,
    radio: RadioConfig,
    w_d: float,
) -> _DelayTerms:
    # no validation of b: also evaluated at finite-difference points off the constraint sum(b) == M
    available = -np.expm1(-b * active_per_cluster)
    weight = q * available
    if np.any((weight > 0) & (upsilon_d == 0)):
        a = np.inf
    else:
        a = float(np.sum(np.divide(weight, upsilon_d, out=np.zeros_like(weight), where=weight > 0)))
    c = radio.requests_per_hz
    return _DelayTerms(
        a=a,
        b=float(np.sum(q * np.exp(-b * active_per_cluster))),
        served_d2d=float(weight.sum()),
        cap_d=w_d * c,
        cap_b=max(radio.bandwidth - w_d, 0.0) * c * upsilon_b,
        zeta=traffic.zeta,
        eta=traffic.eta,
    )


def _stability(terms: _DelayTerms) -> Stability:
    load_d = terms.load_d
    load_b = terms.load_b
    margin_d = terms.cap_d - load_d
    margin_b = terms.cap_b / terms.eta - terms.zeta * terms.b
    return Stability(
        stable_d=bool(np.isfinite(terms.a) and (load_d == 0 or margin_d > 0)),
        stable_b=bool(load_b == 0 or margin_b > 0),
        margin_d=float(margin_d),
        margin_b=float(margin_b),
    )


def _queue_term(weight: float, capacity: float, load: float) -> float:
    # weight / (capacity - load): zero without traffic, infinite past the pole
    if weight == 0:
        return 0.0
    if capacity - load <= 0:
        return np.inf
    return weight / (capacity - load)


def service_rates(
    coverage: CoverageTable, w_d: float, w_b: float, radio: RadioConfig
) -> tuple[ArrayLike, float]:
    """
    Service rates of the D2D classes and of the base station, in requests per s.

    A link of bandwidth ``w`` and rate coverage ``Y`` serves ``w log2(1 + theta) Y / S`` requests per s.
    """
    _check_non_negative("w_d", w_d)
    _check_non_negative("w_b", w_b)
    if w_d + w_b > radio.bandwidth * (1 + _BANDWIDTH_SLACK):
        raise ValueError(f"The split {w_d:g} + {w_b:g} Hz exceeds the total bandwidth {radio.bandwidth:g} Hz.")
    c = radio.requests_per_hz
    return w_d * c * np.asarray(coverage.upsilon_d), w_b * c * coverage.upsilon_b


def d2d_delay(split: ArrivalSplit, mu_i: Union[ArrayLike, list[float]]) -> float:
    """
    Mean delay of a D2D-served request, ``T_d = rho_d / ((1 - rho_d) zeta_d)`` with ``rho_d = sum_i zeta_i / mu_i``.

    Raises
    ------
    UnstableQueueError
        If ``rho_d >= 1``.
    """
    zeta_i = np.asarray(split.zeta_i, dtype=float)
    mu_i = _parse_list_into_array(mu_i).ravel()
    if mu_i.shape != zeta_i.shape:
        raise ValueError(f"Got {mu_i.size} service rates for {zeta_i.size} classes.")
    if split.zeta_d <= 0:
        raise ValueError("The D2D queue carries no traffic: its mean delay is undefined.")
    if np.any((zeta_i > 0) & (mu_i <= 0)):
        raise UnstableQueueError("d2d", np.inf, 1.0)
    rho = float(np.sum(np.divide(zeta_i, mu_i, out=np.zeros_like(zeta_i), where=zeta_i > 0)))
    if rho >= 1:
        raise UnstableQueueError("d2d", rho, 1.0)
    return rho / (1.0 - rho) / split.zeta_d


def bs_delay(split: ArrivalSplit, mu_b: float, eta: float) -> float:
    """
    Mean delay of a BS-served request, ``T_b = 1 / (mu_b - eta zeta_b)``.

    Raises
    ------
    UnstableQueueError
        If ``eta zeta_b >= mu_b``.
    """
    load = eta * split.zeta_b
    if load >= mu_b:
        raise UnstableQueueError("bs", load, mu_b)
    return 1.0 / (mu_b - load)


def stability_check(
    content: ContentModel,
    traffic: TrafficModel,
    geometry: NetworkGeometry,
    radio: RadioConfig,
    coverage: CoverageTable,
    w_d: float,
) -> Stability:
    """
    Sufficient stability conditions of the two queues.

    The D2D queue needs ``zeta A < W_d C`` and the base-station queue ``eta zeta_b < mu_b``. Margins are
    ``W_d C - zeta A`` and ``mu_b / eta - zeta_b``.
    """
    return _stability(_delay_terms(content, traffic, geometry, radio, coverage, w_d))


def summarize_delay(
    content: ContentModel,
    traffic: TrafficModel,
    geometry: NetworkGeometry,
    radio: RadioConfig,
    coverage: CoverageTable,
    w_d: float,
) -> DelaySummary:
    """Delay report of an operating point; unstable queues get infinite delays instead of an error."""
    terms = _delay_terms(content, traffic, geometry, radio, coverage, w_d)
    stability = _stability(terms)
    load_d = terms.load_d
    load_b = terms.load_b
    d2d_part = _queue_term(terms.a, terms.cap_d, load_d)
    bs_part = _queue_term(terms.b, terms.cap_b, load_b)
    split = split_arrivals(traffic, content, geometry)

    if terms.served_d2d == 0:
        t_d = np.nan
    else:
        t_d = d2d_part / terms.served_d2d
    if terms.b == 0:
        t_b = 1.0 / terms.cap_b if terms.cap_b > 0 else np.inf
    else:
        t_b = bs_part / terms.b
    return DelaySummary(
        zeta_d=split.zeta_d,
        zeta_b=split.zeta_b,
        rho_d=_intensity(load_d, terms.cap_d),
        rho_b=_intensity(load_b, terms.cap_b),
        t_d=float(t_d),
        t_b=float(t_b),
        t_weighted=float(d2d_part + bs_part),
        stable_d=stability.stable_d,
        stable_b=stability.stable_b,
        margin_d=stability.margin_d,
        margin_b=stability.margin_b,
        w_d=float(w_d),
        w_b=max(radio.bandwidth - w_d, 0.0),
    )


def _intensity(load: float, capacity: float) -> float:
    if load == 0:
        return 0.0
    return load / capacity if capacity > 0 else np.inf


def weighted_delay(
    content: ContentModel,
    traffic: TrafficModel,
    geometry: NetworkGeometry,
    radio: RadioConfig,
    coverage: CoverageTable,
    w_d: float,
) -> tuple[float, DelaySummary]:
    """
    Mean delay of a request, weighted over the D2D and the base-station tiers.

    Parameters
    ----------
    content
        Content model: popularity and caching vector.
    traffic
        Request rate per client and clients per base station.
    geometry
        Network geometry; ``p n_bar`` sets the availability of the cached contents.
    radio
        Radio configuration: total bandwidth, threshold and mean content size.
    coverage
        D2D coverage of every content and the base-station coverage.
    w_d
        Bandwidth of the D2D tier, in Hz; the base stations get the rest.

    Returns
    -------
    The weighted delay, in s, and the full delay report.

    Raises
    ------
    UnstableQueueError
        If either queue is unstable; the D2D queue is checked first.
    """
    summary = summarize_delay(content, traffic, geometry, radio, coverage, w_d)
    if not summary.stable_d:
        raise UnstableQueueError("d2d", summary.rho_d, 1.0)
    if not summary.stable_b:
        mu_b = summary.w_b * radio.requests_per_hz * coverage.upsilon_b
        raise UnstableQueueError("bs", traffic.eta * summary.zeta_b, mu_b)
    return summary.t_weighted, summary


def pollaczek_khinchine_sojourn(
    zeta_i: Union[ArrayLike, list[float]], mu_i: Union[ArrayLike, list[float]]
) -> float:
    """
    Exact mean sojourn time of the multiclass FIFO queue.

    The merged arrivals are Poisson and the service time is a mixture of exponentials, so the queue is M/G/1 and the
    Pollaczek-Khinchine formula applies: ``W = lambda E[S^2] / (2 (1 - rho))``, sojourn ``W + E[S]``.
    """
    zeta_i = _parse_list_into_array(zeta_i).ravel()
    mu_i = _parse_list_into_array(mu_i).ravel()
    if zeta_i.shape != mu_i.shape:
        raise ValueError(f"Got {mu_i.size} service rates for {zeta_i.size} classes.")
    if np.any(zeta_i < 0) or np.any(mu_i <= 0):
        raise ValueError("Arrival rates must be non-negative and service rates positive.")
    rate = float(zeta_i.sum())
    if rate == 0:
        raise ValueError("The queue carries no traffic: its mean sojourn time is undefined.")
    mix = zeta_i / rate
    rho = float(np.sum(zeta_i / mu_i))
    if rho >= 1:
        raise UnstableQueueError("d2d", rho, 1.0)
    mean_service = float(np.sum(mix / mu_i))
    second_moment = float(np.sum(mix * 2.0 / mu_i**2))
    return rate * second_moment / (2.0 * (1.0 - rho)) + mean_service
