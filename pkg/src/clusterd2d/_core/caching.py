"""Content popularity, probabilistic cache placement and the split of requests between the D2D and BS tiers.

Content indices are 0-based: index 0 is the most popular file.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from numpy.random import default_rng
from scipy import optimize

from clusterd2d._types import ArrayLike, IntArray
from clusterd2d._utils import _check_seed
from clusterd2d.models import CachingPolicy, ContentModel, NetworkGeometry, TrafficModel, check_caching_vector

__all__ = [
    "ArrivalSplit",
    "baseline_caching",
    "cache_from_height",
    "sample_cache",
    "split_arrivals",
    "zipf_popularity",
]


def zipf_popularity(n_files: int, beta: float) -> ArrayLike:
    """
    Zipf request probabilities ``q_i = i**-beta / sum_k k**-beta`` of a ranked library.

    Parameters
    ----------
    n_files
        Library size.
    beta
        Zipf exponent; 0 gives the uniform popularity.

    Returns
    -------
    The non-increasing popularity vector, summing to one.
    """
    if n_files < 1:
        raise ValueError(f"The library must hold at least one file, got `n_files={n_files}`.")
    if beta < 0:
        raise ValueError(f"The Zipf exponent must be non-negative, got {beta}.")
    weights = np.arange(1, n_files + 1, dtype=float) ** (-beta)
    return weights / weights.sum()


def cache_from_height(
    b: Union[ArrayLike, list[float]], cache_size: int, u: Union[float, ArrayLike]
) -> IntArray:
    """
    Contents cached by a provider that drew height ``u``.

    The caching probabilities are laid end to end, in index order, across ``cache_size`` stacked blocks of unit height.
    Block ``k`` contributes the content whose segment contains the height ``k + u``. Since no segment is longer than
    one, the ``cache_size`` selected contents are distinct, and content ``i`` is selected with probability ``b[i]``
    when ``u`` is uniform on ``[0, 1)``.

    Parameters
    ----------
    b
        Caching probabilities, in [0, 1], summing to ``cache_size``.
    cache_size
        Number of files a provider caches.
    u
        Height(s) in ``[0, 1)``.

    Returns
    -------
    Sorted content indices, of shape ``np.shape(u) + (cache_size,)``.
    """
    b = check_caching_vector(b, cache_size)
    u = np.asarray(u, dtype=float)
    if np.any((u < 0) | (u >= 1)):
        raise ValueError("Heights must lie in [0, 1).")
    if cache_size == 0:
        return np.zeros(u.shape + (0,), dtype=np.int64)
    edges = np.cumsum(b)
    # pin the last edge to the block boundary so float round-off cannot leave a gap at the top
    edges *= cache_size / edges[-1]
    heights = np.arange(cache_size) + u[..., None]
    chosen = np.searchsorted(edges, heights, side="right")
    return np.minimum(chosen, np.flatnonzero(b > 0)[-1]).astype(np.int64)


def sample_cache(
    b: Union[ArrayLike, list[float]], cache_size: int, seed: int, size: Optional[int] = None
) -> IntArray:
    """
    Draw the cache content of a provider.

    Parameters
    ----------
    b
        Caching probabilities, in [0, 1], summing to ``cache_size``.
    cache_size
        Number of files a provider caches.
    seed
        Seed of the uniform height.
    size
        Number of independent caches; ``None`` draws a single one.

    Returns
    -------
    ``cache_size`` distinct sorted content indices, or an array of shape ``(size, cache_size)``.
    """
    rng = default_rng(_check_seed(seed))
    return cache_from_height(b, cache_size, rng.random(size))


@dataclass(frozen=True, eq=False)
class ArrivalSplit:
    """Request rates, per second and per client, served over the D2D tier (per content) and by the base station."""

    zeta_d: float
    zeta_b: float
    zeta_i: ArrayLike

    @property
    def zeta(self) -> float:
        return self.zeta_d + self.zeta_b


def split_arrivals(traffic: TrafficModel, content: ContentModel, geometry: NetworkGeometry) -> ArrivalSplit:
    """
    Split the request rate of a client between its cluster and its base station.

    A request for content ``i`` is served over D2D when an active provider of ``i`` exists in the cluster, which
    happens with probability ``1 - exp(-b_i p n_bar)``.
    """
    available = -np.expm1(-content.b * geometry.active_per_cluster)
    zeta_i = traffic.zeta * content.q * available
    zeta_d = float(zeta_i.sum())
    return ArrivalSplit(zeta_d=zeta_d, zeta_b=traffic.zeta - zeta_d, zeta_i=zeta_i)


def _zipf_proportional(q: ArrayLike, cache_size: int) -> ArrayLike:
    n_files = q.size
    if cache_size == n_files:
        return np.ones(n_files)
    if cache_size == 0:
        return np.zeros(n_files)

    def excess(level: float) -> float:
        return float(np.minimum(1.0, level * q).sum() - cache_size)

    level = optimize.brentq(excess, 0.0, 1.0 / q.min(), xtol=1e-15, rtol=4 * np.finfo(float).eps)
    b = np.minimum(1.0, level * q)
    free = b < 1.0
    b[free] *= (cache_size - np.count_nonzero(~free)) / b[free].sum()
    return np.minimum(b, 1.0)


def baseline_caching(policy: CachingPolicy, content: ContentModel) -> ArrayLike:
    """
    Caching vector of a baseline policy.

    Parameters
    ----------
    policy
        ``"uniform"``: every file with probability ``M / N_f``. ``"zipf_top_m"``: the ``M`` most popular files.
        ``"zipf_proportional"``: probabilities proportional to the popularity, clipped at one.
    content
        Content model supplying the library size, cache size and popularity.

    Returns
    -------
    The caching vector.
    """
    n_files, cache_size = content.n_files, content.cache_size
    if policy == "uniform":
        b = np.full(n_files, cache_size / n_files)
    elif policy == "zipf_top_m":
        b = np.zeros(n_files)
        b[:cache_size] = 1.0
    elif policy == "zipf_proportional":
        b = _zipf_proportional(np.asarray(content.q), cache_size)
    else:
        raise ValueError(f"Unknown caching policy {policy!r}.")
    return check_caching_vector(b, cache_size, n_files)
