"""Spatial realizations of the clustered device layer and of the base-station layer inside a disc window."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd
from numpy.random import Generator

from clusterd2d._types import ArrayLike, IntArray
from clusterd2d._utils import _check_positive, _spawn_generator
from clusterd2d.models import NetworkGeometry, ProcessKind
from clusterd2d.models.models import PER_KM2_TO_PER_M2

__all__ = ["SpatialRealization", "sample_mcp", "sample_ppp", "sample_tcp"]

# stream layers of a realization: parents, members of cluster k, base stations
_PARENT_LAYER = 0
_MEMBER_LAYER = 1
_BS_LAYER = 2


def _uniform_in_annulus(rng: Generator, n: int, inner: float, outer: float) -> ArrayLike:
    """``n`` points uniform in the annulus ``inner < |x| <= outer`` (a disc when ``inner == 0``)."""
    radius = np.sqrt(rng.uniform(inner**2, outer**2, size=n))
    angle = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])


def _cluster_offsets(
    rng: Generator, n: int, kind: ProcessKind, sigma: float, ball_radius: Optional[float] = None
) -> ArrayLike:
    """Offsets of ``n`` cluster members from their centre: Gaussian (Thomas) or uniform in a disc (Matern)."""
    if kind == "tcp":
        return rng.normal(0.0, sigma, size=(n, 2))
    if kind == "mcp":
        return _uniform_in_annulus(rng, n, 0.0, sigma if ball_radius is None else ball_radius)
    # Poisson points are singleton clusters
    return np.zeros((n, 2))


def _poisson_disc(rng: Generator, density_m2: float, window_radius: float) -> ArrayLike:
    count = rng.poisson(density_m2 * np.pi * window_radius**2)
    return _uniform_in_annulus(rng, count, 0.0, window_radius)


@dataclass(frozen=True, eq=False)
class SpatialRealization:
    """One realization of the network in a disc window centred at the origin.

    Attributes
    ----------
    cluster_centers
        ``(n, 2)`` positions of the cluster centres, in m.
    member_offsets
        ``(m, 2)`` positions of the cluster members relative to their centre, in m. Members may lie outside the
        window; they are not clipped.
    member_cluster
        ``(m,)`` index of the cluster owning each member, non-decreasing.
    bs_locations
        ``(k, 2)`` base-station positions, in m.
    window_radius
        Radius of the window, in m.
    kind
        Process that generated the realization.
    """

    cluster_centers: ArrayLike
    member_offsets: ArrayLike
    member_cluster: IntArray
    bs_locations: ArrayLike
    window_radius: float
    kind: ProcessKind

    def __post_init__(self) -> None:
        for name in ("cluster_centers", "member_offsets", "bs_locations", "member_cluster"):
            array = np.array(getattr(self, name))
            array.setflags(write=False)
            object.__setattr__(self, name, array)
        if len(self.member_cluster) != len(self.member_offsets):
            raise ValueError("Every member must belong to exactly one cluster.")

    @property
    def n_clusters(self) -> int:
        return len(self.cluster_centers)

    @property
    def cluster_sizes(self) -> IntArray:
        """Number of members of every cluster."""
        return np.bincount(self.member_cluster, minlength=self.n_clusters)

    @property
    def members_per_cluster(self) -> list[ArrayLike]:
        """Member offsets grouped by cluster."""
        return np.split(self.member_offsets, np.cumsum(self.cluster_sizes)[:-1])

    @property
    def member_positions(self) -> ArrayLike:
        """Absolute member positions, in m."""
        return self.cluster_centers[self.member_cluster] + self.member_offsets

    def to_dataframe(self) -> pd.DataFrame:
        """Long table with columns ``kind, cluster_id, x_m, y_m``; base stations get ``cluster_id = -1``."""
        parents = pd.DataFrame(
            {
                "kind": "parent",
                "cluster_id": np.arange(self.n_clusters),
                "x_m": self.cluster_centers[:, 0],
                "y_m": self.cluster_centers[:, 1],
            }
        )
        positions = self.member_positions
        members = pd.DataFrame(
            {"kind": "member", "cluster_id": self.member_cluster, "x_m": positions[:, 0], "y_m": positions[:, 1]}
        )
        bs = pd.DataFrame(
            {
                "kind": "bs",
                "cluster_id": -1,
                "x_m": self.bs_locations[:, 0],
                "y_m": self.bs_locations[:, 1],
            }
        )
        return pd.concat([parents, members, bs], ignore_index=True)


def _sample_clustered(
    geometry: NetworkGeometry, window_radius: float, seed: int, kind: ProcessKind, ball_radius: Optional[float]
) -> SpatialRealization:
    _check_positive("window_radius", window_radius)
    centers = _poisson_disc(_spawn_generator(seed, _PARENT_LAYER), geometry.lambda_p_m2, window_radius)
    offsets, owners = [], []
    for k in range(len(centers)):
        # one stream per cluster: cluster k does not depend on how many clusters precede it
        rng = _spawn_generator(seed, _MEMBER_LAYER, k)
        size = rng.poisson(geometry.n_bar)
        offsets.append(_cluster_offsets(rng, size, kind, geometry.sigma, ball_radius))
        owners.append(np.full(size, k, dtype=np.int64))
    bs = _poisson_disc(_spawn_generator(seed, _BS_LAYER), geometry.lambda_b_m2, window_radius)
    return SpatialRealization(
        cluster_centers=centers,
        member_offsets=np.concatenate(offsets) if offsets else np.zeros((0, 2)),
        member_cluster=np.concatenate(owners) if owners else np.zeros(0, dtype=np.int64),
        bs_locations=bs,
        window_radius=float(window_radius),
        kind=kind,
    )


def sample_tcp(geometry: NetworkGeometry, window_radius: float, seed: int) -> SpatialRealization:
    """
    Sample a Thomas cluster process and the base-station layer.

    Parameters
    ----------
    geometry
        Network geometry: cluster density, scattering deviation, mean cluster size and BS density.
    window_radius
        Radius of the disc window in which cluster centres and base stations are drawn, in m.
    seed
        Master seed.

    Returns
    -------
    The realization. Cluster centres form a Poisson process in the window, each cluster holds a Poisson(``n_bar``)
    number of members scattered with a 2D Gaussian of per-axis deviation ``sigma``.
    """
    return _sample_clustered(geometry, window_radius, seed, "tcp", None)


def sample_mcp(geometry: NetworkGeometry, ball_radius: float, window_radius: float, seed: int) -> SpatialRealization:
    """Sample a Matern cluster process: as :func:`sample_tcp` with members uniform in a disc of ``ball_radius``."""
    _check_positive("ball_radius", ball_radius)
    return _sample_clustered(geometry, window_radius, seed, "mcp", ball_radius)


def sample_ppp(density: float, window_radius: float, seed: int) -> SpatialRealization:
    """
    Sample a homogeneous Poisson process of ``density`` points per km^2.

    Every point is returned as its own singleton cluster with a zero offset; the realization has no base stations.
    """
    _check_positive("density", density)
    _check_positive("window_radius", window_radius)
    points = _poisson_disc(_spawn_generator(seed, _PARENT_LAYER), density * PER_KM2_TO_PER_M2, window_radius)
    return SpatialRealization(
        cluster_centers=points,
        member_offsets=np.zeros_like(points),
        member_cluster=np.arange(len(points), dtype=np.int64),
        bs_locations=np.zeros((0, 2)),
        window_radius=float(window_radius),
        kind="ppp",
    )
