from __future__ import annotations

import numpy as np
import pytest
from scipy import stats
from clusterd2d import sample_mcp, sample_ppp, sample_tcp
from clusterd2d.models import NetworkGeometry
from clusterd2d.testing import assert_realizations_are_identical

WINDOW = 1_000.0


def test_same_seed_same_realization(geometry: NetworkGeometry) -> None:
    assert_realizations_are_identical(sample_tcp(geometry, WINDOW, 3), sample_tcp(geometry, WINDOW, 3))


def test_different_seed_different_realization(geometry: NetworkGeometry) -> None:
    with pytest.raises(AssertionError):
        assert_realizations_are_identical(sample_tcp(geometry, WINDOW, 3), sample_tcp(geometry, WINDOW, 4))


def test_thomas_statistics(geometry: NetworkGeometry) -> None:
    realization = sample_tcp(geometry, WINDOW, 0)
    expected_clusters = geometry.lambda_p_m2 * np.pi * WINDOW**2
    assert abs(realization.n_clusters - expected_clusters) < 5 * np.sqrt(expected_clusters)
    assert np.all(np.linalg.norm(realization.cluster_centers, axis=1) <= WINDOW)
    assert realization.cluster_sizes.mean() == pytest.approx(geometry.n_bar, rel=0.1)
    assert realization.member_offsets.std(axis=0) == pytest.approx([geometry.sigma] * 2, rel=0.05)
    assert np.all(np.diff(realization.member_cluster) >= 0)
    assert realization.bs_locations.shape[1] == 2



def test_thomas_offsets_are_rayleigh(geometry: NetworkGeometry) -> None:
    realization = sample_tcp(geometry, 6_000.0, 5)
    distances = np.linalg.norm(realization.member_offsets, axis=1)
    assert stats.kstest(distances, stats.rayleigh(scale=geometry.sigma).cdf).statistic < 0.01

def test_members_are_grouped_by_cluster(geometry: NetworkGeometry) -> None:
    realization = sample_tcp(geometry, 300.0, 1)
    groups = realization.members_per_cluster
    assert len(groups) == realization.n_clusters
    assert [len(g) for g in groups] == realization.cluster_sizes.tolist()
    k = int(np.argmax(realization.cluster_sizes))
    first = int(np.flatnonzero(realization.member_cluster == k)[0])
    np.testing.assert_allclose(
        realization.member_positions[first], realization.cluster_centers[k] + realization.member_offsets[first]
    )


def test_matern_members_stay_in_ball(geometry: NetworkGeometry) -> None:
    realization = sample_mcp(geometry, 15.0, WINDOW, 0)
    assert realization.kind == "mcp"
    assert np.all(np.linalg.norm(realization.member_offsets, axis=1) <= 15.0)


def test_poisson_points_are_singletons() -> None:
    realization = sample_ppp(1_000.0, 500.0, 0)
    assert realization.kind == "ppp"
    assert np.all(realization.cluster_sizes == 1)
    assert np.all(realization.member_offsets == 0)
    assert realization.bs_locations.shape == (0, 2)
    expected = 1_000.0 * 1e-6 * np.pi * 500.0**2
    assert abs(realization.n_clusters - expected) < 5 * np.sqrt(expected)



@pytest.mark.slow()
def test_poisson_mean_count() -> None:
    counts = [sample_ppp(1_000.0, 500.0, seed).n_clusters for seed in range(10_000)]
    assert np.mean(counts) == pytest.approx(1_000.0 * 1e-6 * np.pi * 500.0**2, abs=5.0)

def test_to_dataframe(geometry: NetworkGeometry) -> None:
    realization = sample_tcp(geometry, 300.0, 2)
    table = realization.to_dataframe()
    assert list(table.columns) == ["kind", "cluster_id", "x_m", "y_m"]
    counts = table["kind"].value_counts()
    assert counts.get("parent", 0) == realization.n_clusters
    assert counts.get("member", 0) == len(realization.member_offsets)
    assert counts.get("bs", 0) == len(realization.bs_locations)
    assert np.all(table.loc[table["kind"] == "bs", "cluster_id"] == -1)


def test_realization_is_read_only(geometry: NetworkGeometry) -> None:
    realization = sample_tcp(geometry, 300.0, 2)
    with pytest.raises(ValueError):
        realization.cluster_centers[0, 0] = 0.0


@pytest.mark.parametrize("window", [0.0, -10.0])
def test_invalid_window(geometry: NetworkGeometry, window: float) -> None:
    with pytest.raises(ValueError, match="window_radius"):
        sample_tcp(geometry, window, 0)


def test_isolated_network() -> None:
    realization = sample_tcp(NetworkGeometry(lambda_p=0.0), 300.0, 0)
    assert realization.n_clusters == 0
    assert realization.member_offsets.shape == (0, 2)
