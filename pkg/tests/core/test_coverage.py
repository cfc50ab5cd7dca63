from __future__ import annotations

import math

import numpy as np
import pytest
from clusterd2d import (
    NoProviderError,
    availability,
    bs_coverage,
    coverage_table,
    d2d_coverage,
    d2d_coverage_vector,
    estimate_inter_laplace,
    estimate_intra_laplace,
    hyp2f1,
    inter_cluster_laplace,
    intra_cluster_laplace,
    nearest_provider_cdf,
    nearest_provider_pdf,
)
from clusterd2d.models import ContentModel, NetworkGeometry, QuadratureConfig, RadioConfig
from scipy import integrate


class TestHypergeometric:
    @pytest.mark.parametrize("theta", [0.1, 1.0, 3.1622776601683795, 10.0])
    def test_closed_form_at_alpha_4(self, theta: float) -> None:
        # delta = 1/2: 1 + sqrt(theta) arctan(sqrt(theta))
        expected = 1.0 + math.sqrt(theta) * math.atan(math.sqrt(theta))
        assert hyp2f1(1.0, -0.5, 0.5, -theta) == pytest.approx(expected, rel=1e-9)

    def test_origin(self) -> None:
        assert hyp2f1(1.0, -0.5, 0.5, 0.0) == 1.0

    @pytest.mark.parametrize(
        "args", [(2.0, -0.5, 0.5, -1.0), (1.0, -0.5, 0.7, -1.0), (1.0, -1.5, 2.5, -1.0), (1.0, -0.5, 0.5, 0.5)]
    )
    def test_outside_family(self, args: tuple[float, float, float, float]) -> None:
        with pytest.raises(NotImplementedError):
            hyp2f1(*args)


class TestBsCoverage:
    def test_reference_value(self) -> None:
        assert bs_coverage(1.0, 4.0) == pytest.approx(1.0 / (1.0 + math.pi / 4.0), rel=1e-9)

    def test_decreases_with_threshold(self) -> None:
        values = [bs_coverage(theta, 3.5) for theta in (0.1, 1.0, 10.0)]
        assert values[0] > values[1] > values[2]
        assert all(0 < v < 1 for v in values)

    def test_invalid(self) -> None:
        with pytest.raises(ValueError):
            bs_coverage(0.0, 4.0)
        with pytest.raises(ValueError):
            bs_coverage(1.0, 2.0)


def test_availability(geometry: NetworkGeometry) -> None:
    assert availability(0.0, geometry) == 0.0
    assert availability(1.0, geometry) == pytest.approx(1.0 - math.exp(-10.0))
    np.testing.assert_allclose(availability(np.array([0.1, 0.2]), geometry), -np.expm1(-np.array([1.0, 2.0])))


class TestNearestProvider:
    @pytest.mark.parametrize("b_i", [0.05, 0.5, 1.0])
    def test_pdf_mass_is_availability(self, geometry: NetworkGeometry, quad: QuadratureConfig, b_i: float) -> None:
        h = np.linspace(0.0, 120.0, 2_401)
        pdf = nearest_provider_pdf(h, b_i, geometry, quad)
        assert np.all(pdf >= 0)
        mass = integrate.trapezoid(pdf, h)
        assert mass == pytest.approx(availability(b_i, geometry), abs=1e-4)

    def test_cdf_limits(self, geometry: NetworkGeometry, quad: QuadratureConfig) -> None:
        assert nearest_provider_cdf(0.0, 0.5, geometry, quad) == pytest.approx(0.0, abs=1e-9)
        assert nearest_provider_cdf(1e4, 0.5, geometry, quad) == pytest.approx(1.0 - math.exp(-5.0), abs=1e-6)
        cdf = nearest_provider_cdf(np.linspace(0.0, 80.0, 50), 0.5, geometry, quad)
        assert np.all(np.diff(cdf) >= -1e-12)

    def test_cdf_limits_with_coarse_truncation(self, geometry: NetworkGeometry) -> None:
        coarse = QuadratureConfig(tail_mass_tol=1e-3)
        assert nearest_provider_cdf(0.0, 0.5, geometry, coarse) == pytest.approx(0.0, abs=1e-12)
        assert nearest_provider_cdf(1e4, 0.5, geometry, coarse) == pytest.approx(1.0 - math.exp(-5.0), rel=1e-12)

    def test_more_caching_gives_closer_provider(self, geometry: NetworkGeometry, quad: QuadratureConfig) -> None:
        h = np.linspace(0.5, 80.0, 60)
        half = nearest_provider_cdf(h, 0.5, geometry, quad)
        full = nearest_provider_cdf(h, 1.0, geometry, quad)
        assert np.all(full >= half)
        assert full[-1] == pytest.approx(availability(1.0, geometry), abs=1e-5)

    def test_pdf_is_cdf_derivative(self, geometry: NetworkGeometry, quad: QuadratureConfig) -> None:
        h = np.array([3.0, 8.0, 15.0])
        step = 1e-3
        upper = nearest_provider_cdf(h + step, 0.5, geometry, quad)
        lower = nearest_provider_cdf(h - step, 0.5, geometry, quad)
        slope = (upper - lower) / (2 * step)
        np.testing.assert_allclose(nearest_provider_pdf(h, 0.5, geometry, quad), slope, rtol=1e-4)

    def test_no_provider(self, geometry: NetworkGeometry) -> None:
        assert nearest_provider_pdf(5.0, 0.0, geometry) == 0.0

    def test_invalid(self, geometry: NetworkGeometry) -> None:
        with pytest.raises(ValueError):
            nearest_provider_pdf(-1.0, 0.5, geometry)
        with pytest.raises(ValueError):
            nearest_provider_pdf(1.0, 1.5, geometry)


class TestLaplace:
    def test_intra_limits(self, geometry: NetworkGeometry, quad: QuadratureConfig) -> None:
        assert intra_cluster_laplace(0.0, 10.0, 0.5, geometry, quad=quad) == 1.0
        values = [intra_cluster_laplace(s, 10.0, 0.5, geometry, quad=quad) for s in (1e2, 1e4, 1e6)]
        assert 1.0 > values[0] > values[1] > values[2] > 0.0

    def test_intra_caching_removes_interferers(self, geometry: NetworkGeometry, quad: QuadratureConfig) -> None:
        # closer devices caching the content are not interferers
        assert intra_cluster_laplace(1e4, 10.0, 1.0, geometry, quad=quad) > intra_cluster_laplace(
            1e4, 10.0, 0.0, geometry, quad=quad
        )

    def test_intra_matches_simulation(self, geometry: NetworkGeometry, quad: QuadratureConfig) -> None:
        analytic = intra_cluster_laplace(1e4, 10.0, 0.5, geometry, quad=quad)
        simulated = estimate_intra_laplace(1e4, 10.0, 0.5, geometry, samples=100_000, seed=1)
        assert analytic == pytest.approx(simulated, abs=0.01)

    def test_inter_limits(self, geometry: NetworkGeometry, quad: QuadratureConfig) -> None:
        assert inter_cluster_laplace(0.0, geometry, quad=quad) == 1.0
        assert inter_cluster_laplace(1e4, NetworkGeometry(lambda_p=0.0), quad=quad) == 1.0
        sparse = inter_cluster_laplace(1e4, geometry.replace(lambda_p=10.0), quad=quad)
        dense = inter_cluster_laplace(1e4, geometry.replace(lambda_p=100.0), quad=quad)
        assert 1.0 > sparse > dense > 0.0

    @pytest.mark.slow()
    def test_inter_matches_simulation(self, geometry: NetworkGeometry, quad: QuadratureConfig) -> None:
        analytic = inter_cluster_laplace(1e4, geometry, quad=quad)
        simulated = estimate_inter_laplace(1e4, geometry, trials=2_000, seed=2)
        assert analytic == pytest.approx(simulated, abs=0.03)

    def test_invalid_argument(self, geometry: NetworkGeometry) -> None:
        with pytest.raises(ValueError):
            intra_cluster_laplace(-1.0, 10.0, 0.5, geometry)
        with pytest.raises(ValueError):
            inter_cluster_laplace(-1.0, geometry)


class TestD2DCoverage:
    def test_probability(self, geometry: NetworkGeometry, radio: RadioConfig, quad: QuadratureConfig) -> None:
        value = d2d_coverage(0.5, geometry, radio, quad)
        assert 0.0 < value < 1.0

    def test_unconditional_scales_with_availability(
        self, geometry: NetworkGeometry, radio: RadioConfig, quad: QuadratureConfig
    ) -> None:
        b_i = 0.1
        conditional = d2d_coverage(b_i, geometry, radio, quad)
        unconditional = d2d_coverage(b_i, geometry, radio, quad, normalize=False)
        assert unconditional == pytest.approx(conditional * availability(b_i, geometry), rel=1e-4)

    def test_vector_matches_scalar(self, geometry: NetworkGeometry, radio: RadioConfig, quad: QuadratureConfig) -> None:
        b = np.array([0.2, 0.6, 1.0])
        vector = d2d_coverage_vector(b, geometry, radio, quad)
        assert vector.shape == (3,)
        for b_i, value in zip(b, vector):
            assert d2d_coverage(b_i, geometry, radio, quad) == pytest.approx(value, rel=1e-4)

    def test_decreases_with_threshold(self, geometry: NetworkGeometry, quad: QuadratureConfig) -> None:
        low = d2d_coverage(0.5, geometry, RadioConfig.from_db(-5.0), quad)
        high = d2d_coverage(0.5, geometry, RadioConfig.from_db(5.0), quad)
        assert low > high

    def test_decreases_with_cluster_density(self, geometry: NetworkGeometry, radio: RadioConfig) -> None:
        sparse = d2d_coverage(1.0, geometry.replace(lambda_p=10.0), radio)
        dense = d2d_coverage(1.0, geometry.replace(lambda_p=100.0), radio)
        assert sparse > dense

    def test_zero_caching_limit(self, geometry: NetworkGeometry, radio: RadioConfig, quad: QuadratureConfig) -> None:
        limit = d2d_coverage_vector([0.0], geometry, radio, quad)[0]
        near_zero = d2d_coverage(1e-6, geometry, radio, quad)
        assert limit == pytest.approx(near_zero, abs=1e-4)

    @pytest.mark.slow()
    @pytest.mark.parametrize("b_i", [0.5, 1.0])
    def test_unconditional_coverage_has_one_peak_in_p(
        self, geometry: NetworkGeometry, radio: RadioConfig, quad: QuadratureConfig, b_i: float
    ) -> None:
        p_grid = np.round(np.arange(1, 11) * 0.1, 10)
        values = np.array([d2d_coverage(b_i, geometry.replace(p=p), radio, quad, normalize=False) for p in p_grid])
        peak = int(np.argmax(values))
        assert np.all(np.diff(values[: peak + 1]) > 0)
        assert np.all(np.diff(values[peak:]) < 0)
        if b_i == 0.5:
            assert 0 < peak < len(p_grid) - 1

    def test_no_provider(self, geometry: NetworkGeometry, radio: RadioConfig) -> None:
        with pytest.raises(NoProviderError):
            d2d_coverage(0.0, geometry, radio)
        with pytest.raises(NoProviderError):
            d2d_coverage(0.5, geometry.replace(p=0.0), radio)

    def test_line_of_sight_is_simulation_only(self, geometry: NetworkGeometry) -> None:
        radio = RadioConfig(channel_mode="nakagami_los_intra", alpha_los=2.09, nakagami_m=3.0)
        with pytest.raises(ValueError, match="Monte Carlo"):
            d2d_coverage(0.5, geometry, radio)


def test_coverage_table(geometry: NetworkGeometry, radio: RadioConfig, quad: QuadratureConfig) -> None:
    content = ContentModel.from_zipf(4, 2, 1.0, b=[0.8, 0.6, 0.4, 0.2])
    table = coverage_table(content, geometry, radio, quad)
    np.testing.assert_allclose(table.upsilon_d, d2d_coverage_vector(content.b, geometry, radio, quad))
    assert table.upsilon_b == pytest.approx(bs_coverage(1.0, 4.0))
