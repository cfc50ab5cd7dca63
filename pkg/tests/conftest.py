from __future__ import annotations

import pytest
from clusterd2d._core.optimize import UpsilonMap, tabulate_upsilon
from clusterd2d.models import (
    ContentModel,
    MonteCarloConfig,
    NetworkGeometry,
    QuadratureConfig,
    RadioConfig,
    TrafficModel,
)

SEED = 0

# the delay figures run here: both queues are stable with a comfortable margin at W_d = W / 2
DELAY_GEOMETRY = NetworkGeometry(lambda_p=10.0, lambda_b=2.0)
DELAY_TRAFFIC = TrafficModel(zeta=0.1, eta=5.0)


@pytest.fixture()
def geometry() -> NetworkGeometry:
    return NetworkGeometry()


@pytest.fixture()
def delay_geometry() -> NetworkGeometry:
    return DELAY_GEOMETRY


@pytest.fixture()
def radio() -> RadioConfig:
    return RadioConfig()


@pytest.fixture()
def traffic() -> TrafficModel:
    return DELAY_TRAFFIC


@pytest.fixture()
def content() -> ContentModel:
    return ContentModel.from_zipf(n_files=10, cache_size=1, beta=0.5)


@pytest.fixture()
def small_content() -> ContentModel:
    return ContentModel.from_zipf(n_files=4, cache_size=1, beta=0.8)


@pytest.fixture()
def quad() -> QuadratureConfig:
    return QuadratureConfig(rel_tol=1e-5, abs_tol=1e-7)


@pytest.fixture()
def upsilon(delay_geometry: NetworkGeometry, radio: RadioConfig, quad: QuadratureConfig) -> UpsilonMap:
    return tabulate_upsilon(delay_geometry, radio, 8, quad)


@pytest.fixture()
def mc() -> MonteCarloConfig:
    return MonteCarloConfig(trials=2_000, seed=SEED)
