from __future__ import annotations

from clusterd2d.models.models import (
    AdaptiveWindow,
    CachingPolicy,
    ChannelMode,
    ContentModel,
    CoverageTable,
    DesConfig,
    ExperimentConfig,
    FigureId,
    FixedWindow,
    IntraModel,
    MonteCarloConfig,
    NetworkGeometry,
    ProcessKind,
    ProviderSelection,
    QuadratureConfig,
    RadioConfig,
    SolverConfig,
    TrafficModel,
    WindowPolicy,
    check_caching_vector,
)

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
