from __future__ import annotations

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("clusterd2d")
except PackageNotFoundError:
    __version__ = "unknown"

__all__ = [
    "models",
    "experiments",
    "testing",
    "sample_tcp",
    "sample_mcp",
    "sample_ppp",
    "SpatialRealization",
    "availability",
    "nearest_provider_pdf",
    "nearest_provider_cdf",
    "intra_cluster_laplace",
    "inter_cluster_laplace",
    "d2d_coverage",
    "d2d_coverage_vector",
    "coverage_table",
    "hyp2f1",
    "bs_coverage",
    "CoverageEstimate",
    "NearestDistanceHistogram",
    "bernoulli_ci99",
    "estimate_d2d_coverage",
    "estimate_coverage_variant",
    "estimate_nearest_pdf",
    "estimate_intra_laplace",
    "estimate_inter_laplace",
    "zipf_popularity",
    "cache_from_height",
    "sample_cache",
    "ArrivalSplit",
    "split_arrivals",
    "baseline_caching",
    "DelaySummary",
    "Stability",
    "service_rates",
    "d2d_delay",
    "bs_delay",
    "stability_check",
    "summarize_delay",
    "weighted_delay",
    "pollaczek_khinchine_sojourn",
    "QueueSimulationResult",
    "simulate_mpsq",
    "simulate_bs_queue",
    "mpsq_approximation_report",
    "UpsilonMap",
    "tabulate_upsilon",
    "optimal_bandwidth",
    "bandwidth_line_search",
    "CachingSolution",
    "optimize_caching",
    "OptimizationResult",
    "bcd_optimize",
    "feasible_baseline",
    "brute_force_optimize",
    "read_config",
    "write_results_csv",
    "write_trace_csv",
    "write_realization_csv",
    "write_manifest",
    "run_figure",
    "run_experiment",
    "FIGURE_RECIPES",
    "ConfigError",
    "InfeasibleError",
    "NoProviderError",
    "UnstableQueueError",
]

from clusterd2d import experiments, models, testing
from clusterd2d._core.caching import (
    ArrivalSplit,
    baseline_caching,
    cache_from_height,
    sample_cache,
    split_arrivals,
    zipf_popularity,
)
from clusterd2d._core.coverage import (
    availability,
    bs_coverage,
    coverage_table,
    d2d_coverage,
    d2d_coverage_vector,
    hyp2f1,
    inter_cluster_laplace,
    intra_cluster_laplace,
    nearest_provider_cdf,
    nearest_provider_pdf,
)
from clusterd2d._core.delay import (
    DelaySummary,
    Stability,
    bs_delay,
    d2d_delay,
    pollaczek_khinchine_sojourn,
    service_rates,
    stability_check,
    summarize_delay,
    weighted_delay,
)
from clusterd2d._core.montecarlo import (
    CoverageEstimate,
    NearestDistanceHistogram,
    bernoulli_ci99,
    estimate_coverage_variant,
    estimate_d2d_coverage,
    estimate_inter_laplace,
    estimate_intra_laplace,
    estimate_nearest_pdf,
)
from clusterd2d._core.optimize import (
    CachingSolution,
    OptimizationResult,
    UpsilonMap,
    bandwidth_line_search,
    bcd_optimize,
    brute_force_optimize,
    feasible_baseline,
    optimal_bandwidth,
    optimize_caching,
    tabulate_upsilon,
)
from clusterd2d._core.point_process import SpatialRealization, sample_mcp, sample_ppp, sample_tcp
from clusterd2d._core.queue_simulation import (
    QueueSimulationResult,
    mpsq_approximation_report,
    simulate_bs_queue,
    simulate_mpsq,
)
from clusterd2d._exceptions import ConfigError, InfeasibleError, NoProviderError, UnstableQueueError
from clusterd2d._io import read_config, write_manifest, write_realization_csv, write_results_csv, write_trace_csv
from clusterd2d.experiments import FIGURE_RECIPES, run_experiment, run_figure
