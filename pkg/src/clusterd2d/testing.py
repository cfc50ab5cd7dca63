from __future__ import annotations

import numpy as np
from numpy.testing import assert_array_equal
from pandas.testing import assert_frame_equal

from clusterd2d._core.montecarlo import CoverageEstimate
from clusterd2d._core.optimize import OptimizationResult, UpsilonMap
from clusterd2d._core.point_process import SpatialRealization
from clusterd2d.models import ContentModel, NetworkGeometry, RadioConfig, TrafficModel
from clusterd2d.models.models import SUM_TOL

__all__ = [
    "assert_coverage_agrees",
    "assert_feasible_optimum",
    "assert_realizations_are_identical",
]

# relative slack allowed on the monotone objective trace
_TRACE_SLACK = 1e-9


def assert_realizations_are_identical(realization0: SpatialRealization, realization1: SpatialRealization) -> None:
    """
    Assert that two realizations hold the same points, bit for bit.

    Parameters
    ----------
    realization0
        The first realization.
    realization1
        The second realization.

    Raises
    ------
    AssertionError
        If the realizations differ.
    """
    assert realization0.kind == realization1.kind
    assert realization0.window_radius == realization1.window_radius
    for name in ("cluster_centers", "member_offsets", "member_cluster", "bs_locations"):
        assert_array_equal(getattr(realization0, name), getattr(realization1, name), err_msg=name)
    assert_frame_equal(realization0.to_dataframe(), realization1.to_dataframe())


def assert_coverage_agrees(estimate: CoverageEstimate, analytic: float, slack: float = 0.01) -> None:
    """
    Assert that an analytic coverage lies within the 99% interval of a Monte Carlo estimate, widened by ``slack``.

    Raises
    ------
    AssertionError
        If ``|analytic - estimate.mean| > estimate.half_width_99 + slack``.
    """
    gap = abs(analytic - estimate.mean)
    assert gap <= estimate.half_width_99 + slack, (
        f"analytic {analytic:.4f} vs simulated {estimate.mean:.4f} +- {estimate.half_width_99:.4f}"
    )


def assert_feasible_optimum(
    result: OptimizationResult,
    content: ContentModel,
    traffic: TrafficModel,
    geometry: NetworkGeometry,
    radio: RadioConfig,
    upsilon: UpsilonMap,
) -> None:
    """
    Assert the invariants of an optimization result.

    The caching vector lies in the box and sums to the cache size, the split lies in ``[0, W]``, both queues are
    stable at the final point and the objective trace does not increase.

    Raises
    ------
    AssertionError
        If an invariant is violated.
    """
    from clusterd2d._core.delay import stability_check

    b = np.asarray(result.b_star)
    assert np.all((b >= 0) & (b <= 1)), "caching probabilities leave [0, 1]"
    assert abs(b.sum() - content.cache_size) <= SUM_TOL, f"sum(b) = {b.sum():.12g} != {content.cache_size}"
    assert 0 <= result.w_d_star <= radio.bandwidth
    stability = stability_check(
        content.with_caching(b), traffic, geometry, radio, upsilon.coverage(b), result.w_d_star
    )
    assert stability.stable_d and stability.stable_b, f"unstable optimum: {stability}"
    trace = np.asarray(result.objective_trace)
    assert np.all(np.diff(trace) <= _TRACE_SLACK * trace[:-1]), f"objective trace increases: {trace}"
