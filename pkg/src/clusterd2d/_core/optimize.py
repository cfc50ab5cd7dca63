"""Joint optimization of the caching vector and of the bandwidth split.

The bandwidth subproblem has a closed-form solution; the caching subproblem is solved numerically with a log-barrier
and projected gradient steps. Both alternate in a block coordinate descent.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Union

import numpy as np
import pandas as pd
from scipy import interpolate, optimize

from clusterd2d._core.caching import baseline_caching
from clusterd2d._core.coverage import bs_coverage, d2d_coverage_vector
from clusterd2d._core.delay import _delay_terms, _DelayTerms, _raw_terms
from clusterd2d._exceptions import InfeasibleError
from clusterd2d._logging import logger
from clusterd2d._types import ArrayLike
from clusterd2d._utils import _chebyshev_lobatto, _parse_list_into_array
from clusterd2d.models import (
    CachingPolicy,
    ContentModel,
    CoverageTable,
    NetworkGeometry,
    QuadratureConfig,
    RadioConfig,
    SolverConfig,
    TrafficModel,
    check_caching_vector,
)

__all__ = [
    "CachingSolution",
    "OptimizationResult",
    "UpsilonMap",
    "bandwidth_line_search",
    "bcd_optimize",
    "brute_force_optimize",
    "feasible_baseline",
    "optimal_bandwidth",
    "optimize_caching",
    "tabulate_upsilon",
]

_ARMIJO = 1e-4
_BASELINE_ORDER: tuple[CachingPolicy, ...] = ("zipf_top_m", "zipf_proportional", "uniform")
_FEASIBILITY = "zeta A / C + eta zeta B / (C Y_b) < W"


@dataclass(frozen=True, eq=False)
class UpsilonMap:
    """
    Tabulated D2D coverage as a function of the caching probability.

    The coverage of a content depends on the caching vector only through its own probability, so one monotone
    interpolant serves every content.

    Attributes
    ----------
    nodes
        Caching probabilities of the table, increasing, from 0 to 1.
    values
        Coverage at the nodes.
    upsilon_b
        Base-station coverage of the same radio configuration.
    """

    nodes: ArrayLike
    values: ArrayLike
    upsilon_b: float
    _interpolant: interpolate.PchipInterpolator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        nodes = _parse_list_into_array(self.nodes).ravel()
        values = np.maximum.accumulate(_parse_list_into_array(self.values).ravel())
        if nodes.shape != values.shape or nodes.size < 2 or np.any(np.diff(nodes) <= 0):
            raise ValueError("The table needs at least two strictly increasing nodes, one value per node.")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_interpolant", interpolate.PchipInterpolator(nodes, values, extrapolate=False))

    def __call__(self, b: Union[float, ArrayLike]) -> Union[float, ArrayLike]:
        b = np.clip(np.asarray(b, dtype=float), self.nodes[0], self.nodes[-1])
        out = np.where(b >= self.nodes[-1], self.values[-1], self._interpolant(b))
        out = np.clip(out, 0.0, 1.0)
        return float(out) if out.ndim == 0 else out

    def coverage(self, b: ArrayLike) -> CoverageTable:
        """Coverage table of a caching vector."""
        return CoverageTable(upsilon_d=self(b), upsilon_b=self.upsilon_b)


@lru_cache(maxsize=32)
def tabulate_upsilon(
    geometry: NetworkGeometry,
    radio: RadioConfig,
    grid_points: int = 32,
    quad: QuadratureConfig = QuadratureConfig(),
) -> UpsilonMap:
    """
    Tabulate the D2D coverage on Chebyshev-Lobatto nodes of ``[0, 1]``.

    Parameters
    ----------
    geometry
        Network geometry.
    radio
        Radio configuration.
    grid_points
        Number of nodes, at least 8.
    quad
        Quadrature settings of the coverage integrals.

    Returns
    -------
    The monotone interpolated map. Results are memoized and shared read-only.
    """
    if grid_points < 8:
        raise ValueError(f"At least 8 grid points are needed, got {grid_points}.")
    nodes = _chebyshev_lobatto(grid_points)
    logger.info(f"Tabulating the D2D coverage on {grid_points} caching probabilities.")
    values = d2d_coverage_vector(nodes, geometry, radio, quad)
    return UpsilonMap(nodes=nodes, values=values, upsilon_b=bs_coverage(radio.theta, radio.alpha))


@dataclass(frozen=True, eq=False)
class _CachingProblem:
    q: ArrayLike
    active_per_cluster: float
    traffic: TrafficModel
    radio: RadioConfig
    upsilon: UpsilonMap

    @classmethod
    def build(
        cls,
        content: ContentModel,
        traffic: TrafficModel,
        geometry: NetworkGeometry,
        radio: RadioConfig,
        upsilon: UpsilonMap,
    ) -> _CachingProblem:
        return cls(content.q, geometry.active_per_cluster, traffic, radio, upsilon)

    def terms(self, b: ArrayLike, w_d: float) -> _DelayTerms:
        return _raw_terms(
            self.q, b, self.upsilon(b), self.upsilon.upsilon_b, self.active_per_cluster, self.traffic, self.radio, w_d
        )

    def delay(self, b: ArrayLike, w_d: float) -> float:
        return self.terms(b, w_d).total_delay()


def _required_bandwidth(terms: _DelayTerms, radio: RadioConfig, upsilon_b: float) -> float:
    c = radio.requests_per_hz
    return terms.load_d / c + terms.load_b / (c * upsilon_b)


def _closed_form_bandwidth(terms: _DelayTerms, radio: RadioConfig, upsilon_b: float) -> float:
    if not np.isfinite(terms.a):
        raise InfeasibleError("A cached content has zero D2D coverage", deficit=np.inf, constraint="d2d")
    w, c = radio.bandwidth, radio.requests_per_hz
    required = _required_bandwidth(terms, radio, upsilon_b)
    if required >= w:
        raise InfeasibleError("No bandwidth split keeps both queues stable", deficit=required - w, constraint=_FEASIBILITY)
    zeta, eta = terms.zeta, terms.eta
    if terms.b == 0:
        w_d = w
    elif terms.a == 0:
        w_d = 0.0
    else:
        k = math.sqrt(terms.a / (terms.b * upsilon_b))
        w_d = (zeta * terms.a + k * (w * c * upsilon_b - eta * zeta * terms.b)) / (c * (1.0 + k * upsilon_b))
    w_d = min(max(w_d, 0.0), w)
    # clamping may leave the box interior: re-check both queues
    if terms.load_d > 0 and w_d * c <= terms.load_d:
        raise InfeasibleError("The D2D queue is unstable at the clamped split", w_d * c - terms.load_d, "d2d")
    if terms.load_b > 0 and (w - w_d) * c * upsilon_b <= terms.load_b:
        raise InfeasibleError("The base-station queue is unstable at the clamped split", (w - w_d) * c, "bs")
    return float(w_d)


def optimal_bandwidth(
    content: ContentModel,
    traffic: TrafficModel,
    geometry: NetworkGeometry,
    radio: RadioConfig,
    coverage: CoverageTable,
) -> float:
    """
    Bandwidth of the D2D tier minimizing the weighted delay for a fixed caching vector.

    The delay is convex in ``W_d`` on the stable interval and its stationary point is

        W_d* = (zeta A + k (W C Y_b - eta zeta B)) / (C (1 + k Y_b)),  k = sqrt(A / (B Y_b)),

    clamped to ``[0, W]``. ``B = 0`` (every request served over D2D) gives ``W`` and ``A = 0`` gives 0.

    Raises
    ------
    InfeasibleError
        If no split keeps both queues stable, i.e. ``zeta A / C + eta zeta B / (C Y_b) >= W``.
    """
    terms = _delay_terms(content, traffic, geometry, radio, coverage, 0.0)
    return _closed_form_bandwidth(terms, radio, coverage.upsilon_b)


def bandwidth_line_search(
    content: ContentModel,
    traffic: TrafficModel,
    geometry: NetworkGeometry,
    radio: RadioConfig,
    coverage: CoverageTable,
) -> float:
    """Golden-section minimization of the weighted delay over the stable bandwidth interval."""
    terms = _delay_terms(content, traffic, geometry, radio, coverage, 0.0)
    w, c = radio.bandwidth, radio.requests_per_hz
    required = _required_bandwidth(terms, radio, coverage.upsilon_b)
    if not np.isfinite(terms.a) or required >= w:
        raise InfeasibleError("No bandwidth split keeps both queues stable", deficit=required - w, constraint=_FEASIBILITY)
    if terms.b == 0:
        return w
    if terms.a == 0:
        return 0.0
    lower = terms.load_d / c
    upper = w - terms.load_b / (c * coverage.upsilon_b)
    span = upper - lower

    def objective(w_d: float) -> float:
        return _delay_terms(content, traffic, geometry, radio, coverage, float(np.clip(w_d, 0.0, w))).total_delay()

    bracket = (lower + 1e-9 * span, 0.5 * (lower + upper), upper - 1e-9 * span)
    try:
        result = optimize.minimize_scalar(objective, bracket=bracket, method="golden", tol=1e-12)
    except ValueError:
        # the midpoint does not bracket the minimum when a pole is very weak
        result = optimize.minimize_scalar(
            objective, bounds=(bracket[0], bracket[2]), method="bounded", options={"xatol": 1e-9 * w}
        )
    return float(result.x)


@dataclass(frozen=True, eq=False)
class CachingSolution:
    """Outcome of the caching subproblem; ``stalled`` means no descent was found and ``b`` is the initial vector."""

    b: ArrayLike
    t_seconds: float
    stalled: bool
    iterations: int


def _barrier(problem: _CachingProblem, x: ArrayLike, w_d: float, mu: float) -> float:
    if np.any(x <= 0) or np.any(x >= 1):
        return np.inf
    terms = problem.terms(x, w_d)
    t = terms.total_delay()
    if not np.isfinite(t):
        return np.inf
    penalty = float(np.sum(np.log(x)) + np.sum(np.log1p(-x)))
    if terms.load_d > 0:
        penalty += math.log1p(-terms.load_d / terms.cap_d)
    if terms.load_b > 0:
        penalty += math.log1p(-terms.load_b / terms.cap_b)
    return t - mu * penalty


def _gradient(function: Callable[[ArrayLike], float], x: ArrayLike, fd_step: float) -> ArrayLike:
    """Central finite differences, one-sided next to a pole of ``function``."""
    steps = np.minimum(fd_step, 0.5 * np.minimum(x, 1.0 - x))
    center = function(x)
    grad = np.zeros_like(x)
    for i, h in enumerate(steps):
        shift = np.zeros_like(x)
        shift[i] = h
        up, down = function(x + shift), function(x - shift)
        if np.isfinite(up) and np.isfinite(down):
            grad[i] = (up - down) / (2.0 * h)
        elif np.isfinite(up):
            grad[i] = (up - center) / h
        elif np.isfinite(down):
            grad[i] = (center - down) / h
    return grad


def _max_step(x: ArrayLike, direction: ArrayLike) -> float:
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(
            direction < 0, x / -direction, np.where(direction > 0, (1.0 - x) / direction, np.inf)
        )
    return float(ratios.min())


def _descend(
    problem: _CachingProblem, b0: ArrayLike, w_d: float, solver: SolverConfig
) -> tuple[ArrayLike, float, int]:
    """Barrier descent from one feasible vector; returns the best point visited, its delay and the step count."""
    t_init = problem.delay(b0, w_d)
    n_files, cache_size = b0.size, float(b0.sum())
    x = (1.0 - solver.interior_shift) * b0 + solver.interior_shift * cache_size / n_files
    best_b, best_t = b0, t_init
    t_x = problem.delay(x, w_d)
    if t_x < best_t:
        best_b, best_t = x.copy(), t_x
    iterations = 0
    mu = solver.barrier_mu0 * t_init
    while np.isfinite(t_x) and mu >= solver.barrier_min * t_init:

        def phi(y: ArrayLike, weight: float = mu) -> float:
            return _barrier(problem, y, w_d, weight)

        value = phi(x)
        for _ in range(solver.max_inner_iters):
            grad = _gradient(phi, x, solver.fd_step)
            direction = -(grad - grad.mean())
            norm2 = float(direction @ direction)
            if math.sqrt(norm2) < solver.grad_step_tol:
                break
            step = 0.99 * _max_step(x, direction)
            accepted = False
            while step * math.sqrt(norm2) >= solver.grad_step_tol:
                candidate = x + step * direction
                candidate_value = phi(candidate)
                if candidate_value <= value - _ARMIJO * step * norm2:
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                break
            iterations += 1
            decrease = value - candidate_value
            x, value = candidate, candidate_value
            t_x = problem.delay(x, w_d)
            if t_x < best_t:
                best_b, best_t = x.copy(), t_x
            if decrease < solver.obj_tol * abs(value):
                break
        logger.debug(f"Barrier weight {mu:.3g}: T = {t_x:.6g} s after {iterations} steps.")
        mu *= solver.barrier_shrink
    return best_b, best_t, iterations


def _starting_points(b0: ArrayLike, content: ContentModel) -> list[ArrayLike]:
    """``b0``, ``b0`` reordered by popularity and the baselines, without duplicates."""
    ranked = np.empty_like(b0)
    ranked[np.argsort(-content.q, kind="stable")] = np.sort(b0)[::-1]
    starts = [b0]
    for b in [ranked] + [baseline_caching(policy, content) for policy in _BASELINE_ORDER]:
        if not any(np.allclose(b, seen, rtol=0.0, atol=1e-12) for seen in starts):
            starts.append(b)
    return starts


def optimize_caching(
    w_d: float,
    b_init: Union[ArrayLike, list[float]],
    content: ContentModel,
    traffic: TrafficModel,
    geometry: NetworkGeometry,
    radio: RadioConfig,
    upsilon: Optional[UpsilonMap] = None,
    solver: SolverConfig = SolverConfig(),
) -> CachingSolution:
    """
    Minimize the weighted delay over the caching vector at a fixed bandwidth split.

    The box ``0 < b_i < 1`` and the stability conditions enter a log-barrier whose weight shrinks geometrically from
    ``barrier_mu0 T(b0)`` to ``barrier_min T(b0)``. Each barrier stage takes projected gradient steps: the
    finite-difference gradient is projected on ``sum(b) = M`` and the step is backtracked from just inside the box.

    The descent runs from ``b_init``, from ``b_init`` reordered by popularity and from every baseline that is stable
    at ``w_d``. The best feasible point visited over all runs is returned: its delay never exceeds the one at
    ``b_init`` nor the one of any stable baseline.

    Parameters
    ----------
    w_d
        Bandwidth of the D2D tier, in Hz.
    b_init
        Feasible initial caching vector.
    content
        Content model supplying the popularity and the cache size.
    traffic
        Request traffic.
    geometry
        Network geometry.
    radio
        Radio configuration.
    upsilon
        Tabulated coverage map; tabulated from ``geometry`` and ``radio`` when omitted.
    solver
        Solver settings.

    Returns
    -------
    The solution, flagged as stalled when nothing improves on ``b_init``.
    """
    b0 = check_caching_vector(b_init, content.cache_size, content.n_files)
    if upsilon is None:
        upsilon = tabulate_upsilon(geometry, radio, solver.upsilon_grid_points)
    problem = _CachingProblem.build(content, traffic, geometry, radio, upsilon)
    t_init = problem.delay(b0, w_d)
    if not np.isfinite(t_init):
        raise ValueError("The initial caching vector is infeasible: a queue is unstable at this bandwidth split.")
    if content.cache_size in (0, content.n_files):
        return CachingSolution(b=b0, t_seconds=t_init, stalled=False, iterations=0)

    best_b, best_t, iterations = b0, t_init, 0
    for start in _starting_points(b0, content):
        if not np.isfinite(problem.delay(start, w_d)):
            continue
        b, t, steps = _descend(problem, start, w_d, solver)
        iterations += steps
        if t < best_t:
            best_b, best_t = b, t

    if not best_t < t_init:
        logger.warning("The caching subproblem found no descent direction; keeping the initial caching vector.")
        return CachingSolution(b=b0, t_seconds=t_init, stalled=True, iterations=iterations)
    return CachingSolution(b=np.clip(best_b, 0.0, 1.0), t_seconds=best_t, stalled=False, iterations=iterations)


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    """
    Outcome of the joint optimization.

    Attributes
    ----------
    b_star
        Optimized caching vector.
    w_d_star
        Optimized D2D bandwidth, in Hz.
    t_star
        Weighted delay at the optimum, in s.
    iterations
        Accepted block coordinate descent rounds.
    objective_trace
        Weighted delay after every accepted round, starting with the initial point; non-increasing.
    converged
        Whether the relative decrease fell below ``obj_tol`` before ``max_outer_iters`` rounds.
    stalled
        Whether no round improved the initial point.
    w_d_trace, b_trace
        Bandwidth and caching vector after every accepted round.
    """

    b_star: ArrayLike
    w_d_star: float
    t_star: float
    iterations: int
    objective_trace: tuple[float, ...]
    converged: bool
    stalled: bool = False
    w_d_trace: tuple[float, ...] = ()
    b_trace: tuple[ArrayLike, ...] = ()

    def to_dataframe(self) -> pd.DataFrame:
        """Trace with columns ``iter, t_seconds, w_d_hz, b_1, ..., b_Nf``."""
        table = pd.DataFrame(
            {
                "iter": np.arange(len(self.objective_trace)),
                "t_seconds": self.objective_trace,
                "w_d_hz": self.w_d_trace,
            }
        )
        b = np.vstack(self.b_trace)
        for i in range(b.shape[1]):
            table[f"b_{i + 1}"] = b[:, i]
        return table


def bcd_optimize(
    content: ContentModel,
    traffic: TrafficModel,
    geometry: NetworkGeometry,
    radio: RadioConfig,
    solver: SolverConfig = SolverConfig(),
    upsilon: Optional[UpsilonMap] = None,
    quad: QuadratureConfig = QuadratureConfig(),
) -> OptimizationResult:
    """
    Block coordinate descent over the caching vector and the bandwidth split.

    Starts from ``content.b`` and ``W_d = W / 2`` (the closed-form split when the equal split is unstable), then
    alternates :func:`optimize_caching` and :func:`optimal_bandwidth` while the weighted delay strictly improves.

    Parameters
    ----------
    content
        Content model; its caching vector is the initial point.
    traffic
        Request traffic.
    geometry
        Network geometry.
    radio
        Radio configuration.
    solver
        Solver settings.
    upsilon
        Tabulated coverage map; tabulated when omitted.
    quad
        Quadrature settings used when tabulating.

    Returns
    -------
    The optimization result.

    Raises
    ------
    InfeasibleError
        If the initial caching vector admits no stable bandwidth split.
    """
    if upsilon is None:
        upsilon = tabulate_upsilon(geometry, radio, solver.upsilon_grid_points, quad)
    problem = _CachingProblem.build(content, traffic, geometry, radio, upsilon)
    b = np.array(content.b)
    w_d = 0.5 * radio.bandwidth
    t = problem.delay(b, w_d)
    if not np.isfinite(t):
        w_d = _closed_form_bandwidth(problem.terms(b, 0.0), radio, upsilon.upsilon_b)
        t = problem.delay(b, w_d)
    t_trace, w_trace, b_trace = [t], [w_d], [b]
    converged = False
    for iteration in range(1, solver.max_outer_iters + 1):
        solution = optimize_caching(w_d, b, content, traffic, geometry, radio, upsilon, solver)
        w_new = _closed_form_bandwidth(problem.terms(solution.b, 0.0), radio, upsilon.upsilon_b)
        t_new = problem.delay(solution.b, w_new)
        if not t_new < t:
            converged = True
            break
        improvement = (t - t_new) / t
        b, w_d, t = solution.b, w_new, t_new
        t_trace.append(t)
        w_trace.append(w_d)
        b_trace.append(b)
        logger.info(f"BCD round {iteration}: T = {t:.6g} s, W_d / W = {w_d / radio.bandwidth:.4f}.")
        if improvement < solver.obj_tol:
            converged = True
            break
    return OptimizationResult(
        b_star=b,
        w_d_star=w_d,
        t_star=t,
        iterations=len(t_trace) - 1,
        objective_trace=tuple(t_trace),
        converged=converged,
        stalled=len(t_trace) == 1,
        w_d_trace=tuple(w_trace),
        b_trace=tuple(b_trace),
    )


def feasible_baseline(
    content: ContentModel,
    traffic: TrafficModel,
    geometry: NetworkGeometry,
    radio: RadioConfig,
    upsilon: UpsilonMap,
) -> tuple[CachingPolicy, ArrayLike]:
    """
    First baseline among Zipf top-M, Zipf proportional and uniform caching that admits a stable bandwidth split.

    Raises
    ------
    InfeasibleError
        If none does; the deficit is the smallest over the baselines.
    """
    problem = _CachingProblem.build(content, traffic, geometry, radio, upsilon)
    deficits = []
    for policy in _BASELINE_ORDER:
        b = baseline_caching(policy, content)
        terms = problem.terms(b, 0.0)
        deficit = _required_bandwidth(terms, radio, upsilon.upsilon_b) - radio.bandwidth
        if np.isfinite(terms.a) and deficit < 0:
            return policy, b
        deficits.append(deficit)
    raise InfeasibleError("No baseline caching vector admits a stable split", min(deficits), _FEASIBILITY)


def _delay_over_bandwidth(terms: _DelayTerms, w_d: ArrayLike, radio: RadioConfig, upsilon_b: float) -> ArrayLike:
    c = radio.requests_per_hz
    with np.errstate(divide="ignore", invalid="ignore"):
        d2d_slack = w_d * c - terms.load_d
        bs_slack = (radio.bandwidth - w_d) * c * upsilon_b - terms.load_b
        d2d = np.where(d2d_slack > 0, terms.a / d2d_slack, np.inf) if terms.a > 0 else np.zeros_like(w_d)
        bs = np.where(bs_slack > 0, terms.b / bs_slack, np.inf) if terms.b > 0 else np.zeros_like(w_d)
    return d2d + bs


def brute_force_optimize(
    content: ContentModel,
    traffic: TrafficModel,
    geometry: NetworkGeometry,
    radio: RadioConfig,
    upsilon: UpsilonMap,
    b_step: float = 0.05,
    w_points: int = 401,
) -> OptimizationResult:
    """
    Exhaustive search over caching vectors on a grid of step ``b_step`` and ``w_points`` bandwidth splits.

    Meant for small libraries (up to 6 files).
    """
    n_files, cache_size = content.n_files, content.cache_size
    if n_files > 6:
        raise ValueError(f"The exhaustive search is limited to 6 files, got {n_files}.")
    units = round(1.0 / b_step)
    if not math.isclose(units * b_step, 1.0) or not math.isclose(round(cache_size * units), cache_size * units):
        raise ValueError(f"`b_step` must divide 1, got {b_step}.")
    total = cache_size * units
    problem = _CachingProblem.build(content, traffic, geometry, radio, upsilon)
    w_grid = np.linspace(0.0, radio.bandwidth, w_points)
    best_t, best_b, best_w = np.inf, None, np.nan
    for head in itertools.product(range(units + 1), repeat=n_files - 1):
        last = total - sum(head)
        if not 0 <= last <= units:
            continue
        b = np.array(head + (last,), dtype=float) / units
        delays = _delay_over_bandwidth(problem.terms(b, 0.0), w_grid, radio, upsilon.upsilon_b)
        k = int(np.argmin(delays))
        if delays[k] < best_t:
            best_t, best_b, best_w = float(delays[k]), b, float(w_grid[k])
    if best_b is None:
        raise InfeasibleError("No grid point keeps both queues stable", np.inf, _FEASIBILITY)
    return OptimizationResult(
        b_star=best_b,
        w_d_star=best_w,
        t_star=best_t,
        iterations=0,
        objective_trace=(best_t,),
        converged=True,
        w_d_trace=(best_w,),
        b_trace=(best_b,),
    )
