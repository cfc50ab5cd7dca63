"""Quadrature helpers: fixed composite Gauss-Legendre rules vectorised over the limits, and adaptive integrals."""

from __future__ import annotations

from functools import lru_cache
from typing import Callable, Union

import numpy as np
from scipy import integrate

from clusterd2d._logging import logger
from clusterd2d._types import ArrayLike
from clusterd2d.models import QuadratureConfig


@lru_cache(maxsize=32)
def _unit_rule(n_panels: int, order: int) -> tuple[ArrayLike, ArrayLike]:
    # nodes and weights of the composite rule on [0, 1]
    x, w = np.polynomial.legendre.leggauss(order)
    width = 1.0 / n_panels
    left = np.arange(n_panels) * width
    nodes = (left[:, None] + 0.5 * (x[None, :] + 1.0) * width).ravel()
    weights = np.tile(0.5 * w * width, n_panels)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def panel_nodes(lower: ArrayLike, upper: ArrayLike, n_panels: int, order: int) -> tuple[ArrayLike, ArrayLike]:
    """Nodes and weights of a composite Gauss-Legendre rule.

    Parameters
    ----------
    lower, upper
        Integration limits, broadcastable against each other. A trailing axis holding the nodes is appended.
    n_panels
        Number of equal-width panels.
    order
        Nodes per panel.

    Returns
    -------
    Nodes and weights, both of shape ``broadcast(lower, upper).shape + (n_panels * order,)``.
    """
    lower = np.asarray(lower, dtype=float)[..., None]
    upper = np.asarray(upper, dtype=float)[..., None]
    t, w = _unit_rule(n_panels, order)
    span = upper - lower
    return lower + span * t, span * w


def adaptive_integral(
    integrand: Callable[[float], ArrayLike],
    lower: float,
    upper: float,
    quad: QuadratureConfig,
    label: str = "integral",
) -> Union[float, ArrayLike]:
    """Adaptive Gauss-Kronrod integral of a scalar or vector valued function of one variable.

    Subintervals are bisected until the max-norm error estimate meets ``max(abs_tol, rel_tol * |I|)``, with at most
    ``quad.max_panels`` subintervals. A batch shares its subintervals, so an element may be integrated more finely
    than it needs.
    """
    value, _, info = integrate.quad_vec(
        integrand,
        lower,
        upper,
        epsabs=quad.abs_tol,
        epsrel=quad.rel_tol,
        norm="max",
        limit=quad.max_panels,
        full_output=True,
    )
    if not info.success:
        logger.warning(f"The {label} did not reach the requested tolerance: {info.message}")
    return value
