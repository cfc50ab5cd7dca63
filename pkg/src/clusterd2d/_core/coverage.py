"""Analytic rate coverage of the clustered D2D tier and of the base-station tier.

Distances are in m and densities in km^-2 (converted internally). Transmit powers are unity, so the Laplace
transforms are evaluated at ``s = theta * h**alpha``.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Union

import numpy as np
from scipy import integrate, special

from clusterd2d._core._quadrature import adaptive_integral, panel_nodes
from clusterd2d._exceptions import NoProviderError
from clusterd2d._types import ArrayLike, Number
from clusterd2d._utils import _check_probability, _parse_list_into_array, _rayleigh_tail_radius
from clusterd2d.models import ContentModel, CoverageTable, NetworkGeometry, QuadratureConfig, RadioConfig

__all__ = [
    "availability",
    "bs_coverage",
    "coverage_table",
    "d2d_coverage",
    "d2d_coverage_vector",
    "hyp2f1",
    "inter_cluster_laplace",
    "intra_cluster_laplace",
    "nearest_provider_cdf",
    "nearest_provider_pdf",
]

SQRT2 = math.sqrt(2.0)


def availability(b: Union[Number, ArrayLike], geometry: NetworkGeometry) -> Union[float, ArrayLike]:
    """Probability that a cluster holds at least one active provider of a content cached with probability ``b``."""
    out = -np.expm1(-np.asarray(b, dtype=float) * geometry.active_per_cluster)
    return float(out) if out.ndim == 0 else out


def _rayleigh_pdf(r: ArrayLike, scale: float) -> ArrayLike:
    return r / scale**2 * np.exp(-0.5 * (r / scale) ** 2)


def _rice_pdf(u: ArrayLike, v: ArrayLike, sigma: float) -> ArrayLike:
    # exponentially scaled Bessel function keeps large u * v finite
    return u / sigma**2 * np.exp(-0.5 * ((u - v) / sigma) ** 2) * special.i0e(u * v / sigma**2)


def _rice_cdf(u: ArrayLike, v: ArrayLike, sigma: float) -> ArrayLike:
    return special.chndtr((u / sigma) ** 2, 2, (v / sigma) ** 2)


def _as_output(values: ArrayLike, like: ArrayLike) -> Union[float, ArrayLike]:
    values = values.reshape(np.shape(like))
    return float(values) if values.ndim == 0 else values


def _centre_rule(sigma: float, quad: QuadratureConfig) -> tuple[ArrayLike, ArrayLike]:
    """Nodes and probability weights of the Rayleigh(sigma) centre offset, renormalized over the truncated range."""
    v_max = _rayleigh_tail_radius(sigma, quad.tail_mass_tol)
    v0, w = panel_nodes(0.0, v_max, quad.inner_panels, quad.order)
    weight = _rayleigh_pdf(v0, sigma) * w
    return v0, weight / weight.sum()


def _nearest_density(
    h: ArrayLike, lam: ArrayLike, sigma: float, quad: QuadratureConfig, normalize: bool
) -> ArrayLike:
    """Density of the nearest provider distance for every provider mean ``lam`` (rows) and distance ``h`` (columns).

    The distance from the typical device to its cluster centre is Rayleigh(sigma); given it, providers are a Poisson
    process whose distances are Rice distributed.
    """
    v0, centre_weight = _centre_rule(sigma, quad)
    pdf = _rice_pdf(h[:, None], v0[None, :], sigma)
    cdf = _rice_cdf(h[:, None], v0[None, :], sigma)
    survival = np.exp(-lam[:, None, None] * cdf[None, :, :])
    integral = np.sum(survival * (pdf * centre_weight)[None, :, :], axis=-1)
    if normalize:
        # lam / (1 - exp(-lam)) tends to 1 when lam -> 0: a single provider
        scale = np.ones_like(lam)
        positive = lam > 0
        scale[positive] = lam[positive] / -np.expm1(-lam[positive])
    else:
        scale = lam
    return scale[:, None] * integral


def nearest_provider_pdf(
    h: Union[Number, ArrayLike], b_i: float, geometry: NetworkGeometry, quad: QuadratureConfig = QuadratureConfig()
) -> Union[float, ArrayLike]:
    """
    Density of the distance from the typical device to its nearest active provider of content ``i``.

    Parameters
    ----------
    h
        Distance(s), in m.
    b_i
        Caching probability of the content.
    geometry
        Network geometry.
    quad
        Quadrature settings.

    Returns
    -------
    The density, per m. It is defective: its total mass is ``1 - exp(-b_i p n_bar)``, the probability that a provider
    exists at all.
    """
    h_array = _parse_list_into_array(h)
    if np.any(h_array < 0):
        raise ValueError("Distances must be non-negative.")
    _check_probability("b_i", b_i)
    lam = b_i * geometry.active_per_cluster
    if lam == 0:
        return _as_output(np.zeros(h_array.size), h_array)
    values = _nearest_density(h_array.ravel(), np.array([lam]), geometry.sigma, quad, normalize=False)[0]
    return _as_output(values, h_array)


def nearest_provider_cdf(
    h: Union[Number, ArrayLike], b_i: float, geometry: NetworkGeometry, quad: QuadratureConfig = QuadratureConfig()
) -> Union[float, ArrayLike]:
    """Defective distribution function of the nearest provider distance; tends to ``1 - exp(-b_i p n_bar)``."""
    h_array = _parse_list_into_array(h)
    if np.any(h_array < 0):
        raise ValueError("Distances must be non-negative.")
    _check_probability("b_i", b_i)
    lam = b_i * geometry.active_per_cluster
    v0, centre_weight = _centre_rule(geometry.sigma, quad)
    cdf = _rice_cdf(h_array.ravel()[:, None], v0[None, :], geometry.sigma)
    void = np.sum(np.exp(-lam * cdf) * centre_weight, axis=-1)
    values = np.clip(1.0 - void, 0.0, 1.0)
    return _as_output(values, h_array)


def _intra_exponents(
    s: ArrayLike, h: ArrayLike, sigma: float, alpha: float, quad: QuadratureConfig
) -> tuple[ArrayLike, ArrayLike]:
    """Integrals of ``s f_R(r) / (s + r**alpha)`` over ``[0, h]`` and ``[h, inf)``, f_R = Rayleigh(sqrt(2) sigma)."""
    scale = SQRT2 * sigma
    r_tail = _rayleigh_tail_radius(scale, quad.tail_mass_tol)
    s = s[..., None]

    def kernel(r: ArrayLike) -> ArrayLike:
        return s / (s + r**alpha) * _rayleigh_pdf(r, scale)

    r, w = panel_nodes(0.0, h, quad.inner_panels, quad.order)
    near = np.sum(kernel(r) * w, axis=-1)
    r, w = panel_nodes(h, h + r_tail, quad.inner_panels, quad.order)
    far = np.sum(kernel(r) * w, axis=-1)
    return near, far


def intra_cluster_laplace(
    s: float,
    h_i: float,
    b_i: float,
    geometry: NetworkGeometry,
    alpha: float = 4.0,
    quad: QuadratureConfig = QuadratureConfig(),
) -> float:
    """
    Laplace transform of the interference from the typical device's own cluster.

    Interferers are the active devices farther than the serving provider plus the active devices closer than it that
    do not cache the content. Their distances are taken i.i.d. Rayleigh(sqrt(2) sigma), which ignores the correlation
    through the position of the cluster centre.

    Parameters
    ----------
    s
        Argument of the transform, in m^alpha.
    h_i
        Distance to the serving provider, in m.
    b_i
        Caching probability of the requested content.
    geometry
        Network geometry.
    alpha
        Path-loss exponent of the intra-cluster links.
    quad
        Quadrature settings.

    Returns
    -------
    The transform, in (0, 1].
    """
    if s < 0:
        raise ValueError(f"The Laplace transform argument must be non-negative, got {s}.")
    if h_i < 0:
        raise ValueError(f"The serving distance must be non-negative, got {h_i}.")
    _check_probability("b_i", b_i)
    if s == 0 or geometry.p == 0:
        return 1.0
    near, far = _intra_exponents(np.array([s], dtype=float), np.array([h_i], dtype=float), geometry.sigma, alpha, quad)
    return float(np.exp(-geometry.active_per_cluster * ((1.0 - b_i) * near[0] + far[0])))


def _inter_exponent(s: float, geometry: NetworkGeometry, alpha: float, quad: QuadratureConfig) -> float:
    sigma = geometry.sigma
    m = geometry.active_per_cluster
    # |u - v| exceeds this with probability below tail_mass_tol when u ~ Rice(v, sigma)
    width = _rayleigh_tail_radius(sigma, quad.tail_mass_tol)
    v_near = 8.0 * sigma + 4.0 * s ** (1.0 / alpha)
    v_far = 16.0 * v_near

    def cluster_term(v: float) -> float:
        u, w = panel_nodes(max(v - width, 0.0), v + width, quad.inner_panels, quad.order)
        mean_success = np.sum(s / (s + u**alpha) * _rice_pdf(u, v, sigma) * w)
        return -math.expm1(-m * mean_success)

    near = adaptive_integral(lambda v: cluster_term(v) * v, 0.0, v_near, quad, "inter-cluster integral")
    log_range = (math.log(v_near), math.log(v_far))
    far = adaptive_integral(
        lambda t: cluster_term(math.exp(t)) * math.exp(2.0 * t), *log_range, quad, "inter-cluster tail"
    )
    # beyond v_far: 1 - exp(-m phi) ~ m s E|v + y|^-alpha ~ m s v^-alpha (1 + alpha^2 sigma^2 / (2 v^2))
    tail = m * s * (v_far ** (2.0 - alpha) / (alpha - 2.0) + 0.5 * alpha * sigma**2 * v_far ** (-alpha))
    return float(near + far + tail)


@lru_cache(maxsize=4096)
def _inter_laplace_scalar(s: float, geometry: NetworkGeometry, alpha: float, quad: QuadratureConfig) -> float:
    if s == 0 or geometry.lambda_p == 0 or geometry.p == 0:
        return 1.0
    return math.exp(-2.0 * math.pi * geometry.lambda_p_m2 * _inter_exponent(s, geometry, alpha, quad))


def inter_cluster_laplace(
    s: float, geometry: NetworkGeometry, alpha: float = 4.0, quad: QuadratureConfig = QuadratureConfig()
) -> float:
    """
    Laplace transform of the interference from all the other clusters.

    Cluster centres form a Poisson process of density ``lambda_p``; each holds a Poisson number of active devices,
    with mean ``p n_bar``, scattered around it. Results are memoized.

    Parameters
    ----------
    s
        Argument of the transform, in m^alpha.
    geometry
        Network geometry.
    alpha
        Path-loss exponent.
    quad
        Quadrature settings.

    Returns
    -------
    The transform, in (0, 1].
    """
    if s < 0:
        raise ValueError(f"The Laplace transform argument must be non-negative, got {s}.")
    return _inter_laplace_scalar(float(s), geometry, float(alpha), quad)


def d2d_coverage_vector(
    b: Union[ArrayLike, list[float]],
    geometry: NetworkGeometry,
    radio: RadioConfig,
    quad: QuadratureConfig = QuadratureConfig(),
    normalize: bool = True,
) -> ArrayLike:
    """
    Rate coverage of the D2D link for several caching probabilities at once.

    Parameters
    ----------
    b
        Caching probabilities, each in [0, 1]. With ``normalize=True`` a zero entry yields the limit ``b -> 0+``, the
        coverage when the cluster holds a single provider.
    geometry
        Network geometry.
    radio
        Radio configuration; the closed form assumes Rayleigh fading on every link.
    quad
        Quadrature settings.
    normalize
        Condition on the existence of a provider. ``False`` integrates against the defective nearest-provider density,
        which multiplies the result by the availability ``1 - exp(-b p n_bar)``.

    Returns
    -------
    Coverage probabilities with the shape of ``b``.
    """
    b_array = _parse_list_into_array(b)
    b_flat = b_array.ravel()
    if np.any((b_flat < 0) | (b_flat > 1)):
        raise ValueError("Caching probabilities must lie in [0, 1].")
    if radio.channel_mode != "rayleigh_nlos":
        raise ValueError("The analytic coverage assumes Rayleigh fading; use the Monte Carlo estimators instead.")
    sigma, alpha, theta = geometry.sigma, radio.alpha, radio.theta
    m = geometry.active_per_cluster
    lam = b_flat * m
    h_max = _rayleigh_tail_radius(SQRT2 * sigma, quad.tail_mass_tol)

    def integrand(h: float) -> ArrayLike:
        h_node = np.array([h])
        s = theta * h_node**alpha
        # the inter-cluster factor does not depend on the caching probability: shared by every b
        inter = _inter_laplace_scalar(float(s[0]), geometry, alpha, quad)
        near, far = _intra_exponents(s, h_node, sigma, alpha, quad)
        intra = np.exp(-m * ((1.0 - b_flat) * near[0] + far[0]))
        return inter * intra * _nearest_density(h_node, lam, sigma, quad, normalize)[:, 0]

    values = np.clip(adaptive_integral(integrand, 0.0, h_max, quad, "coverage integral"), 0.0, 1.0)
    return values.reshape(b_array.shape)


def d2d_coverage(
    b_i: float,
    geometry: NetworkGeometry,
    radio: RadioConfig,
    quad: QuadratureConfig = QuadratureConfig(),
    normalize: bool = True,
) -> float:
    """
    Rate coverage probability of content ``i`` over the D2D link.

    The typical device is served by its nearest active provider of the content; it is in coverage when the SIR
    exceeds ``radio.theta``. Interference comes from the own cluster and from all the other clusters.

    Parameters
    ----------
    b_i
        Caching probability of the content, in (0, 1].
    geometry
        Network geometry.
    radio
        Radio configuration.
    quad
        Quadrature settings.
    normalize
        Return the coverage given that a provider exists (default), or the unconditional value.

    Returns
    -------
    The coverage probability.

    Raises
    ------
    NoProviderError
        If ``b_i p n_bar == 0``: no provider can exist and the conditional coverage is undefined.
    """
    _check_probability("b_i", b_i)
    if b_i * geometry.active_per_cluster == 0:
        raise NoProviderError("No provider: the content is never cached by an active device (b_i * p * n_bar == 0).")
    return float(d2d_coverage_vector(np.array([b_i]), geometry, radio, quad, normalize)[0])


def coverage_table(
    content: ContentModel, geometry: NetworkGeometry, radio: RadioConfig, quad: QuadratureConfig = QuadratureConfig()
) -> CoverageTable:
    """D2D coverage of every content of the library under its caching vector, and the base-station coverage."""
    return CoverageTable(
        upsilon_d=d2d_coverage_vector(content.b, geometry, radio, quad),
        upsilon_b=bs_coverage(radio.theta, radio.alpha),
    )


def hyp2f1(a: float, b: float, c: float, z: float, rel_tol: float = 1e-10) -> float:
    """
    Gauss hypergeometric function on the family ``2F1(1, -delta; 1 - delta; -theta)``.

    Uses ``2F1(1, -delta; 1 - delta; -theta) = 1 + theta**delta * int_{theta**-delta}^inf du / (1 + u**(1 / delta))``,
    evaluated by adaptive quadrature.

    Parameters
    ----------
    a, b, c, z
        Parameters; only ``a = 1``, ``b = -delta`` with ``0 < delta < 1``, ``c = 1 - delta`` and ``z <= 0`` are
        supported.
    rel_tol
        Relative tolerance of the quadrature.

    Returns
    -------
    The value of the function.
    """
    delta = -b
    in_family = a == 1 and 0 < delta < 1 and math.isclose(c, 1.0 - delta, rel_tol=0.0, abs_tol=1e-12) and z <= 0
    if not in_family:
        raise NotImplementedError(
            f"hyp2f1 is only implemented for (1, -delta; 1 - delta; z <= 0), got ({a}, {b}; {c}; {z})."
        )
    if z == 0:
        return 1.0
    theta = -z
    value, _ = integrate.quad(
        lambda u: 1.0 / (1.0 + u ** (1.0 / delta)), theta ** (-delta), np.inf, epsabs=1e-14, epsrel=rel_tol, limit=200
    )
    return 1.0 + theta**delta * value


def bs_coverage(theta: float, alpha: float) -> float:
    """
    Rate coverage of the base-station link.

    Base stations form a Poisson process, the typical device attaches to the nearest one, and every link sees Rayleigh
    fading: the coverage is ``1 / 2F1(1, -delta; 1 - delta; -theta)`` with ``delta = 2 / alpha``.
    """
    if not theta > 0:
        raise ValueError(f"`theta` must be positive, got {theta}.")
    if not alpha > 2:
        raise ValueError(f"`alpha` must be larger than 2, got {alpha}.")
    delta = 2.0 / alpha
    return 1.0 / hyp2f1(1.0, -delta, 1.0 - delta, -theta)
