from __future__ import annotations

import math
from collections.abc import Sequence
from typing import Any, Union

import dask
import numpy as np
from dask.delayed import Delayed
from numpy.random import Generator, SeedSequence, default_rng

from clusterd2d._types import ArrayLike, Number

__all__ = ["db_to_linear", "linear_to_db"]


def db_to_linear(value_db: Number) -> float:
    """Convert a power ratio from dB to linear scale."""
    return float(10.0 ** (value_db / 10.0))


def linear_to_db(value: Number) -> float:
    """Convert a positive linear power ratio to dB."""
    if value <= 0:
        raise ValueError(f"Only positive ratios can be expressed in dB, got {value}.")
    return float(10.0 * math.log10(value))


def _parse_list_into_array(array: Union[Sequence[Number], ArrayLike, Number]) -> ArrayLike:
    array = np.asarray(array)
    if array.dtype != float:
        return array.astype(float)
    return array


def _check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"Seeds must be integers, got {type(seed).__name__}.")
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"Seeds must lie in [0, 2**64), got {seed}.")
    return int(seed)


def _spawn_generator(seed: int, *key: int) -> Generator:
    """Generator for the sub-stream ``key`` of the master ``seed``.

    ``SeedSequence`` hashes the seed together with the spawn key, so the stream of e.g. cluster ``k`` does not depend
    on how many other clusters were generated before it or in which order.
    """
    return default_rng(SeedSequence(entropy=_check_seed(seed), spawn_key=tuple(int(k) for k in key)))


def _check_probability(name: str, value: Number) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"`{name}` must be a probability in [0, 1], got {value}.")


def _check_positive(name: str, value: Number) -> None:
    if not value > 0:
        raise ValueError(f"`{name}` must be positive, got {value}.")


def _check_non_negative(name: str, value: Number) -> None:
    if not value >= 0:
        raise ValueError(f"`{name}` must be non-negative, got {value}.")


def _rayleigh_tail_radius(scale: float, tail_mass: float) -> float:
    """Radius beyond which a Rayleigh(``scale``) variable has probability ``tail_mass``."""
    return scale * math.sqrt(2.0 * math.log(1.0 / tail_mass))


def _chebyshev_lobatto(n_points: int) -> ArrayLike:
    """Chebyshev-Lobatto nodes on [0, 1], both end points included."""
    k = np.arange(n_points)
    nodes = 0.5 * (1.0 - np.cos(np.pi * k / (n_points - 1)))
    nodes[0], nodes[-1] = 0.0, 1.0
    return nodes


def _compute_in_order(tasks: Sequence[Delayed], threads: int = 1) -> tuple[Any, ...]:
    """Compute delayed tasks on the threaded scheduler; results come back in submission order."""
    if threads < 1:
        raise ValueError(f"At least one worker thread is needed, got {threads}.")
    return dask.compute(*tasks, scheduler="threads", num_workers=threads)
