from __future__ import annotations

from typing import Union

import numpy as np

__all__ = ["ArrayLike", "IntArray", "Number"]

try:
    from numpy.typing import NDArray

    ArrayLike = NDArray[np.float64]
    IntArray = NDArray[np.int64]
except (ImportError, TypeError):
    ArrayLike = np.ndarray  # type: ignore[misc]
    IntArray = np.ndarray  # type: ignore[misc]

Number = Union[int, float]
