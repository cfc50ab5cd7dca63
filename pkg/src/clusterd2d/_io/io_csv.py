from __future__ import annotations

import json
from collections.abc import Mapping
from pathlib import Path
from typing import TYPE_CHECKING, Any, Optional, Union

import numpy as np
import pandas as pd
from pandas.api.types import is_float_dtype

from clusterd2d._io.format import (
    CurrentQueueTraceFormat,
    CurrentRealizationFormat,
    CurrentResultsFormat,
    CurrentTraceFormat,
    QueueTraceFormatV01,
    RealizationFormatV01,
    ResultsFormatV01,
    TraceFormatV01,
)
from clusterd2d._logging import logger
from clusterd2d._types import ArrayLike, IntArray

if TYPE_CHECKING:
    from clusterd2d._core.optimize import OptimizationResult
    from clusterd2d._core.point_process import SpatialRealization

__all__ = ["write_manifest", "write_queue_trace", "write_realization_csv", "write_results_csv", "write_trace_csv"]


def _prepare_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_results_csv(
    table: pd.DataFrame,
    path: Union[str, Path],
    columns: Optional[tuple[str, ...]] = None,
    fmt: ResultsFormatV01 = CurrentResultsFormat(),
) -> Path:
    """
    Write a result table as CSV.

    Floating-point columns are written with full double precision; infinite values (unstable sweep points) become
    the ``unstable`` sentinel and missing values an empty field.

    Parameters
    ----------
    table
        The table to write.
    path
        Destination file; parent directories are created.
    columns
        Expected column order, checked when given.
    fmt
        CSV format.

    Returns
    -------
    The path written.
    """
    if columns is not None:
        fmt.validate_columns(table, columns)
    out = table.copy()
    for name in out.columns:
        if is_float_dtype(out[name]):
            out[name] = [fmt.format_value(value) for value in out[name].to_numpy()]
    path = _prepare_path(path)
    out.to_csv(path, index=False, encoding=fmt.encoding, lineterminator=fmt.line_terminator)
    logger.info(f"Wrote {len(out)} rows to {path}.")
    return path


def write_trace_csv(
    result: OptimizationResult, path: Union[str, Path], fmt: TraceFormatV01 = CurrentTraceFormat()
) -> Path:
    """Write the iterates of an optimization run: ``iter, t_seconds, w_d_hz, b_1, ..., b_Nf``."""
    table = result.to_dataframe()
    return write_results_csv(table, path, fmt.columns(len(result.b_star)), fmt)


def write_realization_csv(
    realization: SpatialRealization,
    path: Union[str, Path],
    fmt: RealizationFormatV01 = CurrentRealizationFormat(),
) -> Path:
    """Write the parents, members and base stations of a realization: ``kind, cluster_id, x_m, y_m``."""
    return write_results_csv(realization.to_dataframe(), path, fmt.columns, fmt)


def write_queue_trace(
    arrivals: ArrayLike,
    departures: ArrayLike,
    classes: IntArray,
    path: Union[str, Path],
    fmt: QueueTraceFormatV01 = CurrentQueueTraceFormat(),
) -> Path:
    """
    Write the events of a simulated queue in time order: ``event_time_s, class, event_kind``.

    An arrival and a departure at the same instant are listed arrival first.
    """
    n = len(arrivals)
    table = pd.DataFrame(
        {
            "event_time_s": np.concatenate([arrivals, departures]),
            "class": np.concatenate([classes, classes]).astype(np.int64),
            "event_kind": np.repeat(["arrival", "departure"], n),
        }
    )
    table = table.sort_values(["event_time_s", "event_kind"], kind="stable", ignore_index=True)
    return write_results_csv(table, path, fmt.columns, fmt)


def _to_builtin(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable.")


def write_manifest(manifest: Mapping[str, Any], path: Union[str, Path]) -> Path:
    """Write a run manifest as JSON with sorted keys."""
    path = _prepare_path(path)
    with path.open("w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True, default=_to_builtin, allow_nan=True)
        f.write("\n")
    logger.info(f"Wrote the manifest {path}.")
    return path
