from __future__ import annotations

from collections.abc import Sequence
from typing import Any

import numpy as np
import pandas as pd


class ResultsFormatV01:
    """ResultsFormat defines the CSV layout of the clusterd2d result tables."""

    encoding = "utf-8"
    line_terminator = "\n"
    float_format = "%.17g"
    # a sweep point whose queues are unstable has an infinite delay
    unstable_sentinel = "unstable"
    missing = ""

    @property
    def version(self) -> str:
        return "0.1"

    def format_value(self, value: Any) -> str:
        value = float(value)
        if np.isnan(value):
            return self.missing
        if np.isinf(value):
            return self.unstable_sentinel
        return self.float_format % value

    def validate_columns(self, table: pd.DataFrame, columns: Sequence[str]) -> None:
        if list(table.columns) != list(columns):
            raise ValueError(f"Expected the columns {list(columns)}, got {list(table.columns)}.")


class TraceFormatV01(ResultsFormatV01):
    """Formatter for optimization traces."""

    prefix = ("iter", "t_seconds", "w_d_hz")

    def columns(self, n_files: int) -> tuple[str, ...]:
        return self.prefix + tuple(f"b_{i + 1}" for i in range(n_files))


class RealizationFormatV01(ResultsFormatV01):
    """Formatter for point-process realizations."""

    columns = ("kind", "cluster_id", "x_m", "y_m")


class QueueTraceFormatV01(ResultsFormatV01):
    """Formatter for queue event traces."""

    columns = ("event_time_s", "class", "event_kind")


CurrentResultsFormat = ResultsFormatV01
CurrentTraceFormat = TraceFormatV01
CurrentRealizationFormat = RealizationFormatV01
CurrentQueueTraceFormat = QueueTraceFormatV01
