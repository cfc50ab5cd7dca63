from clusterd2d._io.config import parse_config, read_config
from clusterd2d._io.format import CurrentResultsFormat, ResultsFormatV01
from clusterd2d._io.io_csv import (
    write_manifest,
    write_queue_trace,
    write_realization_csv,
    write_results_csv,
    write_trace_csv,
)

__all__ = [
    "parse_config",
    "read_config",
    "write_manifest",
    "write_queue_trace",
    "write_realization_csv",
    "write_results_csv",
    "write_trace_csv",
    "ResultsFormatV01",
    "CurrentResultsFormat",
]
