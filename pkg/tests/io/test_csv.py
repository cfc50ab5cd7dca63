from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from clusterd2d import (
    OptimizationResult,
    sample_tcp,
    write_manifest,
    write_realization_csv,
    write_results_csv,
    write_trace_csv,
)
from clusterd2d._io.format import CurrentResultsFormat, TraceFormatV01
from clusterd2d.models import NetworkGeometry


@pytest.mark.parametrize(
    ("value", "expected"),
    [(0.5, "0.5"), (0.1, "0.10000000000000001"), (np.inf, "unstable"), (-np.inf, "unstable"), (np.nan, ""), (3, "3")],
)
def test_format_value(value: float, expected: str) -> None:
    assert CurrentResultsFormat().format_value(value) == expected


def test_trace_columns() -> None:
    assert TraceFormatV01().columns(2) == ("iter", "t_seconds", "w_d_hz", "b_1", "b_2")


class TestResultsCsv:
    def test_sentinels(self, tmp_path: Path) -> None:
        table = pd.DataFrame({"t_seconds": [1.5, np.inf, np.nan], "scheme": ["a", "b", "c"]})
        path = write_results_csv(table, tmp_path / "out" / "delay.csv")
        assert path.read_text(encoding="utf-8") == "t_seconds,scheme\n1.5,a\nunstable,b\n,c\n"

    def test_full_precision(self, tmp_path: Path) -> None:
        values = np.array([1.0 / 3.0, 2.0**-40, 123456.789])
        path = write_results_csv(pd.DataFrame({"x": values}), tmp_path / "x.csv")
        np.testing.assert_array_equal(pd.read_csv(path, float_precision="round_trip")["x"].to_numpy(), values)

    def test_integers_are_untouched(self, tmp_path: Path) -> None:
        path = write_results_csv(pd.DataFrame({"iter": [0, 1], "t": [0.25, 0.125]}), tmp_path / "x.csv")
        assert path.read_text(encoding="utf-8").splitlines() == ["iter,t", "0,0.25", "1,0.125"]

    def test_column_check(self, tmp_path: Path) -> None:
        table = pd.DataFrame({"a": [1.0], "b": [2.0]})
        write_results_csv(table, tmp_path / "ok.csv", columns=("a", "b"))
        with pytest.raises(ValueError, match="columns"):
            write_results_csv(table, tmp_path / "bad.csv", columns=("b", "a"))
        assert not (tmp_path / "bad.csv").exists()


def test_trace_csv(tmp_path: Path) -> None:
    result = OptimizationResult(
        b_star=np.array([0.75, 0.25]),
        w_d_star=8e6,
        t_star=1.5,
        iterations=1,
        objective_trace=(2.0, 1.5),
        converged=True,
        w_d_trace=(10e6, 8e6),
        b_trace=(np.array([1.0, 0.0]), np.array([0.75, 0.25])),
    )
    trace = pd.read_csv(write_trace_csv(result, tmp_path / "trace.csv"))
    assert list(trace.columns) == ["iter", "t_seconds", "w_d_hz", "b_1", "b_2"]
    assert trace["iter"].tolist() == [0, 1]
    assert trace["t_seconds"].tolist() == [2.0, 1.5]
    assert trace["b_1"].tolist() == [1.0, 0.75]


def test_realization_csv(tmp_path: Path) -> None:
    realization = sample_tcp(NetworkGeometry(), window_radius=300.0, seed=0)
    table = pd.read_csv(write_realization_csv(realization, tmp_path / "points.csv"))
    assert list(table.columns) == ["kind", "cluster_id", "x_m", "y_m"]
    counts = table["kind"].value_counts()
    assert counts.get("parent", 0) == realization.n_clusters
    assert counts.get("member", 0) == len(realization.member_offsets)
    assert (table.loc[table["kind"] == "bs", "cluster_id"] == -1).all()


def test_manifest(tmp_path: Path) -> None:
    manifest = {"seed": np.int64(3), "values": np.array([0.5, 1.0]), "out": tmp_path, "b": {"z": 1, "a": 2}}
    path = write_manifest(manifest, tmp_path / "run.manifest.json")
    text = path.read_text(encoding="utf-8")
    assert json.loads(text) == {"seed": 3, "values": [0.5, 1.0], "out": str(tmp_path), "b": {"z": 1, "a": 2}}
    assert text.index('"b"') < text.index('"out"') < text.index('"seed"')
    assert text.endswith("\n")
    with pytest.raises(TypeError):
        write_manifest({"bad": object()}, tmp_path / "bad.json")
