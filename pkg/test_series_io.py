#!/usr/bin/env python3
"""
Tests for series parsing and deterministic report output.
"""

import json
import math
import os
import sys

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from mdingarch.core.exceptions import DataFormatError  # noqa: E402
from mdingarch.models.parameters import SeriesZ  # noqa: E402
from mdingarch.utils.reports import SCHEMA_VERSION, envelope  # noqa: E402
from mdingarch.utils.series_io import (  # noqa: E402
    dumps,
    format_float,
    parse_series,
    read_series,
    write_csv_table,
    write_json,
    write_series,
)


def test_parse_with_and_without_header():
    assert parse_series(["y\n", "3\n", "-2\n", "0\n"]).y.tolist() == [3, -2, 0]
    assert parse_series(["+4", "-1"]).y.tolist() == [4, -1]


def test_trailing_blank_lines_are_ignored():
    assert parse_series(["1\n", "-1\n", "\n", "  \n"]).n == 2


@pytest.mark.parametrize("lines,line", [
    (["y", "3", "2.5"], 3),
    (["1", "abc"], 2),
    (["1", "y"], 2),
    (["1", "", "2"], 2),
    (["1", "1e3"], 2),
])
def test_parse_errors_carry_the_line_number(lines, line):
    with pytest.raises(DataFormatError) as excinfo:
        parse_series(lines, "series.csv")
    assert excinfo.value.line == line
    assert str(excinfo.value).startswith(f"series.csv:{line}: ")


def test_empty_input():
    with pytest.raises(DataFormatError, match="no observations"):
        parse_series(["y\n"])


def test_series_file_round_trip(tmp_path):
    path = tmp_path / "z.csv"
    series = SeriesZ.from_values([5, -3, 0, 12, -1])
    write_series(path, series)
    assert path.read_text(encoding="utf-8") == "y\n5\n-3\n0\n12\n-1\n"
    assert read_series(path).y.tolist() == [5, -3, 0, 12, -1]

    write_series(path, series, header=False)
    assert path.read_text(encoding="utf-8").splitlines()[0] == "5"


def test_read_series_accepts_a_byte_order_mark(tmp_path):
    path = tmp_path / "bom.csv"
    path.write_bytes("\ufeffy\n1\n-1\n".encode("utf-8"))
    assert read_series(path).y.tolist() == [1, -1]


def test_read_series_errors(tmp_path):
    with pytest.raises(DataFormatError):
        read_series(tmp_path / "missing.csv")
    latin = tmp_path / "latin.csv"
    latin.write_bytes(b"y\n1\n\xff\n")
    with pytest.raises(DataFormatError):
        read_series(latin)


def test_float_format_keeps_full_precision():
    assert format_float(0.1) == "0.10000000000000001"
    assert float(format_float(1.0 / 3.0)) == 1.0 / 3.0


def test_dumps_replaces_non_finite_values():
    text = dumps({"a": 1.5, "b": math.nan, "c": -math.inf, "d": [1.0, math.inf]})
    data = json.loads(text)
    assert data["a"] == 1.5
    assert data["b"] is None and data["b_nonfinite"] == "nan"
    assert data["c"] is None and data["c_nonfinite"] == "-inf"
    assert data["d"] == [1.0, None]
    assert list(data) == ["a", "b", "b_nonfinite", "c", "c_nonfinite", "d"]


def test_dumps_handles_numpy_values():
    data = json.loads(dumps({
        "matrix": np.eye(2),
        "count": np.int64(3),
        "flag": np.bool_(True),
        "pair": (1, 2),
        "empty": {},
    }))
    assert data == {"matrix": [[1.0, 0.0], [0.0, 1.0]], "count": 3, "flag": True, "pair": [1, 2], "empty": {}}


def test_dumps_is_deterministic():
    payload = envelope("fit", n=3, values=[0.1, 0.2])
    assert dumps(payload) == dumps(dict(payload))
    assert list(json.loads(dumps(payload)))[:3] == ["schema_version", "command", "version"]
    assert json.loads(dumps(payload))["schema_version"] == SCHEMA_VERSION


def test_write_json_and_csv(tmp_path):
    json_path = tmp_path / "report.json"
    write_json(json_path, {"x": 0.25})
    assert json_path.read_text(encoding="utf-8") == '{\n  "x": 0.25\n}\n'

    csv_path = tmp_path / "table.csv"
    write_csv_table(csv_path, ("a", "b", "c"), [(0.5, math.nan, 2)])
    assert csv_path.read_text(encoding="utf-8") == "a,b,c\n0.5,,2\n"
