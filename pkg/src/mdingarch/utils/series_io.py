"""
Series and report input/output

Series files are UTF-8 text with one integer per line and an optional header
line ``y``. Reports are JSON with a stable key order and floats written with
17 significant digits, so reruns with the same flags and seed are
byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import re
import sys
from contextlib import contextmanager
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Iterator, List, Sequence, TextIO, Union

import numpy as np

from mdingarch.core.exceptions import DataFormatError
from mdingarch.models.parameters import SeriesZ

logger = logging.getLogger(__name__)

STDIO = "-"
HEADER = "y"
FLOAT_FORMAT = ".17g"

_INTEGER = re.compile(r"[+-]?\d+")

PathLike = Union[str, Path]


@contextmanager
def _open_text(path: PathLike, mode: str) -> Iterator[TextIO]:
    if str(path) == STDIO:
        yield sys.stdin if mode == "r" else sys.stdout
        return
    encoding = "utf-8-sig" if mode == "r" else "utf-8"
    with open(path, mode, encoding=encoding, newline="" if mode == "w" else None) as handle:
        yield handle


def parse_series(lines: Iterable[str], source: str = "<input>") -> SeriesZ:
    """Parse integer lines; raises DataFormatError with the 1-based line number."""
    values: List[int] = []
    blank_at = None
    for number, raw in enumerate(lines, start=1):
        token = raw.strip()
        if not token:
            if blank_at is None:
                blank_at = number
            continue
        if number == 1 and token == HEADER:
            continue
        if blank_at is not None:
            raise DataFormatError("blank line inside the series", line=blank_at, path=source)
        if not _INTEGER.fullmatch(token):
            raise DataFormatError(f"expected an integer, got {token!r}", line=number, path=source)
        values.append(int(token))
    if not values:
        raise DataFormatError("no observations found", path=source)
    return SeriesZ(np.asarray(values, dtype=np.int64))


def read_series(path: PathLike) -> SeriesZ:
    source = "<stdin>" if str(path) == STDIO else str(path)
    try:
        with _open_text(path, "r") as handle:
            series = parse_series(handle, source)
    except UnicodeDecodeError as exc:
        raise DataFormatError(f"file is not valid UTF-8: {exc.reason}", path=source) from exc
    except OSError as exc:
        raise DataFormatError(f"cannot read series: {exc.strerror}", path=source) from exc
    logger.info(f"Read {series.n} observations from {source}")
    return series


def write_series(path: PathLike, series: SeriesZ, header: bool = True) -> None:
    with _open_text(path, "w") as handle:
        if header:
            handle.write(f"{HEADER}\n")
        handle.write("".join(f"{int(v)}\n" for v in series.y))


def format_float(value: float) -> str:
    return format(value, FLOAT_FORMAT)


def _nonfinite_label(value: float) -> str:
    if math.isnan(value):
        return "nan"
    return "inf" if value > 0 else "-inf"


def _plain(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, tuple):
        return list(value)
    return value


def _encode(value: Any, indent: int, level: int) -> str:
    value = _plain(value)
    pad = " " * (indent * (level + 1))
    close = " " * (indent * level)
    if value is None or isinstance(value, bool):
        return json.dumps(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_float(value) if math.isfinite(value) else "null"
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, dict):
        items = []
        for key, item in value.items():
            item = _plain(item)
            items.append(f"{pad}{json.dumps(str(key))}: {_encode(item, indent, level + 1)}")
            if isinstance(item, float) and not math.isfinite(item):
                items.append(f"{pad}{json.dumps(f'{key}_nonfinite')}: {json.dumps(_nonfinite_label(item))}")
        return "{\n" + ",\n".join(items) + f"\n{close}}}" if items else "{}"
    if isinstance(value, list):
        if not value:
            return "[]"
        if all(not isinstance(_plain(v), (dict, list)) for v in value):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in value) + "]"
        return "[\n" + ",\n".join(f"{pad}{_encode(v, indent, level + 1)}" for v in value) + f"\n{close}]"
    raise TypeError(f"cannot serialise {type(value).__name__}")


def dumps(payload: dict, indent: int = 2) -> str:
    """Deterministic JSON text for a report; non-finite floats become null plus a `<key>_nonfinite` label."""
    return _encode(payload, indent, 0) + "\n"


def write_json(path: PathLike, payload: dict) -> None:
    with _open_text(path, "w") as handle:
        handle.write(dumps(payload))


def write_csv_table(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([
            format_float(v) if isinstance(v, (float, np.floating)) and math.isfinite(v)
            else ("" if isinstance(v, (float, np.floating)) else _plain(v))
            for v in row
        ])
    with _open_text(path, "w") as handle:
        handle.write(buffer.getvalue())
