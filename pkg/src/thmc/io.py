"""Text formats: path data, 4ti2 move files, reports and histograms.

Path data, plain:       one path per line, states separated by commas or blanks
Path data, aggregated:  ``1 1 2 2,3`` (path, comma, positive count)
Lines starting with ``#`` and blank lines are skipped in both.
"""
from __future__ import annotations

import os
import re
from datetime import datetime, timezone
from importlib.resources import files
from typing import Iterable

import numpy as np

from .core import Move, PathTable, ShapeError

_SPLIT = re.compile(r"[,\s]+")


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        where = ""
        if source:
            where = f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
        self.line = line


def _lines(source) -> tuple[list[str], str | None]:
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            return fh.read().splitlines(), str(source)
    return source.read().splitlines(), getattr(source, "name", None)


def _ints(text: str, lineno: int, name):
    try:
        return [int(tok) for tok in _SPLIT.split(text.strip()) if tok]
    except ValueError:
        raise ParseError(f"expected integers, got {text.strip()!r}", lineno, name) from None


def parse_paths_text(lines: Iterable[str], aggregated: bool = False, states: int | None = None,
                     length: int | None = None, name: str | None = None) -> PathTable:
    counts: dict[tuple[int, ...], int] = {}
    T = length
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if aggregated:
            if "," not in line:
                raise ParseError("aggregated line needs 'path,count'", lineno, name)
            head, tail = line.rsplit(",", 1)
            path = _ints(head, lineno, name)
            c = _ints(tail, lineno, name)
            if len(c) != 1 or c[0] <= 0:
                raise ParseError(f"count must be one positive integer, got {tail.strip()!r}",
                                 lineno, name)
            count = c[0]
        else:
            path, count = _ints(line, lineno, name), 1
        if T is None:
            T = len(path)
        if len(path) != T:
            raise ParseError(f"path has {len(path)} states, expected {T}", lineno, name)
        if min(path) < 1 or (states is not None and max(path) > states):
            hi = states if states is not None else "S"
            raise ParseError(f"states must lie in 1..{hi}: {path}", lineno, name)
        key = tuple(path)
        counts[key] = counts.get(key, 0) + count
    if not counts:
        raise ParseError("no paths found", None, name)
    S = states if states is not None else max(2, max(max(p) for p in counts))
    try:
        return PathTable(counts, S, T)
    except ShapeError as exc:
        raise ParseError(str(exc), None, name) from None


def parse_paths(source, aggregated: bool = False, states: int | None = None,
                length: int | None = None) -> PathTable:
    """Read path data from a file name or open text stream."""
    lines, name = _lines(source)
    return parse_paths_text(lines, aggregated, states, length, name)


def format_paths(table: PathTable, aggregated: bool = True) -> str:
    out = []
    for path, c in table.items():
        text = " ".join(map(str, path))
        if aggregated:
            out.append(f"{text},{c}")
        else:
            out.extend([",".join(map(str, path))] * c)
    return "".join(line + "\n" for line in out)


def write_paths(table: PathTable, dest, aggregated: bool = True) -> None:
    _write(dest, format_paths(table, aggregated))


def load_fixture(name: str) -> PathTable:
    """Bundled data sets, e.g. ``load_fixture("marijuana")``."""
    res = files("thmc") / "data" / f"{name}.csv"
    if not res.is_file():
        raise FileNotFoundError(f"no bundled fixture named {name!r}")
    return parse_paths_text(res.read_text(encoding="utf-8").splitlines(), aggregated=True,
                            name=f"{name}.csv")


# -- 4ti2 move files -----------------------------------------------------

def format_moves(moves: Iterable[Move], S: int, T: int) -> str:
    rows = [mv.dense() for mv in moves if not mv.is_zero()]
    lines = [f"{len(rows)} {S ** T}"]
    lines += [" ".join(str(int(v)) for v in r) for r in rows]
    return "\n".join(lines) + "\n"


def write_moves(moves: Iterable[Move], S: int, T: int, dest) -> None:
    _write(dest, format_moves(moves, S, T))


def read_moves(source, S: int, T: int) -> list[Move]:
    """Read a 4ti2 matrix file; all-zero rows are dropped."""
    lines, name = _lines(source)
    body = [(i, ln) for i, ln in enumerate(lines, 1) if ln.strip() and not ln.lstrip().startswith("#")]
    if not body:
        raise ParseError("empty move file", None, name)
    lineno, header = body[0]
    dims = _ints(header, lineno, name)
    if len(dims) != 2:
        raise ParseError("header must be 'R C'", lineno, name)
    R, C = dims
    if C != S ** T:
        raise ParseError(f"move file has {C} columns, S**T = {S ** T}", lineno, name)
    values: list[int] = []
    for i, ln in body[1:]:
        values.extend(_ints(ln, i, name))
    if len(values) != R * C:
        raise ParseError(f"expected {R} x {C} = {R * C} entries, found {len(values)}",
                         body[-1][0], name)
    mat = np.array(values, dtype=np.int64).reshape(R, C)
    return [Move.from_dense(row, S, T) for row in mat if row.any()]


def format_matrix(matrix: np.ndarray) -> str:
    lines = [f"{matrix.shape[0]} {matrix.shape[1]}"]
    lines += [" ".join(str(int(v)) for v in row) for row in matrix]
    return "\n".join(lines) + "\n"


# -- reports ---------------------------------------------------------------

def format_report(report, timestamp: bool = True) -> str:
    lines = []
    if timestamp:
        lines.append(f"timestamp: {datetime.now(timezone.utc).isoformat(timespec='seconds')}")
    lines += report.lines()
    return "\n".join(lines) + "\n"


def format_histogram(histogram) -> str:
    rows = ["bin_left,bin_right,count"]
    rows += [f"{lo:.6f},{hi:.6f},{c}" for lo, hi, c in histogram]
    return "\n".join(rows) + "\n"


def format_fiber(fiber) -> str:
    """One member per line: aggregated entries joined by '; '."""
    out = []
    for m in fiber.members:
        out.append("; ".join(f"{' '.join(map(str, p))},{c}" for p, c in m.items()))
    return "\n".join(out) + "\n"


def _write(dest, text: str) -> None:
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        dest.write(text)


__all__ = ["ParseError", "parse_paths", "parse_paths_text", "format_paths", "write_paths",
           "load_fixture", "format_moves", "write_moves", "read_moves", "format_matrix",
           "format_report", "format_histogram", "format_fiber"]
