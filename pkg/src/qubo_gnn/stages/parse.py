"""
Instance parsing stage.

Reads graphs (Gset and 0-based edge lists), QUBO/PUBO coefficient files
and the application inputs (interval and vector CSVs, dense correlation
matrices). Gset indices are 1-based and are shifted here, so everything
downstream works with 0-based vertices.
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import List, Union

import numpy as np

from ..applications import Interval
from ..errors import (
    EdgeCountMismatchError,
    MalformedEdgeLineError,
    MalformedHeaderError,
    MalformedInstanceError,
)
from ..graphs import Graph, graph_from_edge_list
from ..hamiltonians import PuboInstance, QuboInstance

logger = logging.getLogger(__name__)

Text = Union[str, bytes]

GRAPH_FORMATS = ("gset", "edgelist")
INSTANCE_FORMATS = GRAPH_FORMATS + ("qubo", "pubo")


def _lines(text: Text) -> List[str]:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return [line.strip() for line in text.splitlines() if line.strip()]


def _parse_graph_text(text: Text, one_based: bool) -> Graph:
    lines = _lines(text)
    if not lines:
        raise MalformedHeaderError("empty input, expected header 'n m'")
    header = lines[0].split()
    try:
        if len(header) != 2:
            raise ValueError
        n, m = int(header[0]), int(header[1])
    except ValueError:
        raise MalformedHeaderError(f"expected header 'n m', got {lines[0]!r}") from None
    body = lines[1:]
    if len(body) != m:
        raise EdgeCountMismatchError(f"header declares {m} edges, found {len(body)} lines")
    shift = 1 if one_based else 0
    edges = []
    for lineno, line in enumerate(body, start=2):
        parts = line.split()
        try:
            if len(parts) != 3:
                raise ValueError
            edges.append((int(parts[0]) - shift, int(parts[1]) - shift, float(parts[2])))
        except ValueError:
            raise MalformedEdgeLineError(f"line {lineno}: expected 'i j w', got {line!r}") from None
    return graph_from_edge_list(n, edges)


def parse_gset(text: Text) -> Graph:
    """Parse Gset text: header ``n m`` then ``m`` lines ``i j w`` with 1-based indices."""
    return _parse_graph_text(text, one_based=True)


def parse_edge_list(text: Text) -> Graph:
    """Same layout as Gset with 0-based indices."""
    return _parse_graph_text(text, one_based=False)


def parse_qubo(text: Text) -> QuboInstance:
    """Parse ``n`` then ``i j c`` lines (``i <= j``) and an optional ``offset c``."""
    lines = _lines(text)
    try:
        n = int(lines[0])
        terms, offset = {}, 0.0
        for line in lines[1:]:
            parts = line.split()
            if parts[0] == "offset" and len(parts) == 2:
                offset += float(parts[1])
            elif len(parts) == 3:
                key = (int(parts[0]), int(parts[1]))
                terms[key] = terms.get(key, 0.0) + float(parts[2])
            else:
                raise ValueError(line)
    except (ValueError, IndexError) as exc:
        raise MalformedInstanceError(f"malformed QUBO file: {exc}") from None
    return QuboInstance.from_terms(n, terms, offset)


def parse_pubo(text: Text) -> PuboInstance:
    """Parse ``n`` then ``k i1 ... ik c`` lines and an optional ``offset c``."""
    lines = _lines(text)
    try:
        n = int(lines[0])
        terms, offset = [], 0.0
        for line in lines[1:]:
            parts = line.split()
            if parts[0] == "offset" and len(parts) == 2:
                offset += float(parts[1])
                continue
            k = int(parts[0])
            if k < 1 or len(parts) != k + 2:
                raise ValueError(line)
            terms.append((tuple(int(i) for i in parts[1:k + 1]), float(parts[-1])))
    except (ValueError, IndexError) as exc:
        raise MalformedInstanceError(f"malformed PUBO file: {exc}") from None
    return PuboInstance.from_terms(n, terms, offset)


def read_graph(path: Union[str, Path], fmt: str = "gset") -> Graph:
    data = Path(path).read_bytes()
    if fmt == "gset":
        return parse_gset(data)
    if fmt == "edgelist":
        return parse_edge_list(data)
    raise ValueError(f"unknown graph format {fmt!r}; expected one of {GRAPH_FORMATS}")


def read_instance(path: Union[str, Path], fmt: str) -> Union[Graph, QuboInstance, PuboInstance]:
    """Read a graph or a coefficient file depending on ``fmt``."""
    if fmt in GRAPH_FORMATS:
        return read_graph(path, fmt)
    data = Path(path).read_bytes()
    if fmt == "qubo":
        return parse_qubo(data)
    if fmt == "pubo":
        return parse_pubo(data)
    raise ValueError(f"unknown instance format {fmt!r}; expected one of {INSTANCE_FORMATS}")


def _numeric_rows(path: Union[str, Path]) -> List[List[float]]:
    rows = []
    with Path(path).open("r", encoding="utf-8", newline="") as f:
        for lineno, row in enumerate(csv.reader(f), start=1):
            cells = [c.strip() for c in row if c.strip()]
            if not cells:
                continue
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                if lineno == 1:
                    logger.debug("Skipping CSV header %s", row)
                    continue
                raise MalformedInstanceError(f"{path}:{lineno}: non-numeric record {row}") from None
    return rows


def read_intervals_csv(path: Union[str, Path]) -> List[Interval]:
    """One ``start,end`` record per line; a header line is skipped."""
    rows = _numeric_rows(path)
    if any(len(r) != 2 for r in rows):
        raise MalformedInstanceError(f"{path}: interval records need exactly two fields")
    return [Interval(r[0], r[1]) for r in rows]


def read_vector_csv(path: Union[str, Path]) -> np.ndarray:
    """One value per line (first column); a header line is skipped."""
    return np.asarray([r[0] for r in _numeric_rows(path)], dtype=np.float64)


def read_correlation_matrix(path: Union[str, Path]) -> np.ndarray:
    """Dense whitespace-delimited square matrix."""
    return np.atleast_2d(np.loadtxt(Path(path), dtype=np.float64))
