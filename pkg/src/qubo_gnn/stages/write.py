"""
Output writing stage.

Benchmark rows are appended to a JSON Lines file as they complete;
concurrent writers are synchronised by a lock passed into
``write_result``. The remaining helpers serialise reports (JSON, CSV)
and instances (Gset, edge list, QUBO, PUBO text) in the formats read
back by :mod:`qubo_gnn.stages.parse`.
"""

from __future__ import annotations

import csv
import json
import threading
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

from ..graphs import Graph
from ..hamiltonians import PuboInstance, QuboInstance


def write_result(output_file: Path, result: Dict[str, Any], lock: threading.Lock) -> None:
    """Append one benchmark row to the output JSONL file.

    Parameters
    ----------
    output_file:
        Path to the output .jsonl file. Parent directories will be
        created if necessary.
    result:
        A JSON-serialisable dictionary.
    lock:
        Held while writing so that concurrent workers never interleave lines.
    """

    output_file.parent.mkdir(parents=True, exist_ok=True)
    line = json.dumps(result, ensure_ascii=False)
    with lock:
        with output_file.open("a", encoding="utf-8") as f:
            f.write(line + "\n")


def read_results(path: Path) -> List[Dict[str, Any]]:
    """Rows previously appended with :func:`write_result`; missing file gives ``[]``."""
    if not path.exists():
        return []
    with path.open("r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def write_json(path: Path, document: Dict[str, Any]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(document, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def write_rows_csv(path: Path, rows: Sequence[Dict[str, Any]], columns: Sequence[str]) -> None:
    """Flat CSV of report rows; nested values are JSON-encoded, missing ones left blank."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(columns), extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(
                {k: json.dumps(v) if isinstance(v, (dict, list)) else v for k, v in row.items()}
            )


def _fmt(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else repr(float(value))


def _graph_lines(g: Graph, shift: int) -> Iterable[str]:
    yield f"{g.n} {g.num_edges}"
    for u, v, w in g.edges:
        yield f"{u + shift} {v + shift} {_fmt(w)}"


def format_gset(g: Graph) -> str:
    return "\n".join(_graph_lines(g, shift=1)) + "\n"


def format_edge_list(g: Graph) -> str:
    return "\n".join(_graph_lines(g, shift=0)) + "\n"


def format_qubo(q: QuboInstance) -> str:
    lines = [str(q.n)]
    lines.extend(f"{i} {j} {_fmt(c)}" for (i, j), c in sorted(q.terms.items()))
    if q.offset:
        lines.append(f"offset {_fmt(q.offset)}")
    return "\n".join(lines) + "\n"


def format_pubo(p: PuboInstance) -> str:
    lines = [str(p.n)]
    for idx, c in p.terms:
        lines.append(" ".join([str(len(idx)), *map(str, idx), _fmt(c)]))
    if p.offset:
        lines.append(f"offset {_fmt(p.offset)}")
    return "\n".join(lines) + "\n"


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
