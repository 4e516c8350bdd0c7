"""
Hashing utilities.

Benchmark rows are identified by SHA-256 digests: a graph by its
canonical edge list, and a row by the graph plus the effective training
configuration. If the same row key shows up twice the benchmark
recognises it and skips the work.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any, Dict

from ..graphs import Graph


def hash_graph(g: Graph) -> str:
    """Digest of the canonical ``(n, edges)``; equal graphs hash equally."""
    sha256 = hashlib.sha256(f"{g.n}\n".encode("ascii"))
    for u, v, w in g.edges:
        sha256.update(f"{u} {v} {w!r}\n".encode("ascii"))
    return sha256.hexdigest()


def row_key(graph_hash: str, settings: Dict[str, Any]) -> str:
    payload = json.dumps(settings, sort_keys=True, default=str)
    return hashlib.sha256(f"{graph_hash}:{payload}".encode("utf-8")).hexdigest()
