"""
Checkpoint management for resumable benchmarks.

A checkpoint file records the row keys (see
:func:`qubo_gnn.utils.hashing.row_key`) of benchmark instances that
finished. Together with the JSONL rows file this lets an interrupted
benchmark resume without re-solving instances. The format is one key
per line.
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Set


class CheckpointManager:
    """Read and append completed row keys.

    Existing keys are loaded on initialisation. :meth:`mark_processed`
    updates both the in-memory set and the file under a lock.
    """

    def __init__(self, path: Path) -> None:
        self._path = path
        self._lock = threading.Lock()
        self.processed: Set[str] = set()
        path.parent.mkdir(parents=True, exist_ok=True)
        if path.exists():
            with path.open("r", encoding="utf-8") as f:
                self.processed.update(line.strip() for line in f if line.strip())

    def is_processed(self, key: str) -> bool:
        return key in self.processed

    def mark_processed(self, key: str) -> None:
        """Record a row key; duplicates are ignored."""
        with self._lock:
            if key not in self.processed:
                with self._path.open("a", encoding="utf-8") as f:
                    f.write(key + "\n")
                self.processed.add(key)
