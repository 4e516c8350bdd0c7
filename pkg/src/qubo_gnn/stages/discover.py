"""
Instance discovery stage.

Finds instance files for ``bench-gset`` when a directory is given
instead of explicit paths. Files are yielded from ``input_dir`` (not
recursively) if their suffix matches a known instance layout; hidden
files are ignored. Order is sorted by name so runs are reproducible.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterator


SUPPORTED_SUFFIXES = {"", ".txt", ".gset"}


def discover(input_dir: Path) -> Iterator[Path]:
    """Yield instance files directly within ``input_dir``.

    Parameters
    ----------
    input_dir:
        Directory to search.

    Yields
    ------
    pathlib.Path
        Paths to files that should be benchmarked, sorted by name.
    """

    root = Path(input_dir)
    if not root.exists() or not root.is_dir():
        return
    for path in sorted(root.iterdir()):
        if path.is_file() and not path.name.startswith("."):
            if path.suffix.lower() in SUPPORTED_SUFFIXES:
                yield path
