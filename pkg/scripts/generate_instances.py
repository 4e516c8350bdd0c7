#!/usr/bin/env python3
"""
Write seeded random d-regular graphs to disk for use with qubo-gnn.

Instances are written in the 0-based edge-list format (``--format
edgelist``) or the 1-based Gset format, one file per instance, named
``d<d>_n<n>_<i>.txt``. The generator seed of instance ``i`` is derived
from the master seed exactly as ``bench-regular`` derives it, so a
saved instance is the same graph the benchmark solves.

Usage on the command line:

    python scripts/generate_instances.py --output-dir ./instances --n 100 --n 1000 --count 20
"""

from __future__ import annotations

from pathlib import Path
from typing import List

import typer

from qubo_gnn.graphs import generate_d_regular
from qubo_gnn.pipeline import instance_seed
from qubo_gnn.stages.write import format_edge_list, format_gset, write_text


app = typer.Typer(add_completion=False, help="Generate random d-regular benchmark instances.")


@app.command()
def generate(
    output_dir: Path = typer.Option(
        Path("./instances"),
        file_okay=False,
        dir_okay=True,
        help="Directory to write instance files into.",
    ),
    sizes: List[int] = typer.Option([100], "--n", min=1, help="Vertex count; repeat for several sizes."),
    d: int = typer.Option(3, "--d", min=1, help="Vertex degree."),
    count: int = typer.Option(20, min=1, help="Instances per size."),
    seed: int = typer.Option(0, help="Master seed."),
    fmt: str = typer.Option("edgelist", "--format", help="edgelist | gset"),
) -> None:
    """Generate ``count`` instances per size.

    Raises
    ------
    typer.BadParameter
        If the format is unknown.
    """
    if fmt not in ("edgelist", "gset"):
        raise typer.BadParameter("format must be 'edgelist' or 'gset'")
    render = format_edge_list if fmt == "edgelist" else format_gset

    written = 0
    for n in sizes:
        for i in range(count):
            g = generate_d_regular(n, d, instance_seed(seed, n, i))
            write_text(output_dir / f"d{d}_n{n}_{i}.txt", render(g))
            written += 1

    typer.echo(f"Generated {written} instances in {output_dir}")


if __name__ == "__main__":
    app()
