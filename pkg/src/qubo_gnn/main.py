"""
Command-line interface for qubo_gnn.

This module exposes a Typer application with five commands:

* ``solve`` - train the GCN solver on one instance file and print the
  result as JSON.
* ``bench-regular`` / ``bench-gset`` - run the benchmark protocols and
  write a JSON report.
* ``oracle`` - exact minimum by brute force (small instances only).
* ``encode`` - turn application inputs into a QUBO text file.

Configuration comes from ``config/default.yaml``, an optional ``--config``
file and finally the command-line flags. Exit codes: 0 success, 1 bad
usage, configuration or input, 2 runtime failure.
"""

from __future__ import annotations

import json
import logging
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Tuple, Union

import click
import typer

from .applications import (
    build_mvc_qubo,
    build_wmis_qubo,
    interval_graph,
    threshold_correlation_graph,
)
from .baselines import brute_force_min
from .graphs import MAX_GENERATION_ATTEMPTS, Graph, complement_graph
from .hamiltonians import (
    PuboInstance,
    QuboInstance,
    build_max_clique_qubo,
    build_maxcut_qubo,
    build_mis_qubo,
    interaction_graph,
)
from .pipeline import BenchConfig, run_gset_benchmark, run_regular_benchmark
from .solver import ProblemKind, problem_metric, solve
from .stages import discover, parse, write
from .utils.config import AppConfig, load_config, load_gset_hyperparams
from .utils.logging import configure_logging
from .utils.metrics import SolverMetrics

logger = logging.getLogger(__name__)

app = typer.Typer(add_completion=False, help="GNN-based QUBO/PUBO solver and benchmark harness")

ENCODE_KINDS = ("maxcut", "mis", "clique", "wmis", "interval", "mvc")

FORMAT_OPTION = typer.Option("gset", "--format", help="Instance format: gset | edgelist | qubo | pubo")
CONFIG_OPTION = typer.Option(None, "--config", exists=True, dir_okay=False, help="Path to YAML configuration file")
VERBOSE_OPTION = typer.Option(False, "--verbose", help="Enable debug logging")


@contextmanager
def _cli_errors() -> Iterator[None]:
    """Map library failures onto exit codes 1 (bad input) and 2 (runtime)."""
    try:
        yield
    except typer.Exit:
        raise
    except click.ClickException as exc:
        exc.show()
        raise typer.Exit(code=1)
    except (ValueError, KeyError, OSError) as exc:
        typer.echo(f"Error: {exc}", err=True)
        raise typer.Exit(code=1)
    except KeyboardInterrupt:
        typer.echo("Interrupted by user", err=True)
        raise typer.Exit(code=1)
    except Exception as exc:
        logger.exception("Command failed", extra={"error": str(exc)})
        typer.echo(f"Error: {exc}", err=True)
        raise typer.Exit(code=2)


def _setup(config: Optional[Path], verbose: bool) -> Tuple[AppConfig, Optional[SolverMetrics]]:
    cfg = load_config(config)
    log_level = "DEBUG" if verbose else cfg.logging.level
    configure_logging(level=log_level, json_output=cfg.logging.json, file_path=cfg.logging.file)
    metrics = None
    if cfg.metrics.enabled:
        metrics = SolverMetrics(prefix=cfg.metrics.prefix)
        metrics.start_http_server(cfg.metrics.port)
    return cfg, metrics


def _apply_overrides(
    cfg: AppConfig,
    seed: Optional[int] = None,
    shots: Optional[int] = None,
    max_epochs: Optional[int] = None,
    lr: Optional[float] = None,
    patience: Optional[int] = None,
    tol: Optional[float] = None,
    penalty: Optional[float] = None,
    polish: Optional[bool] = None,
    threads: Optional[int] = None,
    truncate: Optional[bool] = None,
) -> AppConfig:
    """Return a copy of ``cfg`` with CLI overrides applied; ``None`` keeps the config value."""
    cfg = cfg.with_overrides(
        "train",
        seed=seed,
        shots=shots,
        max_epochs=max_epochs,
        learning_rate=lr,
        patience=patience,
        abs_tolerance=tol,
    )
    return cfg.with_overrides("solver", penalty=penalty, polish=polish, threads=threads, truncate=truncate)


def _emit(document: Dict[str, Any], out: Optional[Path]) -> None:
    if out is None:
        typer.echo(json.dumps(document, indent=2))
    else:
        write.write_json(out, document)
        typer.echo(f"Wrote {out}", err=True)


def _load_problem(
    instance: Path, fmt: str, problem: str, penalty: float
) -> Tuple[Graph, Union[QuboInstance, PuboInstance], ProblemKind]:
    """Instance file to (GCN graph, objective, problem kind)."""
    data = parse.read_instance(instance, fmt)
    if isinstance(data, (QuboInstance, PuboInstance)):
        if problem not in ("generic", "auto"):
            raise click.BadParameter(f"{fmt} files are solved as 'generic', not {problem!r}", param_hint="--problem")
        return interaction_graph(data), data, ProblemKind.GENERIC
    if problem in ("maxcut", "auto"):
        return data, build_maxcut_qubo(data), ProblemKind.MAXCUT
    if problem == "mis":
        return data, build_mis_qubo(data, penalty), ProblemKind.MIS
    if problem == "clique":
        return complement_graph(data), build_max_clique_qubo(data, penalty), ProblemKind.MIS
    raise click.BadParameter(f"unknown problem {problem!r} for a graph file", param_hint="--problem")


@app.command("solve")
def solve_command(
    instance: Path = typer.Argument(..., exists=True, dir_okay=False, help="Instance file"),
    fmt: str = FORMAT_OPTION,
    problem: str = typer.Option("auto", help="maxcut | mis | clique for graphs; generic for qubo/pubo"),
    seed: Optional[int] = typer.Option(None, help="Base seed; shot i uses seed + i"),
    shots: Optional[int] = typer.Option(None, min=1, help="Independent training shots"),
    max_epochs: Optional[int] = typer.Option(None, min=1, help="Epoch limit per shot"),
    lr: Optional[float] = typer.Option(None, help="Adam learning rate"),
    patience: Optional[int] = typer.Option(None, min=1, help="Early-stopping patience"),
    tol: Optional[float] = typer.Option(None, help="Early-stopping absolute tolerance"),
    penalty: Optional[float] = typer.Option(None, help="Constraint penalty P"),
    polish: Optional[bool] = typer.Option(None, "--polish/--no-polish", help="Greedy bit-flip polish"),
    truncate: Optional[bool] = typer.Option(None, "--truncate/--round", help="Project with int(p) instead of p >= 0.5"),
    threads: Optional[int] = typer.Option(None, min=1, help="Worker processes for shots"),
    out: Optional[Path] = typer.Option(None, help="Write the result JSON here instead of stdout"),
    save_model: Optional[Path] = typer.Option(None, "--save-model", help="Write the winning shot's parameters (.npz)"),
    config: Optional[Path] = CONFIG_OPTION,
    verbose: bool = VERBOSE_OPTION,
) -> None:
    """Solve one instance file and print the best solution found."""
    with _cli_errors():
        cfg, metrics = _setup(config, verbose)
        cfg = _apply_overrides(cfg, seed, shots, max_epochs, lr, patience, tol, penalty, polish, threads, truncate)
        g, q, kind = _load_problem(instance, fmt, problem, cfg.solver.penalty)
        result = solve(
            g,
            q,
            kind,
            cfg.train,
            polish=cfg.solver.polish,
            threshold=cfg.solver.threshold,
            truncate=cfg.solver.truncate,
            threads=cfg.solver.threads,
            model_path=save_model,
        )
        if metrics:
            metrics.shots_total.inc(result.shots_run)
            metrics.epochs_total.inc(result.epochs_run)
            metrics.best_metric.set(result.metric)
        document = {"instance": str(instance), "problem": problem if problem != "auto" else kind.value}
        document.update(result.to_record())
        _emit(document, out)


def _bench_config(cfg: AppConfig, **kwargs: Any) -> BenchConfig:
    return BenchConfig(train=cfg.train, solver=cfg.solver, settings=cfg.bench, **kwargs)


def _bench_settings(
    cfg: AppConfig,
    out: Optional[Path],
    csv: Optional[Path],
    rows: Optional[Path],
    checkpoint: Optional[Path],
) -> AppConfig:
    return cfg.with_overrides("bench", output_file=out, csv_file=csv, rows_file=rows, checkpoint_file=checkpoint)


def _exit_on_failed_rows(rows: List[Dict[str, Any]]) -> None:
    failed = [r["instance"] for r in rows if r["status"] != "ok"]
    if failed:
        typer.echo(f"{len(failed)} instance(s) failed: {', '.join(failed)}", err=True)
        raise typer.Exit(code=2)


@app.command("bench-regular")
def bench_regular(
    problem: str = typer.Option("maxcut", help="maxcut | mis"),
    d: int = typer.Option(3, "--d", min=1, help="Vertex degree"),
    sizes: List[int] = typer.Option([100], "--n", help="Graph size; repeat for a sweep"),
    instances: int = typer.Option(20, min=1, help="Random instances per size"),
    seed: int = typer.Option(0, help="Master seed for instance generation"),
    generation_attempts: int = typer.Option(
        MAX_GENERATION_ATTEMPTS, min=1, help="Pairing-model attempts per graph; raise for d >= 5"
    ),
    shots: Optional[int] = typer.Option(None, min=1),
    max_epochs: Optional[int] = typer.Option(None, min=1),
    lr: Optional[float] = typer.Option(None),
    patience: Optional[int] = typer.Option(None, min=1),
    tol: Optional[float] = typer.Option(None),
    penalty: Optional[float] = typer.Option(None),
    polish: Optional[bool] = typer.Option(None, "--polish/--no-polish"),
    threads: Optional[int] = typer.Option(None, min=1, help="Worker processes for instances"),
    out: Optional[Path] = typer.Option(None, help="Report JSON path"),
    csv: Optional[Path] = typer.Option(None, help="Optional CSV of report rows"),
    rows: Optional[Path] = typer.Option(None, help="JSONL file of completed rows"),
    checkpoint: Optional[Path] = typer.Option(None, help="Checkpoint file of completed row keys"),
    resume: bool = typer.Option(True, "--resume/--no-resume", help="Reuse rows completed by an earlier run"),
    config: Optional[Path] = CONFIG_OPTION,
    verbose: bool = VERBOSE_OPTION,
) -> None:
    """Benchmark on random d-regular graphs with bootstrap error bars."""
    with _cli_errors():
        cfg, metrics = _setup(config, verbose)
        cfg = _apply_overrides(cfg, None, shots, max_epochs, lr, patience, tol, penalty, polish, threads)
        cfg = _bench_settings(cfg, out, csv, rows, checkpoint)
        bench_cfg = _bench_config(
            cfg,
            problem=problem,
            d=d,
            sizes=tuple(sizes),
            instances=instances,
            master_seed=seed,
            generation_attempts=generation_attempts,
            resume=resume,
        )
        report = run_regular_benchmark(bench_cfg, metrics)
        typer.echo(json.dumps(report.aggregates, indent=2))
    _exit_on_failed_rows(report.rows)


@app.command("bench-gset")
def bench_gset(
    paths: List[Path] = typer.Argument(..., exists=True, help="Gset files or directories of them"),
    fmt: str = typer.Option("gset", "--format", help="gset | edgelist"),
    hyperparams: Optional[Path] = typer.Option(None, exists=True, dir_okay=False, help="Per-graph hyperparameter YAML"),
    shots: Optional[int] = typer.Option(None, min=1),
    max_epochs: Optional[int] = typer.Option(None, min=1),
    patience: Optional[int] = typer.Option(None, min=1),
    tol: Optional[float] = typer.Option(None),
    seed: Optional[int] = typer.Option(None),
    polish: Optional[bool] = typer.Option(None, "--polish/--no-polish"),
    threads: Optional[int] = typer.Option(None, min=1),
    out: Optional[Path] = typer.Option(None, help="Report JSON path"),
    csv: Optional[Path] = typer.Option(None, help="Optional CSV of report rows"),
    rows: Optional[Path] = typer.Option(None, help="JSONL file of completed rows"),
    checkpoint: Optional[Path] = typer.Option(None, help="Checkpoint file of completed row keys"),
    resume: bool = typer.Option(True, "--resume/--no-resume"),
    config: Optional[Path] = CONFIG_OPTION,
    verbose: bool = VERBOSE_OPTION,
) -> None:
    """MaxCut on Gset graphs with the per-graph architectures; reports relative error."""
    with _cli_errors():
        cfg, metrics = _setup(config, verbose)
        cfg = _apply_overrides(cfg, seed, shots, max_epochs, None, patience, tol, None, polish, threads)
        cfg = _bench_settings(cfg, out, csv, rows, checkpoint)
        files: List[Path] = []
        for p in paths:
            files.extend(discover.discover(p) if p.is_dir() else [p])
        if not files:
            raise click.BadParameter("no instance files found", param_hint="PATHS")
        table = load_gset_hyperparams(hyperparams or cfg.bench.hyperparams_file)
        bench_cfg = _bench_config(
            cfg,
            problem="maxcut",
            gset_paths=tuple(files),
            gset_format=fmt,
            hyperparams=table,
            master_seed=cfg.train.seed,
            resume=resume,
        )
        report = run_gset_benchmark(bench_cfg, metrics=metrics)
        summary = [
            {k: r.get(k) for k in ("instance", "status", "metric", "best_known", "epsilon", "wall_time_ms")}
            for r in report.rows
        ]
        typer.echo(json.dumps({"rows": summary, "aggregates": report.aggregates}, indent=2))
    _exit_on_failed_rows(report.rows)


@app.command("oracle")
def oracle(
    instance: Path = typer.Argument(..., exists=True, dir_okay=False),
    fmt: str = FORMAT_OPTION,
    problem: str = typer.Option("auto", help="maxcut | mis | clique for graphs; generic for qubo/pubo"),
    penalty: Optional[float] = typer.Option(None),
    unsafe: bool = typer.Option(False, "--unsafe", help="Allow more than 26 variables"),
    workers: int = typer.Option(1, min=1, help="Processes splitting the enumeration"),
    out: Optional[Path] = typer.Option(None),
    config: Optional[Path] = CONFIG_OPTION,
    verbose: bool = VERBOSE_OPTION,
) -> None:
    """Exact minimum energy by exhaustive enumeration."""
    with _cli_errors():
        cfg, _ = _setup(config, verbose)
        cfg = _apply_overrides(cfg, penalty=penalty)
        g, q, kind = _load_problem(instance, fmt, problem, cfg.solver.penalty)
        x, energy = brute_force_min(q, unsafe=unsafe, workers=workers)
        _emit(
            {
                "instance": str(instance),
                "problem": kind.value,
                "bitstring": "".join(str(int(b)) for b in x),
                "energy": energy,
                "metric": problem_metric(g, kind, x, energy),
            },
            out,
        )


@app.command("encode")
def encode(
    kind: str = typer.Argument(..., help="maxcut | mis | clique | wmis | interval | mvc"),
    graph: Optional[Path] = typer.Option(
        None, exists=True, dir_okay=False, help="Graph file (maxcut/mis/clique/wmis/mvc)"
    ),
    fmt: str = typer.Option("gset", "--format", help="Graph format: gset | edgelist"),
    returns: Optional[Path] = typer.Option(None, exists=True, dir_okay=False, help="CSV of expected returns (wmis)"),
    correlations: Optional[Path] = typer.Option(
        None, exists=True, dir_okay=False, help="Correlation matrix; builds the wmis conflict graph"
    ),
    lam: float = typer.Option(0.5, "--lambda", help="Correlation threshold for the conflict graph"),
    intervals: Optional[Path] = typer.Option(None, exists=True, dir_okay=False, help="CSV of start,end (interval)"),
    costs: Optional[Path] = typer.Option(None, exists=True, dir_okay=False, help="CSV of vertex costs (mvc)"),
    penalty: Optional[float] = typer.Option(None),
    out: Path = typer.Option(..., help="QUBO text file to write"),
    graph_out: Optional[Path] = typer.Option(None, help="Also write the underlying graph (edge-list format)"),
    config: Optional[Path] = CONFIG_OPTION,
    verbose: bool = VERBOSE_OPTION,
) -> None:
    """Encode a problem as a QUBO file readable by ``solve --format qubo``."""
    with _cli_errors():
        if kind not in ENCODE_KINDS:
            raise click.BadParameter(f"expected one of {ENCODE_KINDS}", param_hint="KIND")
        cfg, _ = _setup(config, verbose)
        P = penalty if penalty is not None else cfg.solver.penalty

        def need(value: Optional[Path], flag: str) -> Path:
            if value is None:
                raise click.BadParameter(f"{kind} needs {flag}", param_hint=flag)
            return value

        if kind == "interval":
            g = interval_graph(parse.read_intervals_csv(need(intervals, "--intervals")))
            q = build_mis_qubo(g, P)
        elif kind == "wmis" and correlations is not None:
            g = threshold_correlation_graph(parse.read_correlation_matrix(correlations), lam)
            q = build_wmis_qubo(g, parse.read_vector_csv(need(returns, "--returns")), P)
        else:
            g = parse.read_graph(need(graph, "--graph"), fmt)
            if kind == "maxcut":
                q = build_maxcut_qubo(g)
            elif kind == "mis":
                q = build_mis_qubo(g, P)
            elif kind == "clique":
                q = build_max_clique_qubo(g, P)
            elif kind == "wmis":
                q = build_wmis_qubo(g, parse.read_vector_csv(need(returns, "--returns")), P)
            else:
                q = build_mvc_qubo(g, parse.read_vector_csv(need(costs, "--costs")), P)
        write.write_text(out, write.format_qubo(q))
        if graph_out is not None:
            write.write_text(graph_out, write.format_edge_list(g))
        logger.info("Encoded instance", extra={"kind": kind, "n": q.n, "terms": len(q.terms), "out": str(out)})
        typer.echo(f"Wrote {kind} QUBO with {q.n} variables to {out}", err=True)


def main() -> None:
    """Entry point for console scripts."""
    try:
        code = app(standalone_mode=False)
    except click.exceptions.Abort:
        typer.echo("Aborted", err=True)
        code = 1
    except click.ClickException as exc:
        exc.show()
        code = 1
    sys.exit(code or 0)


if __name__ == "__main__":  # pragma: no cover - entry point
    main()
