"""
Benchmark orchestration.

:class:`BenchmarkPipeline` runs the two benchmark protocols:

* **regular** - for every size in the sweep, generate ``instances``
  random d-regular graphs (seeds derived from the master seed), solve
  MaxCut or MIS on each and aggregate the metric with bootstrap error
  bars, ratios to the large-n bounds and a training-time scaling fit.
* **gset** - solve MaxCut on benchmark files with a per-graph
  architecture and report the relative error against the best known cut.

Key features:

* **Idempotency** - each row is keyed by the graph hash plus the
  effective settings; completed rows are appended to a JSONL file and
  recorded in a checkpoint file, so an interrupted run resumes without
  re-solving.
* **Failure isolation** - an instance that fails is logged, counted and
  reported with ``status="failed"``; the run continues.
* **Concurrency** - instances run in a process pool when ``threads > 1``
  and are merged back in submission order, so the report does not
  depend on completion order. A single pending instance runs its shots
  on the workers instead.
* **Metrics** - counters, a phase histogram and the last metric gauge
  for Prometheus scraping.
"""

from __future__ import annotations

import logging
import threading
import time
from concurrent.futures import Future, ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .baselines import greedy_mis, random_cut_baseline, random_cut_expectation, theoretical_bounds
from .errors import ConfigError, UnsupportedDegreeError
from .graphs import MAX_GENERATION_ATTEMPTS, Graph, generate_d_regular
from .hamiltonians import build_maxcut_qubo, build_mis_qubo, independence_check
from .solver import ProblemKind, solve
from .stages import parse, write
from .stats import bootstrap_stats, relative_error, scaling_exponent
from .training import TrainConfig
from .utils import hashing
from .utils.checkpoints import CheckpointManager
from .utils.config import BenchSettings, GsetHyperparams, SolverConfig, lookup_hyperparams
from .utils.metrics import PhaseTimer, SolverMetrics

SCHEMA_VERSION = 1
RANDOM_CUT_REPEATS = 100
BENCH_PROBLEMS = (ProblemKind.MAXCUT.value, ProblemKind.MIS.value)
CSV_COLUMNS = (
    "instance",
    "status",
    "n",
    "d",
    "num_edges",
    "metric",
    "metric_per_n",
    "energy",
    "shot_index",
    "epoch_found",
    "wall_time_ms",
    "random_cut_best",
    "greedy_mis_size",
    "best_known",
    "epsilon",
    "error",
)


@dataclass(frozen=True)
class BenchConfig:
    """Everything a benchmark run needs besides the instance files themselves."""

    problem: str = ProblemKind.MAXCUT.value
    train: TrainConfig = field(default_factory=TrainConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    settings: BenchSettings = field(default_factory=BenchSettings)
    d: int = 3
    sizes: Tuple[int, ...] = (100,)
    instances: int = 20
    gset_paths: Tuple[Path, ...] = ()
    gset_format: str = "gset"
    hyperparams: Dict[str, GsetHyperparams] = field(default_factory=dict)
    master_seed: int = 0
    generation_attempts: int = MAX_GENERATION_ATTEMPTS
    resume: bool = True
    write_outputs: bool = True

    def __post_init__(self) -> None:
        if self.problem not in BENCH_PROBLEMS:
            raise ConfigError(f"benchmark problem must be one of {BENCH_PROBLEMS}, got {self.problem!r}")
        if self.instances < 1:
            raise ConfigError("instance count must be at least 1")
        if any(n < 1 for n in self.sizes):
            raise ConfigError("sizes must be positive")
        if self.generation_attempts < 1:
            raise ConfigError("generation_attempts must be at least 1")
        object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))
        object.__setattr__(self, "gset_paths", tuple(Path(p) for p in self.gset_paths))

    def echo(self) -> Dict[str, Any]:
        return {
            "problem": self.problem,
            "d": self.d,
            "sizes": list(self.sizes),
            "instances": self.instances,
            "gset_paths": [str(p) for p in self.gset_paths],
            "master_seed": self.master_seed,
            "train": self.train.to_dict(),
            "solver": asdict(self.solver),
            "bootstrap_resamples": self.settings.bootstrap_resamples,
        }


@dataclass
class BenchReport:
    kind: str
    config: Dict[str, Any]
    rows: List[Dict[str, Any]]
    aggregates: Dict[str, Any]
    timings: Dict[str, Any]
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema_version": self.schema_version,
            "kind": self.kind,
            "config": self.config,
            "rows": self.rows,
            "aggregates": self.aggregates,
            "timings": self.timings,
        }


@dataclass(frozen=True)
class InstanceJob:
    """One unit of work shipped to a worker process."""

    key: str
    name: str
    graph: Graph
    problem: str
    train: TrainConfig
    solver: SolverConfig
    extra: Dict[str, Any] = field(default_factory=dict)


def _mean_of(rows: Sequence[Dict[str, Any]], column: str) -> Optional[float]:
    values = [r[column] for r in rows if r.get(column) is not None]
    return float(np.mean(values)) if values else None


def instance_seed(master_seed: int, n: int, index: int) -> int:
    """Independent, reproducible generator seed for instance ``index`` of size ``n``."""
    return int(np.random.SeedSequence([master_seed, n, index]).generate_state(1)[0])


def solve_instance(job: InstanceJob) -> Dict[str, Any]:
    """Encode, solve and describe one instance as a report row."""
    g = job.graph
    penalty = job.solver.penalty
    q = build_maxcut_qubo(g) if job.problem == ProblemKind.MAXCUT.value else build_mis_qubo(g, penalty)
    timer = PhaseTimer()
    result = solve(
        g,
        q,
        job.problem,
        job.train,
        polish=job.solver.polish,
        threshold=job.solver.threshold,
        truncate=job.solver.truncate,
        threads=job.solver.threads,
        timer=timer,
    )
    row: Dict[str, Any] = {
        "key": job.key,
        "instance": job.name,
        "status": "ok",
        "n": g.n,
        "num_edges": g.num_edges,
        **job.extra,
        **result.to_record(),
        "epochs_run": result.epochs_run,
        "metric_per_n": result.metric / g.n if g.n else 0.0,
        "phases_ms": timer.as_ms(),
    }
    if job.problem == ProblemKind.MAXCUT.value:
        row["random_cut_expectation"] = random_cut_expectation(g)
        row["random_cut_best"] = random_cut_baseline(g, job.train.seed, RANDOM_CUT_REPEATS)
    else:
        row["violations"] = len(independence_check(g, result.bits)[1])
        row["greedy_mis_size"] = int(greedy_mis(g).sum())
    return row


class BenchmarkPipeline:
    """Benchmark orchestration.

    Parameters
    ----------
    config:
        Benchmark description; see :class:`BenchConfig`.
    metrics:
        Optional Prometheus metrics container.
    """

    def __init__(self, config: BenchConfig, metrics: Optional[SolverMetrics] = None) -> None:
        self.config = config
        self.metrics = metrics
        self.logger = logging.getLogger(__name__ + ".BenchmarkPipeline")
        self.timer = PhaseTimer(metrics)
        self.write_lock = threading.Lock()
        settings = config.settings
        self.checkpoints = CheckpointManager(settings.checkpoint_file) if config.write_outputs else None
        self._previous: Dict[str, Dict[str, Any]] = {}
        if config.resume and config.write_outputs:
            self._previous = {
                r["key"]: r for r in write.read_results(settings.rows_file) if r.get("status") == "ok"
            }

    # ----------------------------------------------------------- execution

    def _settings_key(self, graph: Graph, train: TrainConfig) -> str:
        settings = {
            "problem": self.config.problem,
            "train": train.to_dict(),
            "solver": asdict(replace(self.config.solver, threads=1)),
        }
        return hashing.row_key(hashing.hash_graph(graph), settings)

    def _cached(self, key: str) -> Optional[Dict[str, Any]]:
        if self.checkpoints is None or not self.checkpoints.is_processed(key):
            return None
        return self._previous.get(key)

    def _failed_row(self, job: InstanceJob, exc: BaseException) -> Dict[str, Any]:
        if self.metrics:
            self.metrics.errors_total.labels(stage="bench").inc()
            self.metrics.instances_total.labels(status="failed").inc()
        self.logger.exception(
            "Instance failed", extra={"instance": job.name, "stage": "bench", "error": str(exc)}
        )
        return {
            "key": job.key,
            "instance": job.name,
            "status": "failed",
            "n": job.graph.n,
            "num_edges": job.graph.num_edges,
            **job.extra,
            "error": f"{type(exc).__name__}: {exc}",
        }

    def _completed(self, row: Dict[str, Any]) -> Dict[str, Any]:
        self.timer.merge({k: v / 1000.0 for k, v in row.get("phases_ms", {}).items()})
        if self.config.write_outputs:
            write.write_result(self.config.settings.rows_file, row, self.write_lock)
            self.checkpoints.mark_processed(row["key"])
        if self.metrics:
            self.metrics.instances_total.labels(status="ok").inc()
            self.metrics.shots_total.inc(row["shots_run"])
            self.metrics.epochs_total.inc(row.get("epochs_run", 0))
            self.metrics.best_metric.set(row["metric"])
        self.logger.info(
            "Instance solved",
            extra={
                "instance": row["instance"],
                "stage": "bench",
                "metric": row["metric"],
                "duration_ms": row["wall_time_ms"],
            },
        )
        return row

    def _execute(self, jobs: Sequence[InstanceJob]) -> List[Dict[str, Any]]:
        """Run ``jobs`` and return their rows in submission order."""
        rows: List[Optional[Dict[str, Any]]] = [None] * len(jobs)
        pending: List[int] = []
        for i, job in enumerate(jobs):
            cached = self._cached(job.key)
            if cached is not None:
                self.logger.debug("Skipping already solved instance", extra={"instance": job.name})
                rows[i] = cached
            else:
                pending.append(i)

        threads = self.config.solver.threads
        if threads > 1 and len(pending) > 1:
            with ProcessPoolExecutor(max_workers=min(threads, len(pending))) as pool:
                futures: Dict[int, Future] = {i: pool.submit(solve_instance, jobs[i]) for i in pending}
                for i in pending:
                    try:
                        rows[i] = self._completed(futures[i].result())
                    except Exception as exc:
                        rows[i] = self._failed_row(jobs[i], exc)
        else:
            # A lone instance hands every worker to its shots.
            for i in pending:
                job = replace(jobs[i], solver=replace(jobs[i].solver, threads=max(threads, 1)))
                try:
                    rows[i] = self._completed(solve_instance(job))
                except Exception as exc:
                    rows[i] = self._failed_row(jobs[i], exc)
        return [r for r in rows if r is not None]

    def _solver_for_jobs(self) -> SolverConfig:
        # Shots run serially inside instance workers; _execute raises this for a lone instance.
        return replace(self.config.solver, threads=1)

    # ----------------------------------------------------------- protocols

    def run_regular(self) -> BenchReport:
        """Generated d-regular sweep."""
        cfg = self.config
        self.logger.info(
            "Starting regular benchmark",
            extra={"problem": cfg.problem, "d": cfg.d, "sizes": list(cfg.sizes), "instances": cfg.instances},
        )
        start = time.perf_counter()
        jobs: List[InstanceJob] = []
        generation_failures: List[Dict[str, Any]] = []
        train, solver = cfg.train, self._solver_for_jobs()
        for n in cfg.sizes:
            for i in range(cfg.instances):
                seed = instance_seed(cfg.master_seed, n, i)
                name = f"d{cfg.d}-n{n}-{i}"
                extra = {"d": cfg.d, "index": i, "seed": seed}
                try:
                    with self.timer.phase("generation"):
                        g = generate_d_regular(n, cfg.d, seed, cfg.generation_attempts)
                except Exception as exc:
                    if self.metrics:
                        self.metrics.errors_total.labels(stage="generation").inc()
                        self.metrics.instances_total.labels(status="failed").inc()
                    self.logger.exception("Generation failed", extra={"instance": name, "error": str(exc)})
                    generation_failures.append(
                        {"instance": name, "status": "failed", "n": n, **extra,
                         "error": f"{type(exc).__name__}: {exc}"}
                    )
                    continue
                key = self._settings_key(g, train)
                jobs.append(InstanceJob(key, name, g, cfg.problem, train, solver, extra))

        rows = self._execute(jobs) + generation_failures
        rows.sort(key=lambda r: (r["n"], r["index"]))
        aggregates = self._regular_aggregates(rows)
        return self._finish("regular", rows, aggregates, start)

    def _regular_aggregates(self, rows: List[Dict[str, Any]]) -> Dict[str, Any]:
        cfg = self.config
        resamples = cfg.settings.bootstrap_resamples
        per_size = []
        for n in cfg.sizes:
            group = [r for r in rows if r["n"] == n]
            ok = [r for r in group if r["status"] == "ok"]
            entry: Dict[str, Any] = {"n": n, "instances": len(group), "ok": len(ok), "failed": len(group) - len(ok)}
            if ok:
                mean, two_sigma = bootstrap_stats([r["metric"] for r in ok], resamples, cfg.master_seed)
                mean_n, two_sigma_n = bootstrap_stats([r["metric_per_n"] for r in ok], resamples, cfg.master_seed)
                entry.update(
                    metric_mean=mean,
                    metric_two_sigma=two_sigma,
                    metric_per_n_mean=mean_n,
                    metric_per_n_two_sigma=two_sigma_n,
                    training_ms_mean=float(np.mean([r["phases_ms"].get("training", 0.0) for r in ok])),
                    wall_time_ms_mean=float(np.mean([r["wall_time_ms"] for r in ok])),
                )
                try:
                    bound = theoretical_bounds(cfg.problem, cfg.d, n)
                except UnsupportedDegreeError:
                    bound = None
                entry["bound"] = bound
                entry["bound_ratio"] = mean / bound if bound else None
                if cfg.problem == ProblemKind.MAXCUT.value:
                    entry["random_cut_expectation"] = float(
                        np.mean([r["random_cut_expectation"] for r in ok])
                    )
                    entry["random_cut_best_mean"] = _mean_of(ok, "random_cut_best")
                if cfg.problem == ProblemKind.MIS.value:
                    entry["violations"] = int(sum(r.get("violations", 0) for r in ok))
                    entry["greedy_mis_size_mean"] = _mean_of(ok, "greedy_mis_size")
            per_size.append(entry)

        aggregates: Dict[str, Any] = {"per_size": per_size, "training_scaling_exponent": None}
        fitted = [e for e in per_size if e.get("training_ms_mean", 0.0) > 0]
        if len({e["n"] for e in fitted}) >= 2:
            aggregates["training_scaling_exponent"] = scaling_exponent(
                [e["n"] for e in fitted], [e["training_ms_mean"] for e in fitted]
            )
        return aggregates

    def run_gset(self, best_known: Optional[Dict[str, float]] = None) -> BenchReport:
        """MaxCut on benchmark files with per-graph hyperparameters."""
        cfg = self.config
        if cfg.problem != ProblemKind.MAXCUT.value:
            raise ConfigError("the Gset benchmark solves MaxCut only")
        missing = [p for p in cfg.gset_paths if not p.is_file()]
        if missing:
            raise FileNotFoundError(f"instance files not found: {[str(p) for p in missing]}")
        # Fail before any solving when a graph has no architecture.
        rows_hp = {p: lookup_hyperparams(cfg.hyperparams, p.stem) for p in cfg.gset_paths}
        reference = dict(best_known or {})

        self.logger.info("Starting Gset benchmark", extra={"graphs": [p.stem for p in cfg.gset_paths]})
        start = time.perf_counter()
        jobs = []
        solver = self._solver_for_jobs()
        for path, hp in rows_hp.items():
            with self.timer.phase("parse"):
                g = parse.read_graph(path, cfg.gset_format)
            train = hp.apply(cfg.train)
            known = reference.get(hp.name, hp.best_known)
            extra = {
                "path": str(path),
                "best_known": known,
                "hyperparams": {
                    "embedding_dim": hp.embedding_dim,
                    "hidden_dims": list(hp.hidden_dims),
                    "learning_rate": hp.learning_rate,
                    "dropout": hp.dropout,
                },
            }
            jobs.append(InstanceJob(self._settings_key(g, train), hp.name, g, cfg.problem, train, solver, extra))

        rows = self._execute(jobs)
        for row in rows:
            known = row.get("best_known")
            if row["status"] == "ok" and known is not None and row["num_edges"] > 0:
                row["epsilon"] = relative_error(known, row["metric"], row["num_edges"])
        eps = [r["epsilon"] for r in rows if r.get("epsilon") is not None]
        aggregates = {
            "graphs": len(rows),
            "ok": sum(r["status"] == "ok" for r in rows),
            "epsilon_mean": float(np.mean(eps)) if eps else None,
        }
        return self._finish("gset", rows, aggregates, start)

    # ------------------------------------------------------------- output

    def _finish(
        self, kind: str, rows: List[Dict[str, Any]], aggregates: Dict[str, Any], start: float
    ) -> BenchReport:
        total_ms = (time.perf_counter() - start) * 1000.0
        report = BenchReport(
            kind=kind,
            config=self.config.echo(),
            rows=rows,
            aggregates=aggregates,
            timings={"total_ms": round(total_ms, 3), "phases_ms": self.timer.as_ms()},
        )
        settings = self.config.settings
        if self.config.write_outputs:
            write.write_json(settings.output_file, report.to_dict())
            if settings.csv_file is not None:
                write.write_rows_csv(settings.csv_file, rows, CSV_COLUMNS)
        self.logger.info(
            "Benchmark complete",
            extra={
                "kind": kind,
                "rows": len(rows),
                "failed": sum(r["status"] != "ok" for r in rows),
                "duration_ms": round(total_ms, 2),
            },
        )
        return report


def run_regular_benchmark(cfg: BenchConfig, metrics: Optional[SolverMetrics] = None) -> BenchReport:
    return BenchmarkPipeline(cfg, metrics).run_regular()


def run_gset_benchmark(
    cfg: BenchConfig,
    best_known: Optional[Dict[str, float]] = None,
    metrics: Optional[SolverMetrics] = None,
) -> BenchReport:
    return BenchmarkPipeline(cfg, metrics).run_gset(best_known)
