"""
Prometheus metrics instrumentation.

This module wraps the ``prometheus_client`` library to expose the
counters, histograms and gauges recorded while solving and
benchmarking. :class:`PhaseTimer` accumulates wall time per phase
(generation, training, postprocess) for the benchmark report and feeds
the phase histogram when metrics are enabled.
"""

from __future__ import annotations

import time
from collections import defaultdict
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Dict, Iterator, Optional

from prometheus_client import CollectorRegistry, Counter, Gauge, Histogram, start_http_server


@dataclass
class SolverMetrics:
    """Container for Prometheus metrics used by the solver.

    Metrics register in their own :class:`CollectorRegistry` unless one
    is given, so several instances can coexist in one process (tests,
    repeated CLI invocations).
    """

    prefix: str = "qubo_gnn"
    registry: Optional[CollectorRegistry] = None

    def __post_init__(self) -> None:
        if self.registry is None:
            self.registry = CollectorRegistry()
        name = lambda suffix: f"{self.prefix}_{suffix}"  # noqa: E731
        reg = self.registry
        self.shots_total = Counter(name("shots_total"), "Training shots completed", registry=reg)
        self.epochs_total = Counter(name("epochs_total"), "Training epochs run", registry=reg)
        self.instances_total = Counter(
            name("instances_total"), "Benchmark instances processed", ["status"], registry=reg
        )
        self.errors_total = Counter(name("errors_total"), "Total number of errors", ["stage"], registry=reg)
        self.phase_seconds = Histogram(
            name("phase_seconds"),
            "Wall time spent per phase",
            ["phase"],
            buckets=(0.01, 0.1, 0.5, 1.0, 5.0, 30.0, 60.0, 300.0, 1800.0),
            registry=reg,
        )
        self.best_metric = Gauge(name("best_metric"), "Metric of the last solved instance", registry=reg)

    def start_http_server(self, port: int = 8000) -> None:
        """Expose the metrics endpoint on ``/metrics``."""
        start_http_server(port, registry=self.registry)


class PhaseTimer:
    """Accumulate wall-clock seconds per named phase."""

    def __init__(self, metrics: Optional[SolverMetrics] = None) -> None:
        self.metrics = metrics
        self.totals: Dict[str, float] = defaultdict(float)

    @contextmanager
    def phase(self, name: str) -> Iterator[None]:
        t0 = time.perf_counter()
        try:
            yield
        finally:
            elapsed = time.perf_counter() - t0
            self.totals[name] += elapsed
            if self.metrics is not None:
                self.metrics.phase_seconds.labels(phase=name).observe(elapsed)

    def merge(self, totals: Dict[str, float]) -> None:
        for name, seconds in totals.items():
            self.totals[name] += seconds

    def as_ms(self) -> Dict[str, float]:
        return {name: round(s * 1000.0, 3) for name, s in sorted(self.totals.items())}
