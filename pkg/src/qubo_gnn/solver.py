"""
Multi-shot solve orchestration.

:func:`solve` runs ``cfg.shots`` independent training shots (seed
``cfg.seed + shot_index``), streams every epoch's projected candidate
through the problem-specific feasibility step, optionally polishes the
best candidate of each shot, and returns the minimum-energy feasible
bitstring. Ties are broken by ``(shot_index, epoch)`` so the result does
not depend on the order in which concurrent shots finish.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from enum import Enum
from typing import Any, Dict, List, Optional, Union

import numpy as np

from .errors import EmptyCandidatePoolError
from .gcn import EmbeddingTable, GcnModel, save_checkpoint
from .graphs import Graph
from .hamiltonians import PuboInstance, QuboInstance, cut_size
from .stages.postprocess import greedy_bitflip_polish, repair_mis
from .training import TrainConfig, train_single_shot
from .utils.metrics import PhaseTimer

logger = logging.getLogger(__name__)

Objective = Union[QuboInstance, PuboInstance]


class ProblemKind(str, Enum):
    MAXCUT = "maxcut"
    MIS = "mis"
    GENERIC = "generic"


@dataclass(frozen=True)
class SolveResult:
    """Best bitstring found plus provenance.

    Build through :meth:`build` so that ``energy`` is always recomputed
    from the bitstring. ``epochs_run`` totals the epochs of every shot.
    """

    bitstring: str
    energy: float
    metric: float
    shot_index: int
    epoch_found: int
    wall_time_ms: float
    shots_run: int
    repaired: bool
    epochs_run: int = field(default=0, compare=False, metadata={"record": False})

    @classmethod
    def build(
        cls,
        g: Graph,
        q: Objective,
        kind: ProblemKind,
        x: np.ndarray,
        shot_index: int,
        epoch_found: int,
        wall_time_ms: float,
        shots_run: int,
        repaired: bool,
        epochs_run: int = 0,
    ) -> "SolveResult":
        energy = q.energy(x)
        return cls(
            bitstring="".join("1" if b else "0" for b in x),
            energy=energy,
            metric=problem_metric(g, kind, x, energy),
            shot_index=shot_index,
            epoch_found=epoch_found,
            wall_time_ms=wall_time_ms,
            shots_run=shots_run,
            repaired=repaired,
            epochs_run=epochs_run,
        )

    @property
    def bits(self) -> np.ndarray:
        return np.frombuffer(self.bitstring.encode("ascii"), dtype=np.uint8) - ord("0")

    def to_record(self) -> Dict[str, Any]:
        """Flat record of the result fields; ``epochs_run`` stays out."""
        return {f.name: getattr(self, f.name) for f in fields(self) if f.metadata.get("record", True)}


def problem_metric(g: Graph, kind: ProblemKind, x: np.ndarray, energy: float) -> float:
    """Cut weight for MaxCut, set size for MIS, ``-energy`` otherwise."""
    kind = ProblemKind(kind)
    if kind is ProblemKind.MAXCUT:
        return cut_size(g, x)
    if kind is ProblemKind.MIS:
        return float(np.count_nonzero(x))
    return -energy


@dataclass
class ShotOutcome:
    shot_index: int
    bitstring: np.ndarray
    energy: float
    epoch: int
    repaired: bool
    epochs_run: int
    stop_reason: str
    model: Optional[GcnModel] = field(default=None, repr=False)
    embedding: Optional[EmbeddingTable] = field(default=None, repr=False)


class _FeasiblePool:
    """Keeps the best feasible candidate seen during one shot."""

    def __init__(self, g: Graph, q: Objective, kind: ProblemKind) -> None:
        self.g = g
        self.q = q
        self.kind = kind
        self.best: Optional[ShotOutcome] = None

    def __call__(self, x: np.ndarray, epoch: int) -> None:
        repaired = False
        if self.kind is ProblemKind.MIS:
            fixed = repair_mis(self.g, x)
            repaired = not np.array_equal(fixed, x)
            x = fixed
        energy = self.q.energy(x)
        if self.best is None or energy < self.best.energy:
            self.best = ShotOutcome(
                shot_index=-1,
                bitstring=x.copy(),
                energy=energy,
                epoch=epoch,
                repaired=repaired,
                epochs_run=0,
                stop_reason="",
            )


def _run_shot(
    g: Graph,
    q: Objective,
    kind: ProblemKind,
    cfg: TrainConfig,
    shot_index: int,
    threshold: float,
    truncate: bool,
    keep_model: bool = False,
) -> ShotOutcome:
    pool = _FeasiblePool(g, q, kind)
    trace = train_single_shot(
        g, q, cfg, cfg.seed + shot_index, threshold=threshold, truncate=truncate, candidate_hook=pool
    )
    outcome = pool.best
    if outcome is None:
        raise EmptyCandidatePoolError(f"shot {shot_index} produced no candidates")
    outcome.shot_index = shot_index
    outcome.epochs_run = trace.epochs_run
    outcome.stop_reason = trace.stop_reason.value
    if keep_model:
        outcome.model, outcome.embedding = trace.model, trace.embedding
    return outcome


def _polish(g: Graph, q: Objective, kind: ProblemKind, outcome: ShotOutcome) -> ShotOutcome:
    x = greedy_bitflip_polish(q, outcome.bitstring)
    repaired = outcome.repaired
    if kind is ProblemKind.MIS:
        fixed = repair_mis(g, x)
        repaired = repaired or not np.array_equal(fixed, x)
        x = fixed
    energy = q.energy(x)
    if energy >= outcome.energy:
        return outcome
    return replace(outcome, bitstring=x, energy=energy, repaired=repaired)


def run_shots(
    g: Graph,
    q: Objective,
    kind: ProblemKind,
    cfg: TrainConfig,
    threshold: float = 0.5,
    truncate: bool = False,
    threads: int = 1,
    keep_model: bool = False,
) -> List[ShotOutcome]:
    """Run every shot, concurrently when ``threads > 1``, ordered by shot index."""
    if threads <= 1 or cfg.shots == 1:
        return [_run_shot(g, q, kind, cfg, i, threshold, truncate, keep_model) for i in range(cfg.shots)]
    with ProcessPoolExecutor(max_workers=min(threads, cfg.shots)) as pool:
        futures = [
            pool.submit(_run_shot, g, q, kind, cfg, i, threshold, truncate, keep_model) for i in range(cfg.shots)
        ]
        outcomes = [f.result() for f in futures]
    return sorted(outcomes, key=lambda o: o.shot_index)


def solve(
    g: Graph,
    q: Objective,
    problem_kind: Union[ProblemKind, str],
    cfg: TrainConfig,
    polish: bool = False,
    threshold: float = 0.5,
    truncate: bool = False,
    threads: int = 1,
    timer: Optional[PhaseTimer] = None,
    model_path: Optional[Union[str, Path]] = None,
) -> SolveResult:
    """Solve ``q`` on graph ``g`` with ``cfg.shots`` independent training shots.

    With ``model_path`` set, the final parameters of the winning shot are
    written there as an ``.npz`` checkpoint.
    """
    kind = ProblemKind(problem_kind)
    timer = timer or PhaseTimer()
    start = time.perf_counter()
    with timer.phase("training"):
        outcomes = run_shots(g, q, kind, cfg, threshold, truncate, threads, keep_model=model_path is not None)
    with timer.phase("postprocess"):
        if polish:
            outcomes = [_polish(g, q, kind, o) for o in outcomes]
        if not outcomes:
            raise EmptyCandidatePoolError("no shots were run")
        best = min(outcomes, key=lambda o: (o.energy, o.shot_index, o.epoch))
        wall_ms = (time.perf_counter() - start) * 1000.0
        result = SolveResult.build(
            g,
            q,
            kind,
            best.bitstring,
            shot_index=best.shot_index,
            epoch_found=best.epoch,
            wall_time_ms=wall_ms,
            shots_run=len(outcomes),
            repaired=best.repaired,
            epochs_run=sum(o.epochs_run for o in outcomes),
        )
    if model_path is not None:
        save_checkpoint(model_path, best.model, best.embedding, seed=cfg.seed + best.shot_index)
        logger.info("Saved model", extra={"path": str(model_path), "shot": best.shot_index})
    logger.info(
        "Solve complete",
        extra={
            "problem": kind.value,
            "n": g.n,
            "energy": result.energy,
            "metric": result.metric,
            "shot": result.shot_index,
            "epoch": result.epoch_found,
            "duration_ms": round(wall_ms, 2),
        },
    )
    return result
