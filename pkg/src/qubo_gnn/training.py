"""
Single-shot unsupervised training of the GCN against a relaxed objective.

One shot initialises fresh parameters from ``shot_seed``, then loops
forward → relaxed loss → backward → Adam until early stopping fires or
``max_epochs`` is reached. After every epoch the soft assignment is
projected to a bitstring and the best candidate by true (binary) energy
is kept, so the pool of candidates costs nothing extra beyond one
energy evaluation per distinct bitstring.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Tuple

import numpy as np

from .errors import ConfigError, DimensionMismatchError, NonFiniteLossError
from .gcn import (
    AdamState,
    Aggregation,
    EmbeddingTable,
    GcnModel,
    aggregation_operator,
    apply_adam,
    backward,
    forward,
    hyperparams_default,
    init_parameters,
    trainable,
)
from .graphs import Graph
from .hamiltonians import RelaxedObjective
from .stages.postprocess import project

logger = logging.getLogger(__name__)

CandidateHook = Callable[[np.ndarray, int], None]


@dataclass(frozen=True)
class TrainConfig:
    """Training schedule and architecture for one solve.

    ``embedding_dim``/``hidden_dims`` left as ``None`` fall back to
    :func:`qubo_gnn.gcn.hyperparams_default`.
    """

    max_epochs: int = 100_000
    abs_tolerance: float = 1e-4
    patience: int = 1000
    learning_rate: float = 1e-4
    shots: int = 5
    seed: int = 0
    dropout: float = 0.0
    embedding_dim: Optional[int] = None
    hidden_dims: Optional[Tuple[int, ...]] = None
    aggregation: str = Aggregation.MEAN.value
    min_width: int = 4

    def __post_init__(self) -> None:
        if self.max_epochs < 1 or self.patience < 1 or self.shots < 1:
            raise ConfigError("max_epochs, patience and shots must be positive integers")
        if not (self.abs_tolerance > 0 and self.learning_rate > 0):
            raise ConfigError("abs_tolerance and learning_rate must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must lie in [0, 1), got {self.dropout}")
        if self.embedding_dim is not None and self.embedding_dim < 1:
            raise ConfigError("embedding_dim must be positive")
        if self.min_width < 1:
            raise ConfigError("min_width must be positive")
        if self.hidden_dims is not None:
            object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
            if any(h < 1 for h in self.hidden_dims):
                raise ConfigError("hidden_dims must be positive")
        try:
            Aggregation(self.aggregation)
        except ValueError as exc:
            raise ConfigError(f"unknown aggregation {self.aggregation!r}") from exc

    def layer_dims(self, n: int) -> Tuple[int, ...]:
        """Widths ``(d0, *hidden, 1)`` for an ``n``-vertex graph.

        With neither width given, the size rule is floored at ``min_width``
        so small graphs do not train through a single hidden unit.
        """
        d0, d1 = hyperparams_default(n)
        if self.embedding_dim is None and self.hidden_dims is None:
            d0, d1 = max(d0, self.min_width), max(d1, self.min_width)
        if self.embedding_dim is not None:
            d0 = self.embedding_dim
            d1 = max(d0 // 2, 1)
        hidden = self.hidden_dims if self.hidden_dims is not None else (d1,)
        return (d0, *hidden, 1)

    def to_dict(self) -> dict:
        data = asdict(self)
        if data["hidden_dims"] is not None:
            data["hidden_dims"] = list(data["hidden_dims"])
        return data


class StopReason(str, Enum):
    CONVERGED = "converged"
    MAX_EPOCHS = "max_epochs"


@dataclass
class Candidate:
    bitstring: np.ndarray
    energy: float
    epoch: int


@dataclass
class TrainTrace:
    loss_history: List[float]
    best_candidate: Candidate
    epochs_run: int
    stop_reason: StopReason
    shot_seed: int = 0
    runtime_ms: float = 0.0
    model: Optional[GcnModel] = field(default=None, repr=False)
    embedding: Optional[EmbeddingTable] = field(default=None, repr=False)


def train_single_shot(
    g: Graph,
    objective: RelaxedObjective,
    cfg: TrainConfig,
    shot_seed: int,
    threshold: float = 0.5,
    truncate: bool = False,
    candidate_hook: Optional[CandidateHook] = None,
) -> TrainTrace:
    """Train one freshly initialised GCN and bookkeep the best candidate.

    ``candidate_hook(x, epoch)`` is called whenever the projected
    bitstring differs from the previous epoch's.

    Early stopping: the patience counter resets when the loss undercuts a
    reference loss by more than ``abs_tolerance``; the reference only moves
    on a reset, so slow steady progress still counts as progress.

    Raises
    ------
    DimensionMismatchError
        If the objective and the graph disagree on the vertex count.
    NonFiniteLossError
        If the relaxed loss becomes NaN or infinite.
    """
    if objective.n != g.n:
        raise DimensionMismatchError(f"objective has {objective.n} variables, graph has {g.n} vertices")
    start = time.perf_counter()
    dims = cfg.layer_dims(g.n)
    embedding, model = init_parameters(
        g.n, dims, shot_seed, dropout=cfg.dropout, aggregation=Aggregation(cfg.aggregation)
    )
    operator = aggregation_operator(g, model.aggregation)
    state = AdamState.create(trainable(model, embedding), learning_rate=cfg.learning_rate)
    dropout_rng = np.random.default_rng([shot_seed, 1])
    logger.debug("Shot started", extra={"shot_seed": shot_seed, "layer_dims": list(dims)})

    history: List[float] = []
    best: Optional[Candidate] = None
    previous: Optional[np.ndarray] = None
    reference_loss = math.inf
    stale = 0
    stop_reason = StopReason.MAX_EPOCHS
    epochs_run = 0
    for epoch in range(cfg.max_epochs):
        p, cache = forward(model, g, embedding, train_mode=True, rng=dropout_rng, operator=operator)
        grads = backward(cache, objective)
        loss = grads.loss
        if not math.isfinite(loss):
            raise NonFiniteLossError(epoch, loss)
        history.append(loss)
        epochs_run = epoch + 1

        x = project(p, threshold, truncate)
        if previous is None or not np.array_equal(x, previous):
            energy = objective.energy(x)
            if best is None or energy < best.energy:
                best = Candidate(bitstring=x.copy(), energy=energy, epoch=epoch)
            if candidate_hook is not None:
                candidate_hook(x, epoch)
            previous = x

        if loss < reference_loss - cfg.abs_tolerance:
            reference_loss = loss
            stale = 0
        else:
            stale += 1
        if stale >= cfg.patience:
            stop_reason = StopReason.CONVERGED
            break
        apply_adam(model, embedding, state, grads)

    runtime_ms = (time.perf_counter() - start) * 1000.0
    logger.debug(
        "Shot finished",
        extra={
            "shot_seed": shot_seed,
            "epochs": epochs_run,
            "stop_reason": stop_reason.value,
            "best_energy": best.energy,
            "duration_ms": round(runtime_ms, 2),
        },
    )
    return TrainTrace(
        loss_history=history,
        best_candidate=best,
        epochs_run=epochs_run,
        stop_reason=stop_reason,
        shot_seed=shot_seed,
        runtime_ms=runtime_ms,
        model=model,
        embedding=embedding,
    )
