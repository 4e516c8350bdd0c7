"""
Graph convolutional network with hand-written reverse-mode gradients.

Each layer computes::

    H_k = sigma(M @ H_{k-1} @ W_k + H_{k-1} @ B_k)

where ``M`` is the neighbourhood aggregation operator (row-normalised
adjacency for mean aggregation, so isolated vertices aggregate to the
zero vector). Hidden layers use a rectifier followed by inverted
dropout; the output layer has width one and a logistic sigmoid, giving
one probability per vertex.

The node embeddings ``h0`` are trainable and are updated by Adam
together with the layer weights. All arithmetic is float64.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .errors import (
    DimensionMismatchError,
    EmptyGraphError,
    ShapeMismatchError,
    StaleCacheError,
)
from .graphs import Graph
from .hamiltonians import RelaxedObjective

CHECKPOINT_FORMAT_VERSION = 1
# Keeps every probability strictly inside (0, 1) once the sigmoid saturates.
PROBABILITY_EPS = 1e-15


class Aggregation(str, Enum):
    MEAN = "mean"
    SYMMETRIC = "symmetric"


def aggregation_operator(g: Graph, mode: Aggregation = Aggregation.MEAN) -> sp.csr_matrix:
    """Sparse ``n x n`` operator applied to the previous layer's features."""
    adj = g.adjacency
    deg = np.asarray(adj.sum(axis=1)).ravel()
    safe = np.where(deg > 0, deg, 1.0)
    if Aggregation(mode) is Aggregation.MEAN:
        scale = np.where(deg > 0, 1.0 / safe, 0.0)
        return sp.csr_matrix(sp.diags(scale) @ adj)
    scale = np.where(deg > 0, 1.0 / np.sqrt(safe), 0.0)
    return sp.csr_matrix(sp.diags(scale) @ adj @ sp.diags(scale))


@dataclass
class EmbeddingTable:
    values: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass
class GcnModel:
    """Layer weights ``W_k`` (neighbour path) and ``B_k`` (self path).

    ``version`` increases every time the parameters are updated so that
    stale forward caches can be detected.
    """

    layer_dims: Tuple[int, ...]
    weights: List[np.ndarray]
    self_weights: List[np.ndarray]
    dropout_rate: float = 0.0
    aggregation: Aggregation = Aggregation.MEAN
    version: int = 0

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.layer_dims)
        self.layer_dims = dims
        self.aggregation = Aggregation(self.aggregation)
        if len(dims) < 2 or min(dims) < 1:
            raise DimensionMismatchError(f"need at least one layer with positive widths, got {dims}")
        if dims[-1] != 1:
            raise DimensionMismatchError(f"output width must be 1, got {dims[-1]}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout must lie in [0, 1), got {self.dropout_rate}")
        if len(self.weights) != self.num_layers or len(self.self_weights) != self.num_layers:
            raise DimensionMismatchError("one W and one B matrix required per layer")
        for k, (w, b) in enumerate(zip(self.weights, self.self_weights)):
            expected = (dims[k], dims[k + 1])
            if w.shape != expected or b.shape != expected:
                raise DimensionMismatchError(
                    f"layer {k}: expected {expected}, got W{w.shape} B{b.shape}"
                )
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {k} has non-finite weights")

    @property
    def num_layers(self) -> int:
        return len(self.layer_dims) - 1


@dataclass
class GcnGradients:
    weights: List[np.ndarray]
    self_weights: List[np.ndarray]
    embedding: np.ndarray
    loss: float = 0.0

    def as_list(self) -> List[np.ndarray]:
        return [*self.weights, *self.self_weights, self.embedding]


@dataclass
class ForwardCache:
    model: GcnModel
    version: int
    operator: sp.csr_matrix
    inputs: List[np.ndarray]
    aggregated: List[np.ndarray]
    preactivations: List[np.ndarray]
    masks: List[Optional[np.ndarray]]
    p: np.ndarray


def _icbrt(n: int) -> int:
    r = int(round(n ** (1.0 / 3.0)))
    while r ** 3 > n:
        r -= 1
    while (r + 1) ** 3 <= n:
        r += 1
    return r


def hyperparams_default(n: int) -> Tuple[int, int]:
    """Embedding width ``d0`` and hidden width ``d1`` for a graph of ``n`` vertices.

    ``d0 = int(sqrt(n))`` for ``n >= 1e5``, otherwise ``int(cbrt(n))``;
    ``d1 = int(d0 / 2)``. Both are at least one.
    """
    if n < 1:
        raise EmptyGraphError("graph has no vertices")
    d0 = math.isqrt(n) if n >= 100_000 else _icbrt(n)
    d0 = max(d0, 1)
    return d0, max(d0 // 2, 1)


def init_parameters(
    n: int,
    dims: Sequence[int],
    seed: int,
    dropout: float = 0.0,
    aggregation: Aggregation = Aggregation.MEAN,
) -> Tuple[EmbeddingTable, GcnModel]:
    """Random embeddings (normal / sqrt(d0)) and Glorot-uniform weights."""
    if n < 1:
        raise EmptyGraphError("cannot initialise parameters for an empty graph")
    dims = tuple(int(d) for d in dims)
    if len(dims) < 2:
        raise DimensionMismatchError(f"need at least two layer widths, got {dims}")
    rng = np.random.default_rng(seed)
    embedding = rng.standard_normal((n, dims[0])) / math.sqrt(dims[0])
    weights, self_weights = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        self_weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
    model = GcnModel(
        layer_dims=dims,
        weights=weights,
        self_weights=self_weights,
        dropout_rate=dropout,
        aggregation=aggregation,
    )
    return EmbeddingTable(embedding), model


def forward(
    model: GcnModel,
    g: Graph,
    h0: EmbeddingTable,
    train_mode: bool = False,
    rng: Optional[np.random.Generator] = None,
    operator: Optional[sp.csr_matrix] = None,
) -> Tuple[np.ndarray, ForwardCache]:
    """Run the network and return per-vertex probabilities plus a backward cache.

    ``operator`` may be passed in to reuse a precomputed aggregation
    matrix across epochs.
    """
    H = h0.values
    if H.shape != (g.n, model.layer_dims[0]):
        raise DimensionMismatchError(
            f"embedding shape {H.shape} does not match graph size {g.n} and width {model.layer_dims[0]}"
        )
    M = operator if operator is not None else aggregation_operator(g, model.aggregation)
    use_dropout = train_mode and model.dropout_rate > 0.0
    if use_dropout and rng is None:
        raise ValueError("dropout in train mode needs a random generator")

    inputs, aggregated, preacts, masks = [], [], [], []
    for k in range(model.num_layers):
        A = M @ H
        Z = A @ model.weights[k] + H @ model.self_weights[k]
        inputs.append(H)
        aggregated.append(A)
        preacts.append(Z)
        if k < model.num_layers - 1:
            H = np.maximum(Z, 0.0)
            mask = None
            if use_dropout:
                keep = 1.0 - model.dropout_rate
                mask = (rng.random(H.shape) < keep) / keep
                H = H * mask
            masks.append(mask)
    p = np.clip(expit(preacts[-1][:, 0]), PROBABILITY_EPS, 1.0 - PROBABILITY_EPS)
    cache = ForwardCache(
        model=model,
        version=model.version,
        operator=M,
        inputs=inputs,
        aggregated=aggregated,
        preactivations=preacts,
        masks=masks,
        p=p,
    )
    return p, cache


def backward_from_output(cache: ForwardCache, grad_p: np.ndarray) -> GcnGradients:
    """Chain an upstream gradient ``dL/dp`` back to every parameter."""
    model = cache.model
    if cache.version != model.version:
        raise StaleCacheError(
            f"cache from parameter version {cache.version}, model is at {model.version}"
        )
    M = cache.operator
    K = model.num_layers
    dZ = (np.asarray(grad_p, dtype=np.float64) * cache.p * (1.0 - cache.p))[:, None]
    d_weights: List[np.ndarray] = [np.empty(0)] * K
    d_self: List[np.ndarray] = [np.empty(0)] * K
    for k in range(K - 1, -1, -1):
        d_weights[k] = cache.aggregated[k].T @ dZ
        d_self[k] = cache.inputs[k].T @ dZ
        dH = M.T @ (dZ @ model.weights[k].T) + dZ @ model.self_weights[k].T
        if k == 0:
            return GcnGradients(weights=d_weights, self_weights=d_self, embedding=np.asarray(dH))
        dZ = np.asarray(dH) * (cache.preactivations[k - 1] > 0.0)
        mask = cache.masks[k - 1]
        if mask is not None:
            dZ = dZ * mask
    raise AssertionError("unreachable")  # pragma: no cover


def backward(cache: ForwardCache, objective: RelaxedObjective) -> GcnGradients:
    """Exact gradients of the relaxed loss with respect to ``W_k``, ``B_k`` and ``h0``."""
    loss, grad_p = objective.relaxed_loss_and_gradient(cache.p)
    grads = backward_from_output(cache, grad_p)
    grads.loss = loss
    return grads


# ---------------------------------------------------------------------- Adam


@dataclass
class AdamState:
    first_moment: List[np.ndarray]
    second_moment: List[np.ndarray]
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0

    @classmethod
    def create(cls, params: Sequence[np.ndarray], learning_rate: float = 1e-4, **kwargs) -> "AdamState":
        return cls(
            first_moment=[np.zeros_like(p) for p in params],
            second_moment=[np.zeros_like(p) for p in params],
            learning_rate=learning_rate,
            **kwargs,
        )


def adam_step(
    state: AdamState, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]
) -> Tuple[Sequence[np.ndarray], AdamState]:
    """One bias-corrected Adam update, applied to ``params`` in place."""
    if not (len(params) == len(grads) == len(state.first_moment)):
        raise ShapeMismatchError("parameter, gradient and moment lists differ in length")
    for p, g, m in zip(params, grads, state.first_moment):
        if p.shape != g.shape or p.shape != m.shape:
            raise ShapeMismatchError(f"shape mismatch: param {p.shape}, grad {g.shape}")
    state.step_count += 1
    t = state.step_count
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.learning_rate * (m / c1) / (np.sqrt(v / c2) + state.epsilon)
    return params, state


def trainable(model: GcnModel, embedding: EmbeddingTable) -> List[np.ndarray]:
    """Parameters in the order used by :class:`GcnGradients.as_list`."""
    return [*model.weights, *model.self_weights, embedding.values]


def apply_adam(
    model: GcnModel, embedding: EmbeddingTable, state: AdamState, grads: GcnGradients
) -> None:
    adam_step(state, trainable(model, embedding), grads.as_list())
    model.version += 1


# --------------------------------------------------------------- checkpoints


def save_checkpoint(
    path: Union[str, Path], model: GcnModel, embedding: EmbeddingTable, seed: int
) -> None:
    """Write a versioned ``.npz`` checkpoint."""
    arrays = {f"W_{k}": w for k, w in enumerate(model.weights)}
    arrays.update({f"B_{k}": b for k, b in enumerate(model.self_weights)})
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as f:
        np.savez(
            f,
            format_version=np.int64(CHECKPOINT_FORMAT_VERSION),
            layer_dims=np.asarray(model.layer_dims, dtype=np.int64),
            dropout=np.float64(model.dropout_rate),
            aggregation=np.str_(model.aggregation.value),
            seed=np.int64(seed),
            embedding=embedding.values,
            **arrays,
        )


def load_checkpoint(path: Union[str, Path]) -> Tuple[GcnModel, EmbeddingTable, int]:
    with np.load(Path(path), allow_pickle=False) as data:
        version = int(data["format_version"])
        if version != CHECKPOINT_FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        dims = tuple(int(d) for d in data["layer_dims"])
        K = len(dims) - 1
        model = GcnModel(
            layer_dims=dims,
            weights=[data[f"W_{k}"].copy() for k in range(K)],
            self_weights=[data[f"B_{k}"].copy() for k in range(K)],
            dropout_rate=float(data["dropout"]),
            aggregation=Aggregation(str(data["aggregation"])),
        )
        return model, EmbeddingTable(data["embedding"].copy()), int(data["seed"])

