"""
Encoders for applied problems.

* Risk diversification: threshold an asset correlation matrix into a
  conflict graph and pick a high-return independent set (weighted MIS).
* Interval scheduling: the largest set of compatible jobs is the MIS of
  the interval graph.
* Sensor placement: minimum (weighted) vertex cover with a penalty for
  every uncovered edge.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple, Union

import numpy as np

from .errors import (
    AsymmetricMatrixError,
    InvalidCorrelationMatrixError,
    InvalidIntervalError,
    LengthMismatchError,
    NegativeCostError,
    NonPositivePenaltyError,
)
from .graphs import Graph, graph_from_edge_list
from .hamiltonians import QuboInstance

logger = logging.getLogger(__name__)

MATRIX_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Interval:
    """Half-open time window ``[start, end)``."""

    start: float
    end: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.start) and math.isfinite(self.end)) or not self.start < self.end:
            raise InvalidIntervalError(f"invalid interval [{self.start}, {self.end})")

    def overlaps(self, other: "Interval") -> bool:
        return self.start < other.end and other.start < self.end


@dataclass(frozen=True)
class CorrelationMatrix:
    values: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.values, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise InvalidCorrelationMatrixError(f"correlation matrix must be square, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise InvalidCorrelationMatrixError("correlation matrix has non-finite entries")
        if np.max(np.abs(c - c.T), initial=0.0) > MATRIX_TOLERANCE:
            raise AsymmetricMatrixError("correlation matrix is not symmetric")
        if np.max(np.abs(np.diag(c) - 1.0), initial=0.0) > MATRIX_TOLERANCE:
            raise InvalidCorrelationMatrixError("correlation matrix diagonal must be 1")
        if np.max(np.abs(c), initial=0.0) > 1.0 + MATRIX_TOLERANCE:
            raise InvalidCorrelationMatrixError("correlations must lie in [-1, 1]")
        object.__setattr__(self, "values", c)

    @property
    def n(self) -> int:
        return self.values.shape[0]


def threshold_correlation_graph(
    c: Union[CorrelationMatrix, np.ndarray], lam: float
) -> Graph:
    """Edge ``(i, j)`` iff ``|c_ij| > lam`` (strict)."""
    matrix = c if isinstance(c, CorrelationMatrix) else CorrelationMatrix(np.asarray(c))
    if not 0.0 <= lam < 1.0:
        raise ValueError(f"threshold must lie in [0, 1), got {lam}")
    rows, cols = np.nonzero(np.triu(np.abs(matrix.values) > lam, k=1))
    return graph_from_edge_list(matrix.n, ((int(i), int(j), 1.0) for i, j in zip(rows, cols)))


def _check_penalty(P: float) -> None:
    if not P > 0:
        raise NonPositivePenaltyError(f"penalty must be positive, got {P}")


def build_wmis_qubo(g: Graph, mu: Sequence[float], P: float = 2.0) -> QuboInstance:
    """``H = -sum_i mu_i x_i + P sum_{(i,j) in E} x_i x_j``.

    Only the magnitude of ``mu`` relative to ``P`` matters; returns are
    taken as given.
    """
    weights = np.asarray(mu, dtype=np.float64)
    if weights.shape != (g.n,):
        raise LengthMismatchError(f"expected {g.n} returns, got shape {weights.shape}")
    _check_penalty(P)
    if np.any(weights < 0):
        logger.warning("Negative returns in weighted MIS; those assets are never selected")
    terms: Dict[Tuple[int, int], float] = {(i, i): -float(m) for i, m in enumerate(weights)}
    for u, v, _ in g.edges:
        terms[(u, v)] = float(P)
    return QuboInstance.from_terms(g.n, terms)


def interval_graph(intervals: Sequence[Interval]) -> Graph:
    """One vertex per interval, an edge for every overlapping pair.

    Shared endpoints do not overlap. Intervals are swept in start order so
    only genuinely overlapping pairs are compared.
    """
    items = [iv if isinstance(iv, Interval) else Interval(*iv) for iv in intervals]
    order = sorted(range(len(items)), key=lambda i: (items[i].start, i))
    edges = []
    for pos, i in enumerate(order):
        end = items[i].end
        for j in order[pos + 1:]:
            if items[j].start >= end:
                break
            edges.append((min(i, j), max(i, j), 1.0))
    return graph_from_edge_list(len(items), edges)


def build_mvc_qubo(g: Graph, costs: Sequence[float], P: float = 2.0) -> QuboInstance:
    """``H = sum_i c_i x_i + P sum_{(i,j) in E} (1 - x_i - x_j + x_i x_j)``."""
    c = np.asarray(costs, dtype=np.float64)
    if c.shape != (g.n,):
        raise LengthMismatchError(f"expected {g.n} costs, got shape {c.shape}")
    if np.any(c < 0):
        raise NegativeCostError("vertex costs must be non-negative")
    _check_penalty(P)
    if c.size and P <= c.max():
        logger.warning(
            "Penalty does not exceed the largest vertex cost; covers may be violated",
            extra={"penalty": P, "max_cost": float(c.max())},
        )
    terms: Dict[Tuple[int, int], float] = {
        (i, i): float(c[i]) - P * g.degree[i] for i in range(g.n)
    }
    for u, v, _ in g.edges:
        terms[(u, v)] = float(P)
    return QuboInstance.from_terms(g.n, terms, offset=P * g.num_edges)
