"""
Graph representation and random regular graph generation.

:class:`Graph` is an immutable, undirected, weighted simple graph with
0-based vertex indices. Edges are stored in canonical orientation
(``u < v``) and sorted order so that two graphs built from the same
edge set are bit-identical. Sparse matrix views used by the GCN and the
energy code are derived lazily and cached on the instance.

Random ``d``-regular graphs are sampled with the pairing (configuration)
model. The generator does not enforce connectivity.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .errors import (
    DuplicateEdgeError,
    GenerationFailedError,
    IndexOutOfRangeError,
    InfeasibleDegreeError,
    SelfLoopError,
)

Edge = Tuple[int, int, float]

MAX_GENERATION_ATTEMPTS = 1000


@dataclass(frozen=True)
class Graph:
    """Immutable undirected weighted graph.

    Build instances with :func:`graph_from_edge_list`; the constructor
    trusts its arguments.
    """

    n: int
    edges: Tuple[Edge, ...]
    neighbor_lists: Tuple[Tuple[Tuple[int, float], ...], ...]
    degree: Tuple[int, ...]

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, v: int) -> Tuple[int, ...]:
        return tuple(u for u, _ in self.neighbor_lists[v])

    @cached_property
    def edge_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(u, v, w)`` as numpy arrays in canonical edge order."""
        if not self.edges:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty.copy(), np.zeros(0, dtype=np.float64)
        arr = np.asarray(self.edges, dtype=np.float64)
        return arr[:, 0].astype(np.int64), arr[:, 1].astype(np.int64), arr[:, 2]

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric 0/1 adjacency matrix (structure only, weights ignored)."""
        u, v, _ = self.edge_arrays
        ones = np.ones(2 * len(u), dtype=np.float64)
        rows = np.concatenate([u, v])
        cols = np.concatenate([v, u])
        return sp.csr_matrix((ones, (rows, cols)), shape=(self.n, self.n))


def graph_from_edge_list(n: int, raw_edges: Iterable[Sequence[float]]) -> Graph:
    """Validate and canonicalise an edge list into a :class:`Graph`.

    Each raw edge is ``(u, v)`` or ``(u, v, w)``; a missing weight is 1.
    Edges are re-oriented so that ``u < v`` and sorted.

    Raises
    ------
    IndexOutOfRangeError
        If an endpoint lies outside ``[0, n)``.
    SelfLoopError
        If ``u == v``.
    DuplicateEdgeError
        If the same unordered pair appears twice.
    """
    if n < 0:
        raise IndexOutOfRangeError(f"vertex count must be non-negative, got {n}")
    canonical = {}
    for raw in raw_edges:
        if len(raw) == 2:
            u, v = raw
            w = 1.0
        else:
            u, v, w = raw[0], raw[1], raw[2]
        u, v = int(u), int(v)
        if not (0 <= u < n and 0 <= v < n):
            raise IndexOutOfRangeError(f"edge ({u}, {v}) outside [0, {n})")
        if u == v:
            raise SelfLoopError(f"self-loop on vertex {u}")
        key = (u, v) if u < v else (v, u)
        if key in canonical:
            raise DuplicateEdgeError(f"duplicate edge {key}")
        canonical[key] = float(w)

    edges = tuple((u, v, w) for (u, v), w in sorted(canonical.items()))
    adjacency = [[] for _ in range(n)]
    for u, v, w in edges:
        adjacency[u].append((v, w))
        adjacency[v].append((u, w))
    neighbor_lists = tuple(tuple(sorted(nbrs)) for nbrs in adjacency)
    degree = tuple(len(nbrs) for nbrs in neighbor_lists)
    return Graph(n=n, edges=edges, neighbor_lists=neighbor_lists, degree=degree)


def _pair_stubs(n: int, d: int, rng: np.random.Generator) -> np.ndarray | None:
    stubs = np.repeat(np.arange(n, dtype=np.int64), d)
    rng.shuffle(stubs)
    pairs = np.sort(stubs.reshape(-1, 2), axis=1)
    if np.any(pairs[:, 0] == pairs[:, 1]):
        return None
    keys = pairs[:, 0] * n + pairs[:, 1]
    if np.unique(keys).size != keys.size:
        return None
    return pairs


def generate_d_regular(
    n: int, d: int, seed: int, max_attempts: int = MAX_GENERATION_ATTEMPTS
) -> Graph:
    """Sample a random unweighted ``d``-regular graph on ``n`` vertices.

    Uses the pairing model: ``d`` stubs per vertex are shuffled with a
    generator seeded by ``seed`` and paired sequentially. Attempts that
    produce a self-loop or a multi-edge are rejected and reshuffled.

    Raises
    ------
    InfeasibleDegreeError
        If ``n * d`` is odd or ``d >= n``.
    GenerationFailedError
        If ``max_attempts`` shuffles all fail.
    """
    if d < 0 or n < 0 or (n * d) % 2 != 0 or (n > 0 and d >= n):
        raise InfeasibleDegreeError(f"no simple {d}-regular graph on {n} vertices")
    if n == 0 or d == 0:
        return graph_from_edge_list(n, [])
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        pairs = _pair_stubs(n, d, rng)
        if pairs is not None:
            return graph_from_edge_list(n, ((int(u), int(v), 1.0) for u, v in pairs))
    raise GenerationFailedError(
        f"pairing model failed {max_attempts} times for n={n}, d={d}, seed={seed}"
    )


def complement_graph(g: Graph) -> Graph:
    """Return the unweighted complement of ``g`` (used for clique search)."""
    present = {(u, v) for u, v, _ in g.edges}
    return graph_from_edge_list(
        g.n,
        ((u, v, 1.0) for u in range(g.n) for v in range(u + 1, g.n) if (u, v) not in present),
    )
