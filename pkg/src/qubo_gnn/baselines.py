"""
Exact oracle, classical baselines and analytical bounds.

``brute_force_min`` enumerates every assignment (``x_i`` = bit ``i`` of
the enumeration counter) in vectorised chunks and is the verification
oracle for small instances. The random-cut and greedy-MIS baselines
give reference points for the benchmark; ``theoretical_bounds`` returns
the large-n estimates used for approximation ratios.
"""

from __future__ import annotations

import heapq
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Tuple, Union

import numpy as np

from .errors import TooLargeError, UnsupportedDegreeError
from .graphs import Graph
from .hamiltonians import PuboInstance, QuboInstance

BRUTE_FORCE_LIMIT = 26
CHUNK_BITS = 16


@dataclass(frozen=True)
class BoundConstants:
    parisi_constant: float = 0.7632
    mis_ratio: Dict[int, float] = field(default_factory=lambda: {3: 0.45537, 5: 0.38443})


BOUNDS = BoundConstants()


def _batch_energies(instance: Union[QuboInstance, PuboInstance], X: np.ndarray) -> np.ndarray:
    if isinstance(instance, QuboInstance):
        return instance.offset + np.einsum("ij,ij->i", np.asarray(X @ instance.upper), X)
    energies = np.full(X.shape[0], instance.offset, dtype=np.float64)
    for idx, coeff in instance.blocks:
        energies += X[:, idx].prod(axis=2) @ coeff
    return energies


def _scan_range(
    instance: Union[QuboInstance, PuboInstance], lo: int, hi: int
) -> Tuple[float, int]:
    """Minimum energy and its smallest enumeration index within ``[lo, hi)``."""
    shifts = np.arange(instance.n, dtype=np.int64)
    best_energy, best_m = math.inf, -1
    step = 1 << CHUNK_BITS
    for start in range(lo, hi, step):
        ms = np.arange(start, min(start + step, hi), dtype=np.int64)
        X = ((ms[:, None] >> shifts) & 1).astype(np.float64)
        energies = _batch_energies(instance, X)
        k = int(np.argmin(energies))
        if energies[k] < best_energy:
            best_energy, best_m = float(energies[k]), int(ms[k])
    return best_energy, best_m


def brute_force_min(
    q: Union[QuboInstance, PuboInstance], unsafe: bool = False, workers: int = 1
) -> Tuple[np.ndarray, float]:
    """Exact minimiser by exhaustive enumeration; ties go to the smallest counter.

    Raises
    ------
    TooLargeError
        If ``q.n`` exceeds 26 and ``unsafe`` is not set.
    """
    n = q.n
    if n > BRUTE_FORCE_LIMIT and not unsafe:
        raise TooLargeError(f"brute force over {n} variables refused (limit {BRUTE_FORCE_LIMIT})")
    if n == 0:
        return np.zeros(0, dtype=np.int8), float(q.offset)
    total = 1 << n
    if workers <= 1 or total <= (1 << CHUNK_BITS):
        energy, m = _scan_range(q, 0, total)
    else:
        bounds = np.linspace(0, total, workers + 1, dtype=np.int64)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(_scan_range, [q] * workers, bounds[:-1].tolist(), bounds[1:].tolist())
            )
        energy, m = min(parts)
    x = ((m >> np.arange(n)) & 1).astype(np.int8)
    return x, energy


def random_cut_samples(g: Graph, seed: int, repeats: int) -> np.ndarray:
    """Cut weight of ``repeats`` uniformly random bitstrings."""
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    rng = np.random.default_rng(seed)
    u, v, w = g.edge_arrays
    cuts = np.empty(repeats, dtype=np.float64)
    batch = max(1, (1 << 22) // max(g.n, 1))
    for start in range(0, repeats, batch):
        stop = min(start + batch, repeats)
        X = rng.integers(0, 2, size=(stop - start, g.n), dtype=np.int8)
        cuts[start:stop] = (X[:, u] != X[:, v]) @ w
    return cuts


def random_cut_baseline(g: Graph, seed: int, repeats: int = 1) -> float:
    """Best cut among ``repeats`` random bitstrings (the randomized 0.5-approximation)."""
    return float(random_cut_samples(g, seed, repeats).max())


def random_cut_expectation(g: Graph) -> float:
    """Expected cut of a uniform random bitstring: half the total weight."""
    return float(sum(w for _, _, w in g.edges) / 2.0)


def greedy_mis(g: Graph) -> np.ndarray:
    """Minimum-degree greedy independent set (ties to the smallest index)."""
    degree = list(g.degree)
    alive = [True] * g.n
    heap = [(d, v) for v, d in enumerate(degree)]
    heapq.heapify(heap)
    chosen = np.zeros(g.n, dtype=np.int8)
    while heap:
        d, v = heapq.heappop(heap)
        if not alive[v] or d != degree[v]:
            continue
        chosen[v] = 1
        alive[v] = False
        for u in g.neighbors(v):
            if not alive[u]:
                continue
            alive[u] = False
            for w in g.neighbors(u):
                if alive[w]:
                    degree[w] -= 1
                    heapq.heappush(heap, (degree[w], w))
    return chosen


def theoretical_bounds(problem: str, d: int, n: int) -> float:
    """Large-n upper-bound estimate for ``d``-regular graphs.

    MaxCut: ``(d/4 + P* sqrt(d/4)) n``. MIS: tabulated ``alpha_d / n``
    times ``n`` for ``d`` in {3, 5}.
    """
    if problem == "maxcut":
        if d < 1:
            raise ValueError(f"degree must be at least 1, got {d}")
        return (d / 4.0 + BOUNDS.parisi_constant * math.sqrt(d / 4.0)) * n
    if problem == "mis":
        if d not in BOUNDS.mis_ratio:
            raise UnsupportedDegreeError(f"no MIS bound tabulated for d={d}")
        return BOUNDS.mis_ratio[d] * n
    raise ValueError(f"unknown problem {problem!r}")
