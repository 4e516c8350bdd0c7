"""
Post-processing stage.

Turns the network's soft assignments into bitstrings (:func:`project`),
restores independence for MIS candidates (:func:`repair_mis`) and
optionally descends to a 1-flip local optimum (:func:`greedy_bitflip_polish`).
"""

from __future__ import annotations

from typing import Sequence, Union

import numpy as np

from ..errors import LengthMismatchError
from ..graphs import Graph
from ..hamiltonians import PuboInstance, QuboInstance

# Flip gains above this are treated as zero so round-off cannot cycle.
FLIP_GAIN_TOLERANCE = 1e-12


def project(p: Sequence[float], threshold: float = 0.5, truncate: bool = False) -> np.ndarray:
    """Map probabilities to bits: ``x_i = 1`` iff ``p_i >= threshold``.

    With ``truncate`` the literal ``int(p_i)`` is used instead, which is
    1 only for ``p_i == 1``.
    """
    ps = np.asarray(p, dtype=np.float64)
    cut = 1.0 if truncate else threshold
    return (ps >= cut).astype(np.int8)


def _bits(x: Sequence[int], n: int) -> np.ndarray:
    xs = np.asarray(x).astype(np.int8)
    if xs.shape != (n,):
        raise LengthMismatchError(f"expected {n} bits, got shape {xs.shape}")
    return xs.copy()


def repair_mis(g: Graph, x: Sequence[int]) -> np.ndarray:
    """Greedily drop vertices until no selected pair shares an edge.

    Violated edges are scanned in canonical order. From each edge that
    is still violated the endpoint with more selected neighbours is
    removed; ties remove the larger index.
    """
    xs = _bits(x, g.n)
    if not g.edges:
        return xs
    in_set = np.asarray(g.adjacency @ xs.astype(np.float64)).astype(np.int64)
    for u, v, _ in g.edges:
        if not (xs[u] and xs[v]):
            continue
        if in_set[u] > in_set[v]:
            drop = u
        elif in_set[v] > in_set[u]:
            drop = v
        else:
            drop = max(u, v)
        xs[drop] = 0
        for nb in g.neighbors(drop):
            in_set[nb] -= 1
    return xs


def _polish_qubo(q: QuboInstance, xs: np.ndarray) -> np.ndarray:
    x = xs.astype(np.float64)
    coupling = q.coupling
    indptr, indices, data = coupling.indptr, coupling.indices, coupling.data
    # field_k = Q_kk + sum_{j != k} Q_kj x_j ; flipping k changes energy by (1 - 2 x_k) * field_k
    field = q.diagonal + coupling @ x
    while True:
        sign = 1.0 - 2.0 * x
        gains = sign * field
        k = int(np.argmin(gains))
        if gains[k] >= -FLIP_GAIN_TOLERANCE:
            break
        x[k] += sign[k]
        lo, hi = indptr[k], indptr[k + 1]
        field[indices[lo:hi]] += sign[k] * data[lo:hi]
    return x.astype(np.int8)


def _polish_pubo(inst: PuboInstance, xs: np.ndarray) -> np.ndarray:
    x = xs.copy()
    current = inst.energy(x)
    while True:
        best_k, best_energy = -1, current
        for k in range(inst.n):
            x[k] ^= 1
            e = inst.energy(x)
            x[k] ^= 1
            if e < best_energy - FLIP_GAIN_TOLERANCE:
                best_k, best_energy = k, e
        if best_k < 0:
            return x
        x[best_k] ^= 1
        current = best_energy


def greedy_bitflip_polish(
    q: Union[QuboInstance, PuboInstance], x: Sequence[int]
) -> np.ndarray:
    """Flip the single most improving bit until no flip lowers the energy.

    Every accepted flip strictly decreases the energy, so the loop
    terminates at a 1-flip local optimum.
    """
    xs = _bits(x, q.n)
    if q.n == 0:
        return xs
    if isinstance(q, QuboInstance):
        return _polish_qubo(q, xs)
    return _polish_pubo(q, xs)
