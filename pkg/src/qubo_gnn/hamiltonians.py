"""
Sparse Hamiltonian containers, problem encoders and relaxed losses.

QUBO coefficients are stored upper-triangular (``i <= j``); linear terms
live on the diagonal because ``x_i ** 2 == x_i`` for binary variables.
This is half of the symmetric-matrix convention: a symmetric ``S`` with
``x^T S x`` corresponds to ``Q_ii = S_ii`` and ``Q_ij = 2 S_ij``.

Both :class:`QuboInstance` and :class:`PuboInstance` satisfy the
:class:`RelaxedObjective` protocol consumed by the training loop, so
higher-order problems train through exactly the same code path as
quadratic ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Dict, Iterable, List, Mapping, Protocol, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .errors import (
    LengthMismatchError,
    NonPositivePenaltyError,
    OutOfRangeProbabilityError,
)
from .graphs import Graph, complement_graph, graph_from_edge_list

PROBABILITY_TOLERANCE = 1e-9


class RelaxedObjective(Protocol):
    """Anything the trainer can minimise: a binary energy plus its relaxation."""

    n: int

    def energy(self, x: Sequence[int]) -> float:
        ...

    def relaxed_loss_and_gradient(self, p: Sequence[float]) -> Tuple[float, np.ndarray]:
        ...


def _as_bits(x: Sequence[int], n: int) -> np.ndarray:
    arr = np.asarray(x)
    if arr.shape != (n,):
        raise LengthMismatchError(f"expected {n} variables, got shape {arr.shape}")
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise ValueError("bitstring entries must be 0 or 1")
    return arr.astype(np.float64)


def _as_probabilities(p: Sequence[float], n: int) -> np.ndarray:
    arr = np.asarray(p, dtype=np.float64)
    if arr.shape != (n,):
        raise LengthMismatchError(f"expected {n} probabilities, got shape {arr.shape}")
    if arr.size and (
        not np.all(np.isfinite(arr))
        or arr.min() < -PROBABILITY_TOLERANCE
        or arr.max() > 1.0 + PROBABILITY_TOLERANCE
    ):
        raise OutOfRangeProbabilityError(
            f"probabilities must lie in [0, 1], got range [{arr.min()}, {arr.max()}]"
        )
    return np.clip(arr, 0.0, 1.0)


# ----------------------------------------------------------------------- QUBO


@dataclass(frozen=True)
class QuboInstance:
    """Upper-triangular sparse QUBO ``offset + sum_{i<=j} Q_ij x_i x_j``."""

    n: int
    terms: Dict[Tuple[int, int], float]
    offset: float = 0.0

    @classmethod
    def from_terms(
        cls, n: int, terms: Mapping[Tuple[int, int], float], offset: float = 0.0
    ) -> "QuboInstance":
        """Fold ``(j, i)`` onto ``(i, j)``, sum duplicates and drop zeros."""
        folded: Dict[Tuple[int, int], float] = {}
        for (i, j), c in terms.items():
            i, j = int(i), int(j)
            if not (0 <= i < n and 0 <= j < n):
                raise LengthMismatchError(f"term ({i}, {j}) outside [0, {n})")
            key = (i, j) if i <= j else (j, i)
            folded[key] = folded.get(key, 0.0) + float(c)
        clean = {k: v for k, v in sorted(folded.items()) if v != 0.0}
        return cls(n=n, terms=clean, offset=float(offset))

    @cached_property
    def upper(self) -> sp.csr_matrix:
        if not self.terms:
            return sp.csr_matrix((self.n, self.n), dtype=np.float64)
        keys = np.asarray(list(self.terms.keys()), dtype=np.int64)
        vals = np.asarray(list(self.terms.values()), dtype=np.float64)
        return sp.csr_matrix((vals, (keys[:, 0], keys[:, 1])), shape=(self.n, self.n))

    @cached_property
    def symmetric(self) -> sp.csr_matrix:
        """``U + U^T``; its diagonal is ``2 Q_ii``. This is the loss Hessian."""
        return (self.upper + self.upper.T).tocsr()

    @cached_property
    def diagonal(self) -> np.ndarray:
        return self.upper.diagonal()

    @cached_property
    def coupling(self) -> sp.csc_matrix:
        """Symmetric off-diagonal couplings with a zero diagonal."""
        off = self.symmetric - sp.diags(2.0 * self.diagonal)
        off = sp.csc_matrix(off)
        off.eliminate_zeros()
        return off

    def energy(self, x: Sequence[int]) -> float:
        return qubo_energy(self, x)

    def relaxed_loss_and_gradient(self, p: Sequence[float]) -> Tuple[float, np.ndarray]:
        return relaxed_loss_and_gradient(self, p)


def qubo_energy(q: QuboInstance, x: Sequence[int]) -> float:
    """Return ``offset + sum_{i<=j} Q_ij x_i x_j`` for a binary ``x``."""
    xs = _as_bits(x, q.n)
    return float(q.offset + xs @ (q.upper @ xs))


def relaxed_loss_and_gradient(q: QuboInstance, p: Sequence[float]) -> Tuple[float, np.ndarray]:
    """Relaxed QUBO loss at probabilities ``p`` and its gradient.

    ``loss = offset + sum_{i<=j} Q_ij p_i p_j`` and
    ``grad = (U + U^T) p``. At a binary ``p`` the loss equals the energy.
    """
    ps = _as_probabilities(p, q.n)
    loss = float(q.offset + ps @ (q.upper @ ps))
    return loss, np.asarray(q.symmetric @ ps, dtype=np.float64)


# ----------------------------------------------------------------------- PUBO


@dataclass(frozen=True)
class PuboInstance:
    """Polynomial binary objective ``offset + sum coeff * prod_{i in term} x_i``."""

    n: int
    terms: Tuple[Tuple[Tuple[int, ...], float], ...]
    offset: float = 0.0

    @classmethod
    def from_terms(
        cls,
        n: int,
        terms: Iterable[Tuple[Sequence[int], float]],
        offset: float = 0.0,
    ) -> "PuboInstance":
        """Canonicalise monomials.

        Indices are sorted and de-duplicated (``x_i ** 2 == x_i``),
        identical monomials are summed, zero coefficients are dropped.
        An empty index tuple is folded into the offset.
        """
        merged: Dict[Tuple[int, ...], float] = {}
        total_offset = float(offset)
        for indices, c in terms:
            key = tuple(sorted({int(i) for i in indices}))
            if any(not 0 <= i < n for i in key):
                raise LengthMismatchError(f"term {key} outside [0, {n})")
            if not key:
                total_offset += float(c)
                continue
            merged[key] = merged.get(key, 0.0) + float(c)
        clean = tuple(
            (k, v) for k, v in sorted(merged.items(), key=lambda kv: (len(kv[0]), kv[0])) if v != 0.0
        )
        return cls(n=n, terms=clean, offset=total_offset)

    @cached_property
    def blocks(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        """Terms grouped by arity as ``(indices[m, k], coefficients[m])``."""
        by_arity: Dict[int, Tuple[list, list]] = {}
        for key, c in self.terms:
            idx, coeff = by_arity.setdefault(len(key), ([], []))
            idx.append(key)
            coeff.append(c)
        return [
            (np.asarray(idx, dtype=np.int64), np.asarray(coeff, dtype=np.float64))
            for _, (idx, coeff) in sorted(by_arity.items())
        ]

    @property
    def degree(self) -> int:
        return max((len(k) for k, _ in self.terms), default=0)

    def energy(self, x: Sequence[int]) -> float:
        return pubo_energy(self, x)

    def relaxed_loss_and_gradient(self, p: Sequence[float]) -> Tuple[float, np.ndarray]:
        return relaxed_pubo_loss_and_gradient(self, p)


def pubo_energy(p: PuboInstance, x: Sequence[int]) -> float:
    xs = _as_bits(x, p.n)
    total = p.offset
    for idx, coeff in p.blocks:
        total += float(coeff @ xs[idx].prod(axis=1))
    return float(total)


def relaxed_pubo_loss_and_gradient(
    inst: PuboInstance, p: Sequence[float]
) -> Tuple[float, np.ndarray]:
    """Substitute ``p`` into every monomial; the gradient follows the product rule.

    The partial derivative of a monomial with respect to one of its
    variables is the product of the remaining factors, computed from
    prefix and suffix products so that zeros need no special casing.
    """
    ps = _as_probabilities(p, inst.n)
    loss = inst.offset
    grad = np.zeros(inst.n, dtype=np.float64)
    for idx, coeff in inst.blocks:
        vals = ps[idx]
        m, k = vals.shape
        loss += float(coeff @ vals.prod(axis=1))
        prefix = np.ones((m, k))
        suffix = np.ones((m, k))
        if k > 1:
            prefix[:, 1:] = np.cumprod(vals[:, :-1], axis=1)
            suffix[:, :-1] = np.cumprod(vals[:, ::-1][:, :-1], axis=1)[:, ::-1]
        partial = coeff[:, None] * prefix * suffix
        grad += np.bincount(idx.ravel(), weights=partial.ravel(), minlength=inst.n)
    return float(loss), grad


# ---------------------------------------------------------------------- Ising


@dataclass(frozen=True)
class IsingInstance:
    """``offset + sum_i h_i z_i + sum_{i<j} J_ij z_i z_j`` over spins ``z = +-1``."""

    n: int
    couplings: Dict[Tuple[int, int], float]
    fields: Tuple[float, ...] = field(default=())
    offset: float = 0.0

    def __post_init__(self) -> None:
        if not self.fields:
            object.__setattr__(self, "fields", (0.0,) * self.n)
        if len(self.fields) != self.n:
            raise LengthMismatchError(f"expected {self.n} fields, got {len(self.fields)}")
        for i, j in self.couplings:
            if i == j:
                raise ValueError(f"self-coupling on spin {i}")


def ising_energy(s: IsingInstance, z: Sequence[int]) -> float:
    zs = np.asarray(z, dtype=np.float64)
    if zs.shape != (s.n,):
        raise LengthMismatchError(f"expected {s.n} spins, got shape {zs.shape}")
    if zs.size and not np.all(np.abs(zs) == 1.0):
        raise ValueError("spins must be -1 or +1")
    total = s.offset + float(np.dot(s.fields, zs)) if s.n else s.offset
    for (i, j), c in s.couplings.items():
        total += c * zs[i] * zs[j]
    return float(total)


def ising_to_qubo(s: IsingInstance) -> QuboInstance:
    """Substitute ``z_i = 2 x_i - 1``; energies agree pointwise."""
    terms: Dict[Tuple[int, int], float] = {}
    offset = s.offset
    for (i, j), c in s.couplings.items():
        a, b = (i, j) if i < j else (j, i)
        terms[(a, b)] = terms.get((a, b), 0.0) + 4.0 * c
        terms[(a, a)] = terms.get((a, a), 0.0) - 2.0 * c
        terms[(b, b)] = terms.get((b, b), 0.0) - 2.0 * c
        offset += c
    for i, h in enumerate(s.fields):
        if h:
            terms[(i, i)] = terms.get((i, i), 0.0) + 2.0 * h
            offset -= h
    return QuboInstance.from_terms(s.n, terms, offset)


def qubo_to_ising(q: QuboInstance) -> IsingInstance:
    """Substitute ``x_i = (z_i + 1) / 2``; energies agree pointwise."""
    couplings: Dict[Tuple[int, int], float] = {}
    fields = [0.0] * q.n
    offset = q.offset
    for (i, j), c in q.terms.items():
        if i == j:
            fields[i] += c / 2.0
            offset += c / 2.0
        else:
            couplings[(i, j)] = couplings.get((i, j), 0.0) + c / 4.0
            fields[i] += c / 4.0
            fields[j] += c / 4.0
            offset += c / 4.0
    couplings = {k: v for k, v in couplings.items() if v != 0.0}
    return IsingInstance(n=q.n, couplings=couplings, fields=tuple(fields), offset=offset)


# ------------------------------------------------------------------- encoders


def build_maxcut_qubo(g: Graph) -> QuboInstance:
    """``H = sum_{i<j} A_ij (2 x_i x_j - x_i - x_j)``, so ``-H`` is the cut weight."""
    terms: Dict[Tuple[int, int], float] = {}
    for u, v, w in g.edges:
        terms[(u, v)] = 2.0 * w
        terms[(u, u)] = terms.get((u, u), 0.0) - w
        terms[(v, v)] = terms.get((v, v), 0.0) - w
    return QuboInstance.from_terms(g.n, terms)


def build_maxcut_ising(g: Graph) -> IsingInstance:
    """Compact Ising form ``J_ij = A_ij / 2`` with the constant kept as offset."""
    couplings = {(u, v): w / 2.0 for u, v, w in g.edges}
    return IsingInstance(n=g.n, couplings=couplings, offset=-sum(w for _, _, w in g.edges) / 2.0)


def _check_penalty(P: float) -> None:
    if not P > 0:
        raise NonPositivePenaltyError(f"penalty must be positive, got {P}")


def build_mis_qubo(g: Graph, P: float = 2.0) -> QuboInstance:
    """``H = -sum_i x_i + P sum_{(i,j) in E} x_i x_j``."""
    _check_penalty(P)
    terms: Dict[Tuple[int, int], float] = {(i, i): -1.0 for i in range(g.n)}
    for u, v, _ in g.edges:
        terms[(u, v)] = float(P)
    return QuboInstance.from_terms(g.n, terms)


def build_max_clique_qubo(g: Graph, P: float = 2.0) -> QuboInstance:
    """Maximum clique of ``g`` as the MIS of its complement."""
    return build_mis_qubo(complement_graph(g), P)


def interaction_graph(instance: QuboInstance | PuboInstance) -> Graph:
    """Graph whose edges join every pair of variables sharing a term."""
    pairs = set()
    if isinstance(instance, QuboInstance):
        pairs.update((i, j) for i, j in instance.terms if i != j)
    else:
        for key, _ in instance.terms:
            pairs.update(combinations(key, 2))
    return graph_from_edge_list(instance.n, ((i, j, 1.0) for i, j in sorted(pairs)))


# -------------------------------------------------------------------- metrics


def cut_size(g: Graph, x: Sequence[int]) -> float:
    """Total weight of edges whose endpoints take different values."""
    xs = _as_bits(x, g.n)
    u, v, w = g.edge_arrays
    return float(w @ (xs[u] != xs[v]))


def independence_check(g: Graph, x: Sequence[int]) -> Tuple[int, List[Tuple[int, int]]]:
    """Return the set size and every edge with both endpoints selected."""
    xs = _as_bits(x, g.n)
    violated = [(u, v) for u, v, _ in g.edges if xs[u] and xs[v]]
    return int(xs.sum()), violated
