import itertools

import numpy as np
import pytest

from qubo_gnn.errors import LengthMismatchError
from qubo_gnn.graphs import generate_d_regular, graph_from_edge_list
from qubo_gnn.hamiltonians import (
    PuboInstance,
    QuboInstance,
    build_maxcut_qubo,
    independence_check,
    qubo_energy,
)
from qubo_gnn.stages.postprocess import greedy_bitflip_polish, project, repair_mis

K3 = graph_from_edge_list(3, [(0, 1), (1, 2), (0, 2)])


def test_project_threshold() -> None:
    """p >= 0.5 maps to one, ties included."""
    assert list(project([0.9, 0.1])) == [1, 0]
    assert list(project([0.5])) == [1]


def test_project_is_idempotent_on_bits() -> None:
    """Binary input is returned unchanged."""
    x = np.array([1, 0, 0, 1])
    assert np.array_equal(project(x), x)


def test_project_truncate() -> None:
    """Truncation keeps only certain ones."""
    assert list(project([0.99, 1.0, 0.5], truncate=True)) == [0, 1, 0]


def test_repair_keeps_independent_sets() -> None:
    """An independent set is a fixed point."""
    path = graph_from_edge_list(3, [(0, 1), (1, 2)])
    assert list(repair_mis(path, [1, 0, 1])) == [1, 0, 1]


def test_repair_triangle() -> None:
    """All of K3 selected leaves one vertex."""
    fixed = repair_mis(K3, [1, 1, 1])
    assert int(fixed.sum()) == 1
    assert independence_check(K3, fixed)[1] == []


def test_repair_tie_drops_larger_index() -> None:
    """Equal in-set degree removes the higher index."""
    edge = graph_from_edge_list(2, [(0, 1)])
    assert list(repair_mis(edge, [1, 1])) == [1, 0]


def test_repair_drops_higher_conflict_vertex() -> None:
    """The centre of a selected star goes first."""
    star = graph_from_edge_list(4, [(0, 1), (0, 2), (0, 3)])
    assert list(repair_mis(star, [1, 1, 1, 1])) == [0, 1, 1, 1]


def test_repair_always_feasible_and_subset() -> None:
    """Repair output is independent and never adds vertices."""
    rng = np.random.default_rng(3)
    for seed in range(20):
        g = generate_d_regular(30, 3, seed=seed)
        x = rng.integers(0, 2, size=30)
        fixed = repair_mis(g, x)
        assert independence_check(g, fixed)[1] == []
        assert np.all(fixed <= x)


def test_repair_length_mismatch() -> None:
    """Wrong-length input is rejected."""
    with pytest.raises(LengthMismatchError):
        repair_mis(K3, [1, 0])


def test_polish_triangle() -> None:
    """From the uncut K3 one flip reaches energy -2."""
    q = build_maxcut_qubo(K3)
    polished = greedy_bitflip_polish(q, [1, 1, 1])
    assert qubo_energy(q, polished) == -2.0


def test_polish_diagonal() -> None:
    """Q = diag(-1) climbs to all ones."""
    q = QuboInstance.from_terms(4, {(i, i): -1.0 for i in range(4)})
    polished = greedy_bitflip_polish(q, [0, 0, 0, 0])
    assert list(polished) == [1, 1, 1, 1]
    assert qubo_energy(q, polished) == -4.0


def test_polish_fixed_point() -> None:
    """A 1-flip local optimum is unchanged."""
    q = build_maxcut_qubo(K3)
    assert list(greedy_bitflip_polish(q, [1, 0, 0])) == [1, 0, 0]


def test_polish_reaches_local_optimum() -> None:
    """No single flip improves a polished bitstring and energy never rises."""
    rng = np.random.default_rng(12)
    g = generate_d_regular(40, 3, seed=1)
    q = build_maxcut_qubo(g)
    for _ in range(5):
        x = rng.integers(0, 2, size=40)
        polished = greedy_bitflip_polish(q, x)
        e = qubo_energy(q, polished)
        assert e <= qubo_energy(q, x)
        for k in range(40):
            flipped = polished.copy()
            flipped[k] ^= 1
            assert qubo_energy(q, flipped) >= e


def test_polish_pubo() -> None:
    """Higher-order objectives polish by explicit flips."""
    p = PuboInstance.from_terms(3, [((0, 1, 2), -3.0), ((0,), 1.0)])
    polished = greedy_bitflip_polish(p, [0, 1, 1])
    energies = {bits: p.energy(bits) for bits in itertools.product((0, 1), repeat=3)}
    assert p.energy(polished) == min(energies.values())
