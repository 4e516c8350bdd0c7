import math
from pathlib import Path

import numpy as np
import pytest

from qubo_gnn.errors import (
    DimensionMismatchError,
    EmptyGraphError,
    ShapeMismatchError,
    StaleCacheError,
)
from qubo_gnn.gcn import (
    AdamState,
    Aggregation,
    EmbeddingTable,
    GcnModel,
    adam_step,
    aggregation_operator,
    apply_adam,
    backward,
    backward_from_output,
    forward,
    hyperparams_default,
    init_parameters,
    load_checkpoint,
    save_checkpoint,
)
from qubo_gnn.graphs import generate_d_regular, graph_from_edge_list
from qubo_gnn.hamiltonians import build_maxcut_qubo, build_mis_qubo


def _loss(model, g, emb, q) -> float:
    p, _ = forward(model, g, emb)
    return q.relaxed_loss_and_gradient(p)[0]


def _check_gradients(model: GcnModel, g, emb: EmbeddingTable, q, h: float = 1e-6) -> None:
    _, cache = forward(model, g, emb)
    grads = backward(cache, q)
    params = [*model.weights, *model.self_weights, emb.values]
    for param, grad in zip(params, grads.as_list()):
        for idx in np.ndindex(param.shape):
            old = param[idx]
            param[idx] = old + h
            up = _loss(model, g, emb, q)
            param[idx] = old - h
            down = _loss(model, g, emb, q)
            param[idx] = old
            fd = (up - down) / (2 * h)
            scale = max(abs(fd), abs(grad[idx]), 1e-3)
            assert abs(fd - grad[idx]) / scale < 1e-4


def test_hyperparams_default() -> None:
    """Cube-root rule below 1e5, square root from there on."""
    assert hyperparams_default(1000) == (10, 5)
    assert hyperparams_default(100_000) == (316, 158)
    assert hyperparams_default(1) == (1, 1)
    assert hyperparams_default(26) == (2, 1)
    assert hyperparams_default(27) == (3, 1)
    with pytest.raises(EmptyGraphError):
        hyperparams_default(0)


def test_init_parameters_deterministic() -> None:
    """Same seed, same parameters; different seed, different parameters."""
    emb_a, model_a = init_parameters(10, (3, 2, 1), seed=5)
    emb_b, model_b = init_parameters(10, (3, 2, 1), seed=5)
    emb_c, _ = init_parameters(10, (3, 2, 1), seed=6)
    assert np.array_equal(emb_a.values, emb_b.values)
    for wa, wb in zip(model_a.weights + model_a.self_weights, model_b.weights + model_b.self_weights):
        assert np.array_equal(wa, wb)
    assert not np.array_equal(emb_a.values, emb_c.values)


def test_init_parameters_empty_graph() -> None:
    """n = 0 cannot be initialised."""
    with pytest.raises(EmptyGraphError):
        init_parameters(0, (2, 1), seed=0)


def test_model_validates_output_width() -> None:
    """The last layer must have width one."""
    with pytest.raises(DimensionMismatchError):
        GcnModel(layer_dims=(2, 2), weights=[np.zeros((2, 2))], self_weights=[np.zeros((2, 2))])


def test_zero_weights_give_half() -> None:
    """sigmoid(0) = 0.5 everywhere."""
    g = generate_d_regular(6, 3, seed=0)
    emb, model = init_parameters(6, (3, 2, 1), seed=1)
    for w in model.weights + model.self_weights:
        w[...] = 0.0
    p, _ = forward(model, g, emb)
    assert np.allclose(p, 0.5)


def test_forward_hand_computed_path() -> None:
    """Two-vertex path with scalar weights matches a hand evaluation."""
    g = graph_from_edge_list(2, [(0, 1)])
    model = GcnModel(
        layer_dims=(1, 1, 1),
        weights=[np.array([[0.5]]), np.array([[2.0]])],
        self_weights=[np.array([[1.0]]), np.array([[-1.0]])],
    )
    emb = EmbeddingTable(np.array([[1.0], [2.0]]))
    p, _ = forward(model, g, emb)
    # first layer: 0.5 * neighbour + 1.0 * self, then relu
    h1 = np.maximum(np.array([0.5 * 2.0 + 1.0, 0.5 * 1.0 + 2.0]), 0.0)
    z2 = np.array([2.0 * h1[1] - h1[0], 2.0 * h1[0] - h1[1]])
    expected = 1.0 / (1.0 + np.exp(-z2))
    assert np.allclose(p, expected, atol=1e-12)


def test_isolated_vertex_uses_self_path_only() -> None:
    """Mean aggregation gives isolated vertices a zero neighbour term."""
    g = graph_from_edge_list(3, [(0, 1)])
    M = aggregation_operator(g).toarray()
    assert np.array_equal(M[2], np.zeros(3))
    model = GcnModel(
        layer_dims=(1, 1),
        weights=[np.array([[5.0]])],
        self_weights=[np.array([[1.0]])],
    )
    emb = EmbeddingTable(np.array([[0.3], [0.1], [-0.7]]))
    p, _ = forward(model, g, emb)
    assert p[2] == pytest.approx(1.0 / (1.0 + math.exp(0.7)), abs=1e-12)


def test_symmetric_aggregation_operator() -> None:
    """D^-1/2 A D^-1/2 on a star."""
    star = graph_from_edge_list(3, [(0, 1), (0, 2)])
    M = aggregation_operator(star, Aggregation.SYMMETRIC).toarray()
    assert M[0, 1] == pytest.approx(1.0 / math.sqrt(2.0))
    assert np.allclose(M, M.T)


def test_forward_dimension_mismatch() -> None:
    """Embeddings must match the graph size."""
    g = generate_d_regular(6, 3, seed=0)
    emb, model = init_parameters(5, (2, 1), seed=0)
    with pytest.raises(DimensionMismatchError):
        forward(model, g, emb)


@pytest.mark.parametrize("aggregation", [Aggregation.MEAN, Aggregation.SYMMETRIC])
def test_backward_matches_finite_differences(aggregation: Aggregation) -> None:
    """Analytic gradients agree with central differences on every parameter."""
    rng = np.random.default_rng(0)
    for trial in range(20):
        n = int(rng.integers(4, 13))
        if n % 2:
            n += 1
        g = generate_d_regular(n, 3, seed=trial)
        K = int(rng.integers(1, 4))
        dims = (3, *[int(rng.integers(2, 5)) for _ in range(K - 1)], 1)
        emb, model = init_parameters(n, dims, seed=trial, aggregation=aggregation)
        q = build_maxcut_qubo(g) if trial % 2 == 0 else build_mis_qubo(g, 2.0)
        _check_gradients(model, g, emb, q)


def test_zero_upstream_gradient() -> None:
    """dL/dp = 0 yields all-zero parameter gradients."""
    g = generate_d_regular(8, 3, seed=2)
    emb, model = init_parameters(8, (3, 2, 1), seed=2)
    _, cache = forward(model, g, emb)
    grads = backward_from_output(cache, np.zeros(8))
    assert all(not np.any(gr) for gr in grads.as_list())


def test_eval_mode_ignores_dropout() -> None:
    """Eval-mode forward with a dropout model equals the dropout-free model."""
    g = generate_d_regular(8, 3, seed=2)
    emb, model = init_parameters(8, (3, 4, 1), seed=2, dropout=0.5)
    _, plain = init_parameters(8, (3, 4, 1), seed=2)
    p_drop, cache_drop = forward(model, g, emb, train_mode=False)
    p_plain, cache_plain = forward(plain, g, emb)
    assert np.array_equal(p_drop, p_plain)
    q = build_maxcut_qubo(g)
    for a, b in zip(backward(cache_drop, q).as_list(), backward(cache_plain, q).as_list()):
        assert np.allclose(a, b)


def test_train_mode_dropout_is_seeded() -> None:
    """Same generator state, same masks."""
    g = generate_d_regular(8, 3, seed=2)
    emb, model = init_parameters(8, (3, 16, 1), seed=2, dropout=0.5)
    p1, _ = forward(model, g, emb, train_mode=True, rng=np.random.default_rng(1))
    p2, _ = forward(model, g, emb, train_mode=True, rng=np.random.default_rng(1))
    assert np.array_equal(p1, p2)


def test_stale_cache_detected() -> None:
    """A cache cannot be reused after an optimiser step."""
    g = generate_d_regular(8, 3, seed=2)
    emb, model = init_parameters(8, (3, 2, 1), seed=2)
    q = build_maxcut_qubo(g)
    _, cache = forward(model, g, emb)
    grads = backward(cache, q)
    state = AdamState.create([*model.weights, *model.self_weights, emb.values], learning_rate=0.01)
    apply_adam(model, emb, state, grads)
    with pytest.raises(StaleCacheError):
        backward(cache, q)


def test_adam_zero_gradient() -> None:
    """Zero gradient leaves parameters unchanged but counts the step."""
    param = np.array([1.0, -2.0])
    state = AdamState.create([param], learning_rate=0.1)
    adam_step(state, [param], [np.zeros(2)])
    assert np.array_equal(param, [1.0, -2.0])
    assert state.step_count == 1


def test_adam_first_step_is_lr_sized() -> None:
    """Bias correction makes the first step about lr * sign(g)."""
    param = np.zeros(3)
    state = AdamState.create([param], learning_rate=0.01)
    adam_step(state, [param], [np.array([0.3, -5.0, 2.0])])
    assert np.allclose(param, [-0.01, 0.01, -0.01], atol=1e-6)


def test_adam_two_steps_by_hand() -> None:
    """Two scalar steps follow the Adam recurrences exactly."""
    lr, b1, b2, eps = 0.1, 0.9, 0.999, 1e-8
    param = np.array([1.0])
    state = AdamState.create([param], learning_rate=lr)
    theta, m, v = 1.0, 0.0, 0.0
    for t, g in enumerate([0.5, -0.2], start=1):
        adam_step(state, [param], [np.array([g])])
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        theta -= lr * (m / (1 - b1 ** t)) / (math.sqrt(v / (1 - b2 ** t)) + eps)
    assert param[0] == pytest.approx(theta, abs=1e-12)


def test_adam_shape_mismatch() -> None:
    """Gradients must match parameter shapes."""
    param = np.zeros(2)
    state = AdamState.create([param])
    with pytest.raises(ShapeMismatchError):
        adam_step(state, [param], [np.zeros(3)])


def test_checkpoint_round_trip(tmp_path: Path) -> None:
    """Saved parameters reproduce the forward pass bit for bit."""
    g = generate_d_regular(10, 3, seed=3)
    emb, model = init_parameters(10, (3, 4, 2, 1), seed=3, dropout=0.2, aggregation=Aggregation.SYMMETRIC)
    path = tmp_path / "model.npz"
    save_checkpoint(path, model, emb, seed=3)
    loaded_model, loaded_emb, seed = load_checkpoint(path)
    assert seed == 3
    assert loaded_model.layer_dims == model.layer_dims
    assert loaded_model.aggregation is Aggregation.SYMMETRIC
    assert loaded_model.dropout_rate == pytest.approx(0.2)
    assert np.array_equal(forward(model, g, emb)[0], forward(loaded_model, g, loaded_emb)[0])
