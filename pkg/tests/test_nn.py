import math

import numpy as np
import pytest

from distillab import nn
from distillab.errors import ValidationError
from distillab.seeding import substream


def small_net(seed=0, dims=(3, 4, 2), activation="tanh"):
    return nn.init_net(substream(seed, "net"), list(dims), hidden_activation=activation)


def test_forward_zero_weights_gives_zero_logits():
    net = nn.ClassifierNet([nn.Layer(np.zeros((3, 2)), np.zeros(2), "identity")])
    logits, _ = nn.forward(net, np.array([[1.0, -2.0, 3.0]]))
    assert np.all(logits == 0.0)


def test_forward_identity_layer_is_identity():
    net = nn.ClassifierNet([nn.Layer(np.eye(2), np.zeros(2), "identity")])
    logits, _ = nn.forward(net, np.array([[1.0, 2.0]]))
    assert np.array_equal(logits, np.array([[1.0, 2.0]]))


def test_forward_matches_straight_line_recomputation():
    # Independent re-evaluation with explicit loops, no shared code path.
    net = small_net(seed=7)
    x = substream(7, "x").normal(size=(2, 3))
    logits, _ = nn.forward(net, x)
    for r in range(2):
        h = [0.0] * 4
        for j in range(4):
            acc = net.layers[0].bias[j]
            for i in range(3):
                acc += x[r, i] * net.layers[0].weight[i, j]
            h[j] = math.tanh(acc)
        for c in range(2):
            acc = net.layers[1].bias[c]
            for j in range(4):
                acc += h[j] * net.layers[1].weight[j, c]
            assert logits[r, c] == pytest.approx(acc, abs=1e-12)


def test_forward_deterministic():
    net = small_net(seed=3)
    x = substream(3, "x").normal(size=(4, 3))
    a, _ = nn.forward(net, x)
    b, _ = nn.forward(net, x)
    assert np.array_equal(a, b)


def test_forward_dimension_mismatch_raises():
    net = small_net()
    with pytest.raises(ValidationError):
        nn.forward(net, np.zeros((2, 5)))


def test_backward_zero_dlogits_gives_zero_grads():
    net = small_net()
    x = substream(1, "x").normal(size=(2, 3))
    _, cache = nn.forward(net, x)
    grads, dinput = nn.backward(net, cache, np.zeros((2, 2)))
    assert np.all(dinput == 0.0)
    for dw, db in grads:
        assert np.all(dw == 0.0)
        assert np.all(db == 0.0)


def test_backward_linear_layer_exact():
    w = substream(2, "w").normal(size=(3, 2))
    net = nn.ClassifierNet([nn.Layer(w, np.zeros(2), "identity")])
    x = substream(2, "x").normal(size=(4, 3))
    g = substream(2, "g").normal(size=(4, 2))
    _, cache = nn.forward(net, x)
    _, dinput = nn.backward(net, cache, g)
    assert np.allclose(dinput, g @ w.T, atol=0, rtol=0)


def test_backward_stale_cache_rejected():
    net = small_net()
    x = substream(1, "x").normal(size=(2, 3))
    _, cache = nn.forward(net, x)
    other = net.with_params(nn.sgd_step(net.params(), [np.ones_like(p) for p in net.params()], 0.1))
    with pytest.raises(ValidationError):
        nn.backward(other, cache, np.zeros((2, 2)))


def test_backward_matches_finite_differences():
    net = small_net(seed=11, dims=(3, 5, 4, 2))
    rng = substream(11, "batch")
    x = rng.normal(size=(3, 3))
    targets = nn.softmax(rng.normal(size=(3, 2)))
    assert nn.grad_check(net, (x, targets), h=1e-5) < 1e-5


def test_cross_entropy_uniform_softmax():
    loss, _ = nn.cross_entropy(np.array([0.0, 0.0]), np.array([1.0, 0.0]))
    assert loss == pytest.approx(math.log(2.0), abs=1e-12)


def test_cross_entropy_stationary_point():
    logits = np.array([0.7, -0.2, 1.1])
    _, dlogits = nn.cross_entropy(logits, nn.softmax(logits))
    assert np.max(np.abs(dlogits)) < 1e-12


def test_cross_entropy_direct_softmax_evaluation():
    loss, _ = nn.cross_entropy(np.array([1.0, 0.0, 0.0]), np.array([1.0, 0.0, 0.0]))
    assert loss == pytest.approx(math.log(1.0 + 2.0 / math.e), abs=1e-12)


def test_cross_entropy_rejects_non_probability_target():
    with pytest.raises(ValidationError):
        nn.cross_entropy(np.zeros(3), np.array([0.5, 0.5, 0.5]))
    with pytest.raises(ValidationError):
        nn.cross_entropy(np.zeros(2), np.array([1.5, -0.5]))


def test_softmax_is_probability_vector_for_extreme_logits():
    for logits in ([0.0, 0.0], [1000.0, -1000.0], [-745.0, 745.0], [3e2, 3e2, -3e2]):
        p = nn.softmax(np.array(logits))
        assert p.min() >= 0.0
        assert abs(p.sum() - 1.0) <= 1e-12


def test_mse_values():
    assert nn.mse(np.array([1.0, 2.0]), np.array([1.0, 2.0])) == 0.0
    assert nn.mse(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 1.0
    assert nn.mse(np.array([2.0, 2.0, 2.0]), np.zeros(3)) == 4.0
    with pytest.raises(ValidationError):
        nn.mse(np.zeros(2), np.zeros(3))


def test_sgd_step_arithmetic():
    (p,) = nn.sgd_step([np.array([1.0])], [np.array([0.5])], 0.1)
    assert p[0] == pytest.approx(0.95, abs=1e-15)
    params = [np.array([1.0, -1.0])]
    grads = [np.array([0.25, 0.5])]
    once = nn.sgd_step(nn.sgd_step(params, grads, 0.1), grads, 0.1)
    twice = nn.sgd_step(params, grads, 0.2)
    assert np.allclose(once[0], twice[0], atol=1e-15)
    unchanged = nn.sgd_step(params, [np.zeros(2)], 0.1)
    assert np.array_equal(unchanged[0], params[0])
    with pytest.raises(ValidationError):
        nn.sgd_step(params, [np.zeros(3)], 0.1)
    with pytest.raises(ValidationError):
        nn.sgd_step(params, grads, 0.0)


def test_grad_check_linear_net_is_exact():
    w = substream(4, "w").normal(size=(3, 2))
    net = nn.ClassifierNet([nn.Layer(w, np.zeros(2), "identity")])
    rng = substream(4, "batch")
    x = rng.normal(size=(2, 3))
    targets = nn.softmax(rng.normal(size=(2, 2)))
    assert nn.grad_check(net, (x, targets), h=1e-5) < 1e-7


def test_grad_check_detects_corruption():
    # Self-test of the checker: a wrong gradient must show a large error.
    good = np.array([0.3, -0.2, 0.05])
    bad = good.copy()
    bad[0] += 0.1
    assert nn.relative_errors(good, bad).max() > 1e-2


def test_grad_check_rejects_bad_step():
    net = small_net()
    with pytest.raises(ValidationError):
        nn.grad_check(net, (np.zeros((1, 3)), np.array([[1.0, 0.0]])), h=0.1)


def test_serialization_round_trip_is_exact():
    net = small_net(seed=9, dims=(4, 6, 3))
    restored = nn.net_from_dict(nn.net_to_dict(net))
    for a, b in zip(net.params(), restored.params()):
        assert np.array_equal(a, b)


def test_serialization_survives_json_text():
    import json

    net = small_net(seed=12)
    text = json.dumps(nn.net_to_dict(net))
    restored = nn.net_from_dict(json.loads(text))
    for a, b in zip(net.params(), restored.params()):
        assert np.array_equal(a, b)
