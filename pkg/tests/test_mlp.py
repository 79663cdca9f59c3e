import numpy as np
import pytest

from helpers import central_diff, rel_err
from nonresp.errors import UsageError
from nonresp.linear_margin import sigmoid
from nonresp.mlp import (
    LayerSpec, MlpConfig, MlpParams, MLPClassifier, backward, bce_loss, forward, init_params,
    mlp_predict, mlp_train,
)


def random_net(seed, n_inputs=4, hidden=((3, "tanh"), (2, "sigmoid"))):
    params = init_params(n_inputs, hidden, seed)
    g = np.random.default_rng(seed)
    params.biases = [g.normal(scale=0.5, size=b.shape) for b in params.biases]
    return params


def grad_check(params, X, y):
    _, caches = forward(params, X)
    gw, gb = backward(params, caches, y)
    analytic = np.concatenate([np.r_[w.ravel(), b] for w, b in zip(gw, gb)])
    numeric = central_diff(lambda v: bce_loss(params.unflat(v), X, y), params.flat(), h=1e-5)
    return rel_err(analytic, numeric)


class TestForward:
    def test_shapes(self):
        p = init_params(5, ((4, "tanh"), (2, "tanh")), 0)
        assert [w.shape for w in p.weights] == [(4, 5), (2, 4), (1, 2)]
        out, caches = forward(p, np.zeros((3, 5)))
        assert out.shape == (3,) and len(caches) == 4

    def test_init_bounds(self):
        p = init_params(6, ((4, "tanh"),), 0)
        assert np.abs(p.weights[0]).max() <= np.sqrt(6 / 10)
        assert all(np.all(b == 0) for b in p.biases)

    def test_width_check(self):
        with pytest.raises(UsageError):
            forward(init_params(2, ((2, "tanh"),)), np.zeros((1, 3)))

    def test_bad_layer(self):
        with pytest.raises(UsageError):
            LayerSpec(3, "softplus")
        with pytest.raises(UsageError):
            LayerSpec(0)

    def test_json_round_trip(self):
        p = random_net(1)
        q = MlpParams.from_json(p.to_json())
        assert np.array_equal(p.flat(), q.flat()) and q.activations == p.activations


class TestBackward:
    @pytest.mark.parametrize("seed", range(5))
    def test_gradient_matches_finite_differences(self, seed):
        g = np.random.default_rng(100 + seed)
        X = g.normal(size=(7, 4))
        y = g.integers(0, 2, 7)
        assert grad_check(random_net(seed), X, y) < 1e-6

    def test_relu_away_from_kinks(self):
        g = np.random.default_rng(9)
        X = g.normal(size=(7, 3))
        y = g.integers(0, 2, 7)
        p = random_net(4, 3, ((3, "relu"), (2, "relu")))
        _, caches = forward(p, X)
        if min(np.abs(z).min() for z, _ in caches[1:-1]) > 1e-3:
            assert grad_check(p, X, y) < 1e-6

    def test_single_layer_symbolic(self):
        g = np.random.default_rng(2)
        X = g.normal(size=(5, 3))
        y = g.integers(0, 2, 5)
        p = init_params(3, (), 2)
        out, caches = forward(p, X)
        gw, gb = backward(p, caches, y)
        assert np.allclose(gw[0], ((out - y) @ X / 5)[None, :])
        assert np.allclose(gb[0], [(out - y).mean()])

    def test_zero_error_zero_gradient(self):
        p = init_params(2, ((2, "tanh"),), 0)
        out, caches = forward(p, np.ones((3, 2)))
        gw, gb = backward(p, caches, out)
        assert all(np.allclose(w, 0) for w in gw + gb)


class TestTraining:
    def test_loss_decreases(self, gen):
        X = gen.normal(size=(200, 3))
        y = (X[:, 0] - X[:, 1] > 0).astype(int)
        res = mlp_train(X, y, MlpConfig(epochs=50, batch_size=20, lr=0.01))
        assert res.loss_trace[-1] < res.loss_trace[0]
        assert np.mean(mlp_predict(res.params, X) == y) > 0.9

    def test_xor(self):
        X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]] * 4)
        y = np.array([0, 1, 1, 0] * 4)
        clf = MLPClassifier(hidden=((4, "tanh"),), epochs=2000, batch_size=4, lr=0.05, seed=0).fit(X, y)
        assert np.array_equal(clf.predict(X), y)

    def test_deterministic(self, gen):
        X = gen.normal(size=(30, 2))
        y = (X[:, 0] > 0).astype(int)
        a = mlp_train(X, y, MlpConfig(epochs=5, batch_size=7, seed=4))
        b = mlp_train(X, y, MlpConfig(epochs=5, batch_size=7, seed=4))
        assert np.array_equal(a.params.flat(), b.params.flat())

    def test_batch_clipped_to_rows(self, gen):
        X = gen.normal(size=(10, 2))
        res = mlp_train(X, [0, 1] * 5, MlpConfig(epochs=2, batch_size=200))
        assert len(res.loss_trace) == 2

    def test_one_class(self):
        with pytest.raises(UsageError):
            mlp_train(np.zeros((4, 2)), [0, 0, 0, 0], MlpConfig(epochs=1))


def test_xor_default_architecture_most_seeds():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([0, 1, 1, 0])
    solved = sum(
        np.array_equal(mlp_predict(mlp_train(X, y, MlpConfig(batch_size=4, seed=s)).params, X), y)
        for s in range(10)
    )
    assert solved >= 8


def test_no_hidden_layer_is_logistic(gen):
    p = init_params(3, (), 0)
    p.biases = [np.array([0.4])]
    X = gen.normal(size=(6, 3))
    out, _ = forward(p, X)
    assert np.allclose(out, sigmoid(X @ p.weights[0][0] + 0.4))


def test_tanh_odd_symmetry(gen):
    p = init_params(3, ((4, "tanh"), (2, "tanh")), 1)
    X = gen.normal(size=(5, 3))
    flipped = MlpParams([-p.weights[0]] + p.weights[1:], p.biases, p.activations)
    assert np.allclose(forward(p, X)[0], forward(flipped, -X)[0])


def test_zero_epochs_keep_init(gen):
    X = gen.normal(size=(8, 2))
    res = mlp_train(X, [0, 1] * 4, MlpConfig(epochs=0, seed=3))
    assert np.array_equal(res.params.flat(), init_params(2, MlpConfig().hidden, 3).flat())
