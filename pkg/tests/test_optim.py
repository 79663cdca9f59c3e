import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonresp.errors import NumericFailure, UsageError
from nonresp.optim import (
    KINDS, FirstOrderConfig, LinearFiniteSum, OptimizerState, SagaConfig, epoch_batches,
    first_order_step, lookahead, minibatch_iter, minimize, saga_minimize,
)

# rmsprop with a fixed step ends in a cycle of amplitude lr/2, hence its small step
QUAD_LR = {"gd": 0.1, "momentum": 0.01, "nesterov": 0.01, "adagrad": 0.1, "rmsprop": 2e-4, "adam": 0.01}


def quadratic(a, b):
    def objective(x):
        r = a @ x - b
        return 0.5 * float(r @ r), a.T @ r
    return objective


def spd_problem(seed, d=4):
    g = np.random.default_rng(seed)
    m = g.normal(size=(d, d))
    a = m @ m.T / d + np.eye(d)
    return a, g.normal(size=d)


class TestSteps:
    def test_gd_step(self):
        x, s = first_order_step(FirstOrderConfig("gd", lr=0.5), OptimizerState.zeros(2), [1.0, 2.0], [2.0, -2.0])
        assert x.tolist() == [0.0, 3.0] and s.t == 1

    def test_momentum_accumulates(self):
        cfg = FirstOrderConfig("momentum", lr=1.0, beta=0.5)
        x, s = first_order_step(cfg, OptimizerState.zeros(1), [0.0], [1.0])
        x, s = first_order_step(cfg, s, x, [1.0])
        assert x.tolist() == [-2.5]

    def test_adam_first_step_is_lr_sign(self):
        cfg = FirstOrderConfig("adam", lr=0.1)
        x, _ = first_order_step(cfg, OptimizerState.zeros(3), np.zeros(3), [3.0, -0.2, 50.0])
        assert np.allclose(x, [-0.1, 0.1, -0.1], atol=1e-8)

    def test_adagrad_first_step(self):
        x, s = first_order_step(FirstOrderConfig("adagrad", lr=1.0), OptimizerState.zeros(1), [0.0], [4.0])
        assert x[0] == pytest.approx(-1.0, abs=1e-8)
        assert s.s[0] == 16.0

    def test_rmsprop_decay(self):
        cfg = FirstOrderConfig("rmsprop", lr=1.0, gamma=0.5)
        _, s = first_order_step(cfg, OptimizerState.zeros(1), [0.0], [2.0])
        assert s.s[0] == 2.0

    def test_nesterov_lookahead(self):
        cfg = FirstOrderConfig("nesterov", beta=0.5)
        s = OptimizerState(np.array([2.0]), np.zeros(1), 1)
        assert lookahead(cfg, s, [1.0]).tolist() == [2.0]
        assert lookahead(FirstOrderConfig("gd"), s, [1.0]).tolist() == [1.0]

    def test_defaults(self):
        assert FirstOrderConfig("adam").lr == 0.001
        assert FirstOrderConfig("gd").lr == 0.1

    @pytest.mark.parametrize("bad", [dict(kind="lbfgs"), dict(lr=-1.0), dict(beta=1.0), dict(eps=0.0)])
    def test_invalid_config(self, bad):
        with pytest.raises(UsageError):
            FirstOrderConfig(**bad)

    def test_shape_mismatch(self):
        with pytest.raises(UsageError):
            first_order_step(FirstOrderConfig(), OptimizerState.zeros(2), [0.0], [0.0])

    def test_nonfinite_gradient(self):
        with pytest.raises(NumericFailure):
            first_order_step(FirstOrderConfig(), OptimizerState.zeros(1), [0.0], [np.nan])


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("seed", range(3))
def test_minimize_quadratic(kind, seed):
    a, b = spd_problem(seed)
    x, trace = minimize(FirstOrderConfig(kind, lr=QUAD_LR[kind]), quadratic(a, b), np.zeros(4), max_iter=10_000, tol=1e-9)
    assert trace[-1] < 1e-6
    if kind != "rmsprop":
        assert np.max(np.abs(x - np.linalg.solve(a, b))) < 1e-6


@pytest.mark.parametrize("kind", KINDS)
def test_small_step_strictly_decreases(kind):
    a, b = spd_problem(7)
    _, trace = minimize(FirstOrderConfig(kind, lr=1e-3), quadratic(a, b), np.zeros(4), max_iter=200)
    assert all(later < earlier for earlier, later in zip(trace, trace[1:]))


def test_tolerance_met_at_init():
    x, trace = minimize(FirstOrderConfig("gd"), quadratic(np.eye(2), np.zeros(2)), np.zeros(2))
    assert len(trace) == 1 and np.array_equal(x, np.zeros(2))


@settings(max_examples=50, deadline=None)
@given(g=st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=5), c=st.floats(1e-2, 1e2))
def test_adam_first_step_scale_invariant(g, c):
    cfg = FirstOrderConfig("adam", lr=0.1)
    g = np.array(g)
    a, _ = first_order_step(cfg, OptimizerState.zeros(g.size), np.zeros(g.size), g)
    b, _ = first_order_step(cfg, OptimizerState.zeros(g.size), np.zeros(g.size), c * g)
    # the step is lr * g / (eps + |g|): scale enters only through eps
    bound = 2 * cfg.eps / np.minimum(g, c * g)
    assert np.all(np.abs(a - b) <= np.abs(a) * bound)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_minimize_diverges():
    a = np.eye(2) * 10
    with pytest.raises(NumericFailure):
        minimize(FirstOrderConfig("gd", lr=1.0), quadratic(a, np.ones(2)), np.ones(2), max_iter=2000)


class TestSaga:
    def test_least_squares_matches_lstsq(self, gen):
        X = gen.normal(size=(80, 3))
        y = X @ [1.0, -2.0, 0.5] + 0.3 + 0.1 * gen.normal(size=80)
        res = saga_minimize(SagaConfig(max_iter=5000, tol=1e-10), LinearFiniteSum(X, y, "squared"), np.zeros(4))
        ref = np.linalg.lstsq(np.c_[X, np.ones(80)], y, rcond=None)[0]
        assert res.converged
        assert np.allclose(res.params, ref, atol=1e-5)

    def test_l1_sparsifies(self, gen):
        X = gen.normal(size=(100, 5))
        y = (X[:, 0] + 0.2 * gen.normal(size=100) > 0).astype(float)
        res = saga_minimize(SagaConfig(lam=10.0, penalty="l1", max_iter=3000), LinearFiniteSum(X, y), np.zeros(6))
        assert np.sum(res.params[:5] == 0.0) >= 3
        assert res.params[0] > 0

    def test_l2_stationary(self, gen):
        X = gen.normal(size=(60, 3))
        y = (X[:, 1] > 0).astype(float)
        obj = LinearFiniteSum(X, y)
        lam = 5.0
        res = saga_minimize(SagaConfig(lam=lam, penalty="l2", max_iter=5000, tol=1e-10), obj, np.zeros(4))
        grad = np.mean([obj.grad_i(res.params, i) for i in range(60)], axis=0)
        grad[:3] += lam / 60 * res.params[:3]
        assert np.max(np.abs(grad)) < 1e-6

    def test_generic_objective_path(self, gen):
        class Quad:
            n, dim = 3, 2
            penalized = np.array([True, True])
            targets = np.array([[1.0, 0.0], [0.0, 1.0], [2.0, 2.0]])

            def grad_i(self, x, i):
                return x - self.targets[i]

            def smoothness(self):
                return 1.0

        res = saga_minimize(SagaConfig(max_iter=5000, tol=1e-12), Quad(), np.zeros(2))
        assert np.allclose(res.params, [1.0, 1.0], atol=1e-8)

    def test_table_mean_consistent(self, gen):
        X = gen.normal(size=(30, 2))
        res = saga_minimize(SagaConfig(max_iter=5), LinearFiniteSum(X, (X[:, 0] > 0) * 1.0), np.zeros(3))
        assert np.allclose(res.grad_table.mean(axis=0), res.grad_mean)

    def test_huge_l1_zeroes_weights(self, gen):
        X = gen.normal(size=(50, 3))
        y = (X[:, 0] > 0.5).astype(float)
        res = saga_minimize(SagaConfig(lam=1e6, penalty="l1", max_iter=2000), LinearFiniteSum(X, y), np.zeros(4))
        assert np.all(res.params[:3] == 0.0)
        assert res.params[3] == pytest.approx(np.log(y.mean() / (1 - y.mean())), abs=1e-3)

    def test_zero_epochs_returns_init(self):
        init = np.array([0.5, -1.0, 2.0])
        res = saga_minimize(SagaConfig(max_iter=0), LinearFiniteSum(np.ones((3, 2)), np.ones(3)), init)
        assert np.array_equal(res.params, init)

    def test_init_length(self):
        with pytest.raises(UsageError):
            saga_minimize(SagaConfig(), LinearFiniteSum(np.ones((3, 2)), np.ones(3)), np.zeros(2))

    def test_seeded(self, gen):
        X = gen.normal(size=(40, 2))
        obj = LinearFiniteSum(X, (X[:, 0] > 0) * 1.0)
        a = saga_minimize(SagaConfig(max_iter=3, seed=5), obj, np.zeros(3)).params
        b = saga_minimize(SagaConfig(max_iter=3, seed=5), obj, np.zeros(3)).params
        assert np.array_equal(a, b)


class TestBatches:
    @settings(max_examples=50, deadline=None)
    @given(n=st.integers(1, 200), data=st.data())
    def test_partition(self, n, data):
        b = data.draw(st.integers(1, n))
        batches = epoch_batches(n, b, 0, 0)
        assert np.array_equal(np.sort(np.concatenate(batches)), np.arange(n))
        assert all(len(x) == b for x in batches[:-1])

    def test_epochs_differ(self):
        e = list(minibatch_iter(50, 10, 1, 2))
        assert not np.array_equal(e[0][0], e[1][0])

    def test_bad_batch(self):
        with pytest.raises(UsageError):
            epoch_batches(5, 6, 0, 0)
