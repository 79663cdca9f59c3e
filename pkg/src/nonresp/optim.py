"""First-order optimizers, the SAGA incremental-gradient solver and mini-batching.

``first_order_step`` implements plain gradient descent, momentum, Nesterov
momentum, adagrad, RMSProp and adam as pure functions of
(config, state, params, gradient). ``saga_minimize`` solves finite-sum
problems; linear-model sums run through a compiled per-epoch kernel.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._accel import jit
from .errors import NumericFailure, UsageError
from .seeding import rng

KINDS = ("gd", "momentum", "nesterov", "adagrad", "rmsprop", "adam")
_DEFAULT_LR = {"adam": 0.001, "adagrad": 0.01}


@dataclass(frozen=True)
class FirstOrderConfig:
    kind: str = "adam"
    lr: float | None = None
    beta: float = 0.9  # momentum / nesterov
    gamma: float = 0.9  # rmsprop decay
    gamma_v: float = 0.9
    gamma_s: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UsageError(f"unknown optimizer {self.kind!r}")
        if self.lr is None:
            object.__setattr__(self, "lr", _DEFAULT_LR.get(self.kind, 0.1))
        if not self.lr > 0:
            raise UsageError("learning rate must be positive")
        for name in ("beta", "gamma", "gamma_v", "gamma_s"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise UsageError(f"{name} must lie in (0,1)")
        if not self.eps > 0:
            raise UsageError("eps must be positive")


@dataclass(frozen=True)
class OptimizerState:
    v: np.ndarray
    s: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n), np.zeros(n), 0)


def lookahead(config: FirstOrderConfig, state: OptimizerState, params):
    """Point at which the caller must evaluate the gradient for the next step.

    Nesterov momentum needs the gradient at ``params + beta * v``; every other
    method uses ``params`` itself.
    """
    params = np.asarray(params, dtype=np.float64)
    if config.kind == "nesterov":
        return params + config.beta * state.v
    return params


def first_order_step(config: FirstOrderConfig, state: OptimizerState, params, gradient):
    x = np.asarray(params, dtype=np.float64)
    g = np.asarray(gradient, dtype=np.float64)
    if x.shape != g.shape or state.v.shape != x.shape:
        raise UsageError("params, gradient and state lengths differ")
    if not np.all(np.isfinite(g)):
        raise NumericFailure("non-finite gradient")
    a = config.lr
    t = state.t + 1
    v, s = state.v, state.s
    kind = config.kind
    if kind == "gd":
        x = x - a * g
    elif kind in ("momentum", "nesterov"):
        # x := x - a g + beta v, folded into the velocity
        v = config.beta * v - a * g
        x = x + v
    elif kind == "adagrad":
        s = s + g * g
        x = x - a * g / (config.eps + np.sqrt(s))
    elif kind == "rmsprop":
        s = config.gamma * s + (1.0 - config.gamma) * g * g
        x = x - a * g / (config.eps + np.sqrt(s))
    else:
        v = config.gamma_v * v + (1.0 - config.gamma_v) * g
        s = config.gamma_s * s + (1.0 - config.gamma_s) * g * g
        v_hat = v / (1.0 - config.gamma_v ** t)
        s_hat = s / (1.0 - config.gamma_s ** t)
        x = x - a * v_hat / (config.eps + np.sqrt(s_hat))
    return x, OptimizerState(v, s, t)


def minimize(config: FirstOrderConfig, objective, init, max_iter: int = 10_000, tol: float = 1e-8):
    """Run ``first_order_step`` until ``max|grad| < tol`` or ``max_iter`` steps.

    ``objective(x)`` returns ``(loss, gradient)``. Returns the final params
    and the loss recorded before each step.
    """
    x = np.array(init, dtype=np.float64)
    state = OptimizerState.zeros(x.shape[0])
    trace = []
    for _ in range(max_iter + 1):
        loss, grad = objective(x)
        if not np.isfinite(loss) or not np.all(np.isfinite(x)):
            raise NumericFailure("objective diverged to a non-finite value")
        trace.append(float(loss))
        if np.max(np.abs(grad), initial=0.0) < tol or len(trace) > max_iter:
            break
        if config.kind == "nesterov":
            _, grad = objective(lookahead(config, state, x))
        x, state = first_order_step(config, state, x, grad)
    return x, trace


# ---------------------------------------------------------------------- SAGA

@dataclass(frozen=True)
class SagaConfig:
    step: float | None = None  # None: 1 / (3 L) from the objective's smoothness
    lam: float = 0.0
    penalty: str = "none"  # none | l1 | l2
    max_iter: int = 1000  # epochs of n sampled steps
    tol: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.penalty not in ("none", "l1", "l2"):
            raise UsageError(f"unknown penalty {self.penalty!r}")
        if self.step is not None and not self.step > 0:
            raise UsageError("step size must be positive")
        if self.lam < 0:
            raise UsageError("lam must be non-negative")
        if not self.tol > 0:
            raise UsageError("tol must be positive")
        if self.max_iter < 0:
            raise UsageError("max_iter must be non-negative")


@dataclass
class SagaResult:
    params: np.ndarray
    n_epochs: int
    converged: bool
    grad_table: np.ndarray = field(repr=False)
    grad_mean: np.ndarray = field(repr=False)


LOSS_LOGISTIC = 0
LOSS_SQUARED = 1


class LinearFiniteSum:
    """(1/n) sum_i loss(x_i . w + b, y_i) with an unpenalized trailing intercept.

    Params are laid out as ``[w_1..w_d, b]``. Per-example gradients are
    ``dloss_i * [x_i, 1]``, so only the scalar derivative is stored.
    """

    def __init__(self, features, targets, loss="logistic"):
        self.X = np.ascontiguousarray(features, dtype=np.float64)
        self.y = np.ascontiguousarray(targets, dtype=np.float64)
        if self.X.ndim != 2 or self.y.shape != (self.X.shape[0],):
            raise UsageError("features must be (n, d) and targets (n,)")
        self.loss_code = {"logistic": LOSS_LOGISTIC, "squared": LOSS_SQUARED}[loss]
        self.n, d = self.X.shape
        self.dim = d + 1
        self.penalized = np.r_[np.ones(d, dtype=bool), False]

    def derivatives(self, params):
        z = self.X @ params[:-1] + params[-1]
        return _dloss_vec(z, self.y, self.loss_code)

    def grad_i(self, params, i):
        z = float(self.X[i] @ params[:-1] + params[-1])
        return _dloss(z, self.y[i], self.loss_code) * np.r_[self.X[i], 1.0]

    def smoothness(self):
        sq = np.einsum("ij,ij->i", self.X, self.X) + 1.0
        scale = 0.25 if self.loss_code == LOSS_LOGISTIC else 1.0
        return scale * float(sq.max())


def _dloss(z, y, loss_code):
    if loss_code == LOSS_LOGISTIC:
        if z >= 0:
            return 1.0 / (1.0 + np.exp(-z)) - y
        e = np.exp(z)
        return e / (1.0 + e) - y
    return z - y


def _dloss_vec(z, y, loss_code):
    if loss_code == LOSS_LOGISTIC:
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        e = np.exp(z[~pos])
        out[~pos] = e / (1.0 + e)
        return out - y
    return z - y


@jit
def _saga_linear_epoch(X, y, loss_code, w, b, table, mean_w, mean_b, order, step, reg, l1):
    """One epoch of SAGA on a linear finite sum, in place. Returns new intercept.

    ``reg`` is the per-step penalty weight (lam / n); ``l1`` selects the
    proximal soft-threshold instead of the in-gradient ridge term.
    """
    n, d = X.shape
    inv_n = 1.0 / n
    for k in range(order.shape[0]):
        j = order[k]
        z = b
        for c in range(d):
            z += X[j, c] * w[c]
        if loss_code == 0:
            # sigmoid(z) - y without overflow
            if z >= 0:
                new = 1.0 / (1.0 + np.exp(-z)) - y[j]
            else:
                e = np.exp(z)
                new = e / (1.0 + e) - y[j]
        else:
            new = z - y[j]
        delta = new - table[j]
        for c in range(d):
            g = delta * X[j, c] + mean_w[c]
            if not l1:
                g += reg * w[c]
            w[c] -= step * g
            if l1:
                shrink = step * reg
                if w[c] > shrink:
                    w[c] -= shrink
                elif w[c] < -shrink:
                    w[c] += shrink
                else:
                    w[c] = 0.0
            mean_w[c] += delta * X[j, c] * inv_n
        b -= step * (delta + mean_b)
        mean_b += delta * inv_n
        table[j] = new
    return b, mean_b


def _soft_threshold(x, thresh, mask):
    out = x.copy()
    out[mask] = np.sign(x[mask]) * np.maximum(np.abs(x[mask]) - thresh, 0.0)
    return out


def saga_minimize(config: SagaConfig, objective, init) -> SagaResult:
    """Minimise ``(1/n) sum_i f_i(x) + (lam/n) R(x)`` by SAGA.

    ``objective`` exposes ``n``, ``dim``, ``grad_i(x, i)`` and a boolean
    ``penalized`` mask. Each epoch samples ``n`` indices uniformly with
    replacement; the run stops once an epoch moves no coordinate by more
    than ``tol * max(1, max|x|)``.
    """
    x = np.array(init, dtype=np.float64)
    if x.shape != (objective.dim,):
        raise UsageError(f"init must have length {objective.dim}")
    n = objective.n
    step = config.step
    reg = config.lam / n if config.penalty != "none" else 0.0
    if step is None:
        smooth = objective.smoothness() + (reg if config.penalty == "l2" else 0.0)
        step = 1.0 / (3.0 * smooth)
    l1 = config.penalty == "l1"
    gen = rng(config.seed, 30)

    linear = isinstance(objective, LinearFiniteSum)
    if linear:
        table = objective.derivatives(x)
        mean_w = objective.X.T @ table / n
        mean_b = float(table.mean())
    else:
        table = np.array([objective.grad_i(x, i) for i in range(n)])
        mean = table.mean(axis=0)

    converged = False
    epoch = 0
    for epoch in range(1, config.max_iter + 1):
        before = x.copy()
        order = gen.integers(0, n, size=n)
        if linear:
            w = x[:-1].copy()
            b, mean_b = _saga_linear_epoch(
                objective.X, objective.y, objective.loss_code, w, x[-1], table,
                mean_w, mean_b, order, step, reg, l1,
            )
            x = np.r_[w, b]
        else:
            mask = objective.penalized
            for j in order:
                new = objective.grad_i(x, j)
                g = new - table[j] + mean
                if config.penalty == "l2":
                    g = g + reg * np.where(mask, x, 0.0)
                x = x - step * g
                if l1:
                    x = _soft_threshold(x, step * reg, mask)
                mean = mean + (new - table[j]) / n
                table[j] = new
        if not np.all(np.isfinite(x)):
            raise NumericFailure(f"SAGA diverged in epoch {epoch}")
        change = np.max(np.abs(x - before))
        if change <= config.tol * max(1.0, np.max(np.abs(x))):
            converged = True
            break
    if linear:
        grad_table = table[:, None] * np.c_[objective.X, np.ones(n)]
        grad_mean = np.r_[mean_w, mean_b]
    else:
        grad_table, grad_mean = table, mean
    return SagaResult(x, epoch, converged, grad_table, grad_mean)


# ---------------------------------------------------------------- mini-batch

def epoch_batches(n_rows: int, batch_size: int, seed: int, epoch: int) -> list[np.ndarray]:
    if not 1 <= batch_size <= n_rows:
        raise UsageError(f"batch_size must lie in [1, {n_rows}], got {batch_size}")
    perm = rng(seed, 40, epoch).permutation(n_rows)
    return [perm[i:i + batch_size] for i in range(0, n_rows, batch_size)]


def minibatch_iter(n_rows: int, batch_size: int, seed: int, n_epochs: int):
    """Yield, for each epoch, the list of index batches of a fresh permutation."""
    for epoch in range(n_epochs):
        yield epoch_batches(n_rows, batch_size, seed, epoch)
