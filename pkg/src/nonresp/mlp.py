"""Fully connected feed-forward network for binary classification.

Hidden layers use tanh, sigmoid or relu; the output is one sigmoid unit.
Training minimises mean binary cross-entropy with adam over seeded
mini-batches.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .classify import BinaryClassifier, check_xy
from .errors import NumericFailure, UsageError
from .linear_margin import sigmoid
from .optim import FirstOrderConfig, OptimizerState, epoch_batches, first_order_step
from .seeding import rng

ACTIVATIONS = ("tanh", "sigmoid", "relu")


def activate(kind: str, z):
    if kind == "tanh":
        return np.tanh(z)
    if kind == "sigmoid":
        return sigmoid(z)
    if kind == "relu":
        return np.maximum(z, 0.0)
    raise UsageError(f"unknown activation {kind!r}")


def _activation_grad(kind, z, a):
    if kind == "tanh":
        return 1.0 - a * a
    if kind == "sigmoid":
        return a * (1.0 - a)
    return (z > 0).astype(np.float64)


@dataclass(frozen=True)
class LayerSpec:
    units: int
    activation: str = "tanh"

    def __post_init__(self):
        if self.units < 1:
            raise UsageError("a layer needs at least one unit")
        if self.activation not in ACTIVATIONS:
            raise UsageError(f"unknown activation {self.activation!r}")


@dataclass
class MlpParams:
    """Weights ``(units, fan_in)`` and biases per layer; the last layer is the output."""

    weights: list
    biases: list
    activations: list  # hidden activations; the output is always sigmoid

    @property
    def n_inputs(self) -> int:
        return self.weights[0].shape[1]

    def flat(self) -> np.ndarray:
        return np.concatenate([np.r_[w.ravel(), b] for w, b in zip(self.weights, self.biases)])

    def unflat(self, vec) -> "MlpParams":
        weights, biases, k = [], [], 0
        for w in self.weights:
            m, n = w.shape
            weights.append(vec[k:k + m * n].reshape(m, n))
            k += m * n
            biases.append(vec[k:k + m].copy())
            k += m
        return MlpParams(weights, biases, list(self.activations))

    def to_json(self) -> str:
        layers = [
            {"activation": act, "weight": w.tolist(), "bias": b.tolist()}
            for w, b, act in zip(self.weights, self.biases, self.activations + ["sigmoid"])
        ]
        return json.dumps({"layers": layers})

    @classmethod
    def from_json(cls, text: str) -> "MlpParams":
        layers = json.loads(text)["layers"]
        return cls(
            [np.array(layer["weight"], dtype=np.float64).reshape(len(layer["bias"]), -1) for layer in layers],
            [np.array(layer["bias"], dtype=np.float64) for layer in layers],
            [layer["activation"] for layer in layers[:-1]],
        )


def init_params(n_inputs: int, hidden, seed: int = 0) -> MlpParams:
    """Uniform on [-r, r], r = sqrt(6 / (fan_in + fan_out)), biases zero."""
    hidden = [h if isinstance(h, LayerSpec) else LayerSpec(*h) for h in hidden]
    sizes = [n_inputs] + [h.units for h in hidden] + [1]
    gen = rng(seed, 70)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        r = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(gen.uniform(-r, r, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights, biases, [h.activation for h in hidden])


def forward(params: MlpParams, rows):
    """Output probabilities and the per-layer ``(z, a)`` caches.

    ``caches[0]`` holds the input as its activation.
    """
    a = check_xy(rows)
    if a.shape[1] != params.n_inputs:
        raise UsageError(f"expected {params.n_inputs} features, got {a.shape[1]}")
    caches = [(None, a)]
    kinds = params.activations + ["sigmoid"]
    for w, b, kind in zip(params.weights, params.biases, kinds):
        z = a @ w.T + b
        a = activate(kind, z)
        caches.append((z, a))
    return a[:, 0], caches


def bce_loss(params: MlpParams, rows, labels) -> float:
    """Mean binary cross-entropy, evaluated from the output logit for stability."""
    _, caches = forward(params, rows)
    z = caches[-1][0][:, 0]
    y = np.asarray(labels, dtype=np.float64)
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def backward(params: MlpParams, caches, labels):
    """Gradients of the mean cross-entropy: ``(weight grads, bias grads)``."""
    y = np.asarray(labels, dtype=np.float64)
    batch = y.shape[0]
    out = caches[-1][1]
    delta = (out - y[:, None]) / batch  # sigmoid output with cross-entropy
    grad_w = [None] * len(params.weights)
    grad_b = [None] * len(params.weights)
    for layer in range(len(params.weights) - 1, -1, -1):
        a_prev = caches[layer][1]
        grad_w[layer] = delta.T @ a_prev
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            z, a = caches[layer]
            delta = (delta @ params.weights[layer]) * _activation_grad(params.activations[layer - 1], z, a)
    return grad_w, grad_b


def _flat_grad(grad_w, grad_b):
    return np.concatenate([np.r_[w.ravel(), b] for w, b in zip(grad_w, grad_b)])


@dataclass(frozen=True)
class MlpConfig:
    hidden: tuple = ((4, "tanh"), (2, "tanh"))
    epochs: int = 1000
    batch_size: int = 200
    lr: float = 0.001
    seed: int = 0

    def __post_init__(self):
        hidden = tuple(h if isinstance(h, LayerSpec) else LayerSpec(*h) for h in self.hidden)
        object.__setattr__(self, "hidden", hidden)
        if self.epochs < 0:
            raise UsageError("epochs must be >= 0")
        if self.batch_size < 1:
            raise UsageError("batch_size must be >= 1")


@dataclass
class TrainResult:
    params: MlpParams
    loss_trace: list = field(default_factory=list)  # mean batch loss per epoch


def mlp_train(features, labels, config: MlpConfig = MlpConfig()) -> TrainResult:
    x, y = check_xy(features, labels)
    if np.unique(y).size < 2:
        raise UsageError("MLP training needs both classes")
    params = init_params(x.shape[1], config.hidden, config.seed)
    opt = FirstOrderConfig("adam", lr=config.lr)
    vec = params.flat()
    state = OptimizerState.zeros(vec.shape[0])
    batch = min(config.batch_size, x.shape[0])
    trace = []
    yf = y.astype(np.float64)
    for epoch in range(config.epochs):
        total = 0.0
        for idx in epoch_batches(x.shape[0], batch, config.seed, epoch):
            current = params.unflat(vec)
            _, caches = forward(current, x[idx])
            z = caches[-1][0][:, 0]
            total += float(np.sum(np.logaddexp(0.0, z) - yf[idx] * z))
            grad = _flat_grad(*backward(current, caches, yf[idx]))
            vec, state = first_order_step(opt, state, vec, grad)
        mean = total / x.shape[0]
        if not np.isfinite(mean):
            raise NumericFailure(f"training loss became non-finite in epoch {epoch}")
        trace.append(mean)
    return TrainResult(params.unflat(vec), trace)


def mlp_predict(params: MlpParams, rows) -> np.ndarray:
    out, _ = forward(params, rows)
    return (out > 0.5).astype(np.int64)


class MLPClassifier(BinaryClassifier):
    def __init__(self, hidden=((4, "tanh"), (2, "tanh")), epochs=1000, batch_size=200, lr=0.001, seed=0):
        self.hidden = hidden
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.seed = seed

    def fit(self, features, labels):
        cfg = MlpConfig(tuple(self.hidden), self.epochs, self.batch_size, self.lr, self.seed)
        result = mlp_train(features, labels, cfg)
        self.params_ = result.params
        self.loss_trace_ = result.loss_trace
        self.n_features_ = self.params_.n_inputs
        return self

    def score(self, features):
        out, _ = forward(self.params_, self._check_query(features))
        return out
