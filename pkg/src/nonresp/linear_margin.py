"""Penalised logistic regression and the soft-margin kernel SVC.

Logistic regression minimises the summed negative log-likelihood plus
``lam * R(theta)`` by SAGA, with ``lam = 1/C``. The SVC solves the dual
quadratic programme by pairwise coordinate ascent (maximal violating
pair), so every fitted model carries its multipliers and can be checked
against the KKT conditions directly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._accel import jit
from .classify import BinaryClassifier, check_xy
from .errors import UsageError
from .optim import LinearFiniteSum, SagaConfig, saga_minimize

PROB_CLAMP = 1e-12


def sigmoid(x):
    """Logistic function, branching on sign so large |x| never overflows."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out if out.ndim else float(out)


def _penalty_value(theta, penalty, lam):
    if penalty == "l1":
        return lam * float(np.abs(theta).sum())
    if penalty == "l2":
        return 0.5 * lam * float(theta @ theta)
    return 0.0


def logreg_nll(theta, theta0, features, labels, penalty="none", lam=0.0):
    """Summed negative log-likelihood plus ``lam * R(theta)``.

    Returns ``(loss, grad_theta, grad_theta0)``. The l1 term enters the loss
    but not the gradient; the optimiser handles it proximally.
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    h = np.clip(sigmoid(x @ theta + theta0), PROB_CLAMP, 1.0 - PROB_CLAMP)
    loss = -float(np.sum(y * np.log(h) + (1.0 - y) * np.log(1.0 - h)))
    loss += _penalty_value(theta, penalty, lam)
    resid = h - y
    grad = x.T @ resid
    if penalty == "l2":
        grad = grad + lam * theta
    return loss, grad, float(resid.sum())


@dataclass(frozen=True)
class LogRegConfig:
    penalty: str = "l1"
    C: float = 1.0
    max_iter: int | None = None  # SAGA epochs; None -> 4000 penalised, 3000 otherwise
    tol: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.penalty not in ("none", "l1", "l2"):
            raise UsageError(f"unknown penalty {self.penalty!r}")
        if not self.C > 0:
            raise UsageError("C must be positive")
        if self.max_iter is None:
            object.__setattr__(self, "max_iter", 3000 if self.penalty == "none" else 4000)

    @property
    def lam(self) -> float:
        return 1.0 / self.C


@dataclass(frozen=True)
class LogRegModel:
    theta: np.ndarray
    theta0: float
    n_epochs: int = 0
    converged: bool = True

    def predict_proba(self, rows) -> np.ndarray:
        x = check_xy(rows)
        if x.shape[1] != self.theta.shape[0]:
            raise UsageError(f"expected {self.theta.shape[0]} features, got {x.shape[1]}")
        return sigmoid(x @ self.theta + self.theta0)


def logreg_fit(features, labels, config: LogRegConfig = LogRegConfig()) -> LogRegModel:
    x, y = check_xy(features, labels)
    if np.unique(y).size < 2:
        raise UsageError("logistic regression needs both classes")
    objective = LinearFiniteSum(x, y, "logistic")
    saga = SagaConfig(lam=config.lam, penalty=config.penalty, max_iter=config.max_iter,
                      tol=config.tol, seed=config.seed)
    result = saga_minimize(saga, objective, np.zeros(objective.dim))
    return LogRegModel(result.params[:-1].copy(), float(result.params[-1]),
                       result.n_epochs, result.converged)


def logreg_predict_proba(model: LogRegModel, rows) -> np.ndarray:
    return model.predict_proba(rows)


class LogisticRegression(BinaryClassifier):
    def __init__(self, penalty="l1", C=1.0, max_iter=None, tol=1e-4, seed=0):
        self.penalty = penalty
        self.C = C
        self.max_iter = max_iter
        self.tol = tol
        self.seed = seed

    def fit(self, features, labels):
        cfg = LogRegConfig(self.penalty, self.C, self.max_iter, self.tol, self.seed)
        self.model_ = logreg_fit(features, labels, cfg)
        self.n_features_ = self.model_.theta.shape[0]
        return self

    def score(self, features):
        return self.model_.predict_proba(self._check_query(features))


# ---------------------------------------------------------------------- SVC

def kernel_matrix(kind: str, gamma: float, a, b) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise UsageError(f"kernel inputs differ in width: {a.shape[1]} vs {b.shape[1]}")
    dot = a @ b.T
    if kind == "linear":
        return dot
    if kind == "rbf":
        sq = (a * a).sum(axis=1)[:, None] + (b * b).sum(axis=1)[None, :] - 2.0 * dot
        return np.exp(-gamma * np.maximum(sq, 0.0))
    raise UsageError(f"unknown kernel {kind!r}")


def kernel_eval(kind: str, gamma: float, x, x2) -> float:
    x = np.asarray(x, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    if x.shape != x2.shape:
        raise UsageError("kernel arguments must have equal length")
    if kind == "linear":
        return float(x @ x2)
    if kind == "rbf":
        d = x - x2
        return float(np.exp(-gamma * (d @ d)))
    raise UsageError(f"unknown kernel {kind!r}")


@dataclass(frozen=True)
class SvcConfig:
    C: float = 1.0
    kernel: str = "rbf"
    gamma: float = 0.1
    tol: float = 1e-3
    max_passes: int = 200  # iteration budget is max_passes * n pair updates

    def __post_init__(self):
        if not self.C > 0:
            raise UsageError("C must be positive")
        if self.kernel not in ("linear", "rbf"):
            raise UsageError(f"unknown kernel {self.kernel!r}")
        if self.kernel == "rbf" and not self.gamma > 0:
            raise UsageError("gamma must be positive")


@jit
def _smo(K, y, C, tol, max_iter, a, G):
    """Pairwise dual ascent on ``min 1/2 a'Qa - sum a``, ``Q_ij = y_i y_j K_ij``.

    ``a`` and ``G`` (the gradient ``Qa - 1``) are updated in place. Each
    iteration picks the maximal violating pair and solves the two-variable
    subproblem exactly under the box and equality constraints. Returns the
    number of pair updates, negated if the budget ran out first.
    """
    n = y.shape[0]
    it = 0
    while it < max_iter:
        gmax = -np.inf
        gmin = np.inf
        i = -1
        j = -1
        for t in range(n):
            v = -y[t] * G[t]
            up = (y[t] > 0 and a[t] < C) or (y[t] < 0 and a[t] > 0)
            low = (y[t] > 0 and a[t] > 0) or (y[t] < 0 and a[t] < C)
            if up and v > gmax:
                gmax = v
                i = t
            if low and v < gmin:
                gmin = v
                j = t
        if i < 0 or j < 0 or gmax - gmin < tol:
            return it
        kij = K[i, j]
        old_i = a[i]
        old_j = a[j]
        if y[i] != y[j]:
            quad = K[i, i] + K[j, j] - 2.0 * kij
            if quad <= 0:
                quad = 1e-12
            delta = (-G[i] - G[j]) / quad
            diff = a[i] - a[j]
            a[i] += delta
            a[j] += delta
            if diff > 0:
                if a[j] < 0:
                    a[j] = 0.0
                    a[i] = diff
            else:
                if a[i] < 0:
                    a[i] = 0.0
                    a[j] = -diff
            if diff > 0:
                if a[i] > C:
                    a[i] = C
                    a[j] = C - diff
            else:
                if a[j] > C:
                    a[j] = C
                    a[i] = C + diff
        else:
            quad = K[i, i] + K[j, j] - 2.0 * kij
            if quad <= 0:
                quad = 1e-12
            delta = (G[i] - G[j]) / quad
            total = a[i] + a[j]
            a[i] -= delta
            a[j] += delta
            if total > C:
                if a[i] > C:
                    a[i] = C
                    a[j] = total - C
            else:
                if a[j] < 0:
                    a[j] = 0.0
                    a[i] = total
            if total > C:
                if a[j] > C:
                    a[j] = C
                    a[i] = total - C
            else:
                if a[i] < 0:
                    a[i] = 0.0
                    a[j] = total
        di = a[i] - old_i
        dj = a[j] - old_j
        for t in range(n):
            G[t] += y[t] * (y[i] * K[t, i] * di + y[j] * K[t, j] * dj)
        it += 1
    return -it


@dataclass(frozen=True)
class DualSolution:
    a: np.ndarray          # multipliers, one per training row
    theta0: float
    y: np.ndarray          # training labels in {-1, +1}
    C: float
    n_iter: int
    converged: bool
    theta: np.ndarray | None = None  # materialised weights for the linear kernel

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.a > 0)

    def dual_objective(self, K) -> float:
        ay = self.a * self.y
        return float(self.a.sum() - 0.5 * ay @ K @ ay)

    def is_feasible(self, eq_tol: float = 1e-8) -> bool:
        box = bool(np.all(self.a >= 0) and np.all(self.a <= self.C))
        return box and abs(float(self.a @ self.y)) <= eq_tol


def _signed(labels):
    y = np.asarray(labels)
    if np.isin(y, (-1, 1)).all():
        return y.astype(np.float64)
    if np.isin(y, (0, 1)).all():
        return np.where(y == 1, 1.0, -1.0)
    raise UsageError("labels must be in {-1,+1} or {0,1}")


def svc_fit(features, labels, config: SvcConfig = SvcConfig(), gram=None, max_iter=None) -> DualSolution:
    """Fit the soft-margin SVC dual. Labels may be {-1,+1} or {0,1}.

    ``gram`` lets callers reuse a precomputed kernel matrix. ``max_iter``
    overrides the pair-update budget (useful for tracing the ascent).
    """
    x = check_xy(features)
    y = _signed(labels)
    if y.shape != (x.shape[0],):
        raise UsageError("labels length must equal the number of rows")
    if np.unique(y).size < 2:
        raise UsageError("SVC needs both classes")
    K = kernel_matrix(config.kernel, config.gamma, x, x) if gram is None else np.asarray(gram, dtype=np.float64)
    n = y.shape[0]
    a = np.zeros(n)
    G = -np.ones(n)
    budget = config.max_passes * n if max_iter is None else max_iter
    it = _smo(K, y, float(config.C), float(config.tol), int(budget), a, G)
    converged = _max_violation(a, G, y, config.C) < config.tol
    theta0 = _bias(a, G, y, config.C)
    theta = (a * y) @ x if config.kernel == "linear" else None
    return DualSolution(a, theta0, y, float(config.C), abs(int(it)), bool(converged), theta)


def _violation_sets(a, y, C):
    up = ((y > 0) & (a < C)) | ((y < 0) & (a > 0))
    low = ((y > 0) & (a > 0)) | ((y < 0) & (a < C))
    return up, low


def _max_violation(a, G, y, C):
    up, low = _violation_sets(a, y, C)
    v = -y * G
    return float(v[up].max() - v[low].min()) if up.any() and low.any() else 0.0


def _bias(a, G, y, C):
    free = (a > 0) & (a < C)
    v = -y * G
    if free.any():
        return float(v[free].mean())
    up, low = _violation_sets(a, y, C)
    hi = v[low].min() if low.any() else v[up].max()
    lo = v[up].max() if up.any() else hi
    return float(0.5 * (hi + lo))


def svc_decision(solution: DualSolution, kernel: str, gamma: float, train, rows) -> np.ndarray:
    """``sum_i a_i y_i k(x_i, x) + theta0`` for each query row."""
    train = check_xy(train)
    rows = check_xy(rows)
    if rows.shape[1] != train.shape[1]:
        raise UsageError(f"expected {train.shape[1]} features, got {rows.shape[1]}")
    sv = solution.support
    if sv.size == 0:
        return np.full(rows.shape[0], solution.theta0)
    coef = solution.a[sv] * solution.y[sv]
    return kernel_matrix(kernel, gamma, rows, train[sv]) @ coef + solution.theta0


def kkt_violations(solution: DualSolution, margins, tol: float) -> np.ndarray:
    """Indices breaking the complementary-slackness conditions.

    ``margins`` are ``y_i f(x_i)`` on the training rows.
    """
    a, C = solution.a, solution.C
    at_zero = a == 0
    at_c = a == C
    free = ~at_zero & ~at_c
    bad = (at_zero & (margins < 1 - tol)) | (free & (np.abs(margins - 1) > tol)) | (at_c & (margins > 1 + tol))
    return np.flatnonzero(bad)


def primal_objective_linear(theta, theta0, features, y, C) -> float:
    """``1/2 |theta|^2 + C sum max(0, 1 - y f(x))`` for the linear kernel."""
    f = np.asarray(features, dtype=np.float64) @ theta + theta0
    return float(0.5 * theta @ theta + C * np.maximum(0.0, 1.0 - y * f).sum())


class SVC(BinaryClassifier):
    """Kernel SVC; scores are raw decision values and the threshold is 0."""

    threshold = 0.0

    def __init__(self, C=1.0, kernel="rbf", gamma=0.1, tol=1e-3, max_passes=200):
        self.C = C
        self.kernel = kernel
        self.gamma = gamma
        self.tol = tol
        self.max_passes = max_passes

    def fit(self, features, labels):
        x, y = check_xy(features, labels)
        self.config_ = SvcConfig(self.C, self.kernel, self.gamma, self.tol, self.max_passes)
        self.solution_ = svc_fit(x, y, self.config_)
        sv = self.solution_.support
        self.support_vectors_ = x[sv]
        self.n_features_ = x.shape[1]
        self.train_ = x
        return self

    def score(self, features):
        x = self._check_query(features)
        return svc_decision(self.solution_, self.kernel, self.gamma, self.train_, x)

    def kkt_feasible(self, tol: float | None = None) -> bool:
        """Box, equality and KKT conditions hold on the training rows."""
        tol = self.tol if tol is None else tol
        sol = self.solution_
        margins = sol.y * self.score(self.train_)
        return sol.is_feasible() and kkt_violations(sol, margins, tol).size == 0
