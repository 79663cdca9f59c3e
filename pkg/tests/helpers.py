"""Independent reference implementations used as test oracles."""
import numpy as np

from nonresp.linear_margin import SvcConfig, kernel_matrix, kkt_violations, primal_objective_linear, svc_fit
from nonresp.trees import gini


def central_diff(f, x, h=1e-6):
    x = np.array(x, dtype=np.float64)
    out = np.empty_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step.flat[i] = h
        out.flat[i] = (f(x + step) - f(x - step)) / (2 * h)
    return out


def rel_err(a, b):
    a, b = np.ravel(a), np.ravel(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-12))


def brute_knn_counts(train, labels, queries, k):
    """Full sort by (distance, index) for each query."""
    out = []
    for q in queries:
        d = ((train - q) ** 2).sum(axis=1)
        order = sorted(range(len(d)), key=lambda i: (d[i], i))
        out.append(sum(int(labels[i]) for i in order[:k]))
    return np.array(out)


def brute_best_split(X, y, w=None, min_leaf=1):
    """Every (feature, midpoint) pair evaluated directly; first strict best wins."""
    w = np.ones(len(y)) if w is None else w
    best = None
    total = w.sum()
    parent = gini(w @ y / total)
    for f in range(X.shape[1]):
        vals = np.unique(X[:, f])
        for lo, hi in zip(vals[:-1], vals[1:]):
            t = 0.5 * (lo + hi)
            left = X[:, f] <= t
            if left.sum() < min_leaf or (~left).sum() < min_leaf:
                continue
            wl, wr = w[left].sum(), w[~left].sum()
            child = wl / total * gini(w[left] @ y[left] / wl) + wr / total * gini(w[~left] @ y[~left] / wr)
            red = parent - child
            if red > 1e-12 and (best is None or red > best[2] + 1e-12):
                best = (f, t, red)
    return best


def mann_whitney_auc(y, s):
    """Fraction of (positive, negative) pairs ranked correctly, ties counting half."""
    pos = s[y == 1]
    neg = s[y == 0]
    wins = sum(float(p > q) + 0.5 * float(p == q) for p in pos for q in neg)
    return wins / (len(pos) * len(neg))


def linear_svc_instance(seed):
    g = np.random.default_rng(seed)
    n = int(g.integers(10, 101))
    d = int(g.integers(1, 5))
    X = g.normal(size=(n, d))
    w = g.normal(size=d)
    y = np.where(X @ w + 0.3 * g.normal(size=n) > 0, 1.0, -1.0)
    if np.unique(y).size < 2:
        y[0] = -y[0]
    return X, y, float(g.choice([0.1, 1.0, 10.0]))


def svc_certificate(X, y, C, tol=1e-4, kkt_tol=1e-3):
    """(solution, KKT violator count, duality gap, dual objective) for a linear SVC."""
    sol = svc_fit(X, y, SvcConfig(C=C, kernel="linear", tol=tol))
    K = kernel_matrix("linear", 0.0, X, X)
    margins = y * (X @ sol.theta + sol.theta0)
    dual = sol.dual_objective(K)
    primal = primal_objective_linear(sol.theta, sol.theta0, X, y, C)
    return sol, kkt_violations(sol, margins, kkt_tol).size, primal - dual, dual
