"""CART classification trees, bagging / random forests and discrete AdaBoost.

Splits minimise weighted Gini impurity ``2p(1-p)``; candidate thresholds
are midpoints between consecutive distinct values and rows with
``x[feature] <= threshold`` go left. Fitted trees are stored as flat arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._accel import jit
from .classify import BinaryClassifier, check_xy
from .errors import UsageError
from .seeding import child_seeds, rng

# reductions closer than this are treated as ties
TIE_EPS = 1e-12
ALPHA_CAP_ERROR = 1e-10


def gini(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise UsageError(f"proportion must lie in [0,1], got {p}")
    return 2.0 * p * (1.0 - p)


def split_scores_numpy(X, y, w, feats, min_leaf, total_w, total_wy):
    m = feats.shape[0]
    n = X.shape[0]
    red = np.full((m, max(n - 1, 0)), -np.inf)
    thr = np.zeros((m, max(n - 1, 0)))
    if n < 2:
        return red, thr
    p = total_wy / total_w
    parent = 2.0 * p * (1.0 - p)
    pos = np.arange(1, n)
    size_ok = (pos >= min_leaf) & (n - pos >= min_leaf)
    wy = w * y
    for k in range(m):
        col = X[:, feats[k]]
        order = np.argsort(col, kind="stable")
        v = col[order]
        lw = np.cumsum(w[order])[:-1]
        lwy = np.cumsum(wy[order])[:-1]
        rw = total_w - lw
        rwy = total_wy - lwy
        with np.errstate(divide="ignore", invalid="ignore"):
            pl = lwy / lw
            pr = rwy / rw
            r = parent - (lw / total_w * (2.0 * pl * (1.0 - pl)) + rw / total_w * (2.0 * pr * (1.0 - pr)))
        ok = size_ok & (v[1:] > v[:-1])
        red[k] = np.where(ok, r, -np.inf)
        mid = 0.5 * (v[:-1] + v[1:])
        thr[k] = np.where(mid >= v[1:], v[:-1], mid)
    return red, thr


@jit(numpy_twin=split_scores_numpy)
def _split_scores(X, y, w, feats, min_leaf, total_w, total_wy):
    """Gini reduction and threshold for every (candidate feature, boundary).

    Row k of the outputs belongs to ``feats[k]``; column i is the boundary
    after the i-th smallest value. Invalid boundaries (equal neighbours or a
    side smaller than ``min_leaf``) get -inf.
    """
    m = feats.shape[0]
    n = X.shape[0]
    width = n - 1 if n > 1 else 0
    red = np.full((m, width), -np.inf)
    thr = np.zeros((m, width))
    if n < 2:
        return red, thr
    p = total_wy / total_w
    parent = 2.0 * p * (1.0 - p)
    for k in range(m):
        f = feats[k]
        col = X[:, f].copy()
        order = np.argsort(col, kind="mergesort")
        lw = 0.0
        lwy = 0.0
        for i in range(n - 1):
            r = order[i]
            lw += w[r]
            lwy += w[r] * y[r]
            v = col[r]
            vn = col[order[i + 1]]
            mid = 0.5 * (v + vn)
            thr[k, i] = v if mid >= vn else mid
            if not vn > v or i + 1 < min_leaf or n - i - 1 < min_leaf:
                continue
            rw = total_w - lw
            rwy = total_wy - lwy
            pl = lwy / lw
            pr = rwy / rw
            red[k, i] = parent - (lw / total_w * (2.0 * pl * (1.0 - pl)) + rw / total_w * (2.0 * pr * (1.0 - pr)))
    return red, thr


def best_split(features, labels, weights=None, candidates=None, min_samples_leaf=1):
    """Best (feature, threshold, reduction) by weighted Gini, or None.

    Ties (within 1e-12) go to the lower feature index, then the lower
    threshold. None when no split reduces impurity by a positive amount.
    """
    X = np.ascontiguousarray(features, dtype=np.float64)
    y = np.ascontiguousarray(labels, dtype=np.float64)
    n, d = X.shape
    w = np.ones(n) if weights is None else np.ascontiguousarray(weights, dtype=np.float64)
    feats = np.arange(d) if candidates is None else np.sort(np.asarray(candidates, dtype=np.int64))
    if n < 2 or feats.size == 0:
        return None
    red, thr = _split_scores(X, y, w, feats, min_samples_leaf, float(w.sum()), float(w @ y))
    top = red.max()
    if not top > TIE_EPS:
        return None
    k, i = np.argwhere(red >= top - TIE_EPS)[0]
    return int(feats[k]), float(thr[k, i]), float(red[k, i])


# --------------------------------------------------------------------- trees

@dataclass(frozen=True)
class CartConfig:
    max_depth: int | None = None
    min_samples_leaf: int = 1
    min_samples_split: int = 2

    def __post_init__(self):
        if self.min_samples_leaf < 1:
            raise UsageError("min_samples_leaf must be >= 1")
        if self.min_samples_split < 2:
            raise UsageError("min_samples_split must be >= 2")
        if self.max_depth is not None and self.max_depth < 0:
            raise UsageError("max_depth must be >= 0")


@dataclass(frozen=True)
class Tree:
    """Flat binary tree. Leaves have ``feature == -1``.

    ``value`` is the weighted positive fraction p_m of each node and
    ``n_samples`` its row count N_m.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by each row."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            f = self.feature[node]
            active = f >= 0
            if not active.any():
                return node
            r, nd = rows[active], node[active]
            go_left = X[r, f[active]] <= self.threshold[nd]
            node[active] = np.where(go_left, self.left[nd], self.right[nd])

    def proba(self, X) -> np.ndarray:
        return self.value[self.apply(X)]


def cart_fit(features, labels, weights=None, config: CartConfig = CartConfig(),
             max_features: int | None = None, seed: int = 0) -> Tree:
    """Greedy recursive partitioning.

    With ``max_features`` set, each split considers that many features drawn
    without replacement (random-forest mode).
    """
    X = np.ascontiguousarray(features, dtype=np.float64)
    y = np.ascontiguousarray(labels, dtype=np.float64)
    n, d = X.shape
    if n == 0:
        raise UsageError("cannot fit a tree on zero rows")
    w = np.ones(n) if weights is None else np.ascontiguousarray(weights, dtype=np.float64)
    if (w <= 0).any():
        raise UsageError("weights must be positive")
    if max_features is not None and not 1 <= max_features <= d:
        raise UsageError(f"max_features must lie in [1, {d}]")
    gen = rng(seed, 50) if max_features is not None and max_features < d else None

    feature, threshold, left, right, value, count = [], [], [], [], [], []

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        ww = w[idx]
        value.append(float(ww @ y[idx] / ww.sum()))
        count.append(idx.shape[0])
        return len(feature) - 1

    stack = [(new_node(np.arange(n)), np.arange(n), 0)]
    while stack:
        node, idx, depth = stack.pop()
        m = idx.shape[0]
        p = value[node]
        if (config.max_depth is not None and depth >= config.max_depth) or m < config.min_samples_split \
                or m < 2 * config.min_samples_leaf or p == 0.0 or p == 1.0:
            continue
        cands = None if gen is None else np.sort(gen.choice(d, size=max_features, replace=False))
        found = best_split(X[idx], y[idx], w[idx], cands, config.min_samples_leaf)
        if found is None:
            continue
        f, t, _ = found
        mask = X[idx, f] <= t
        li, ri = idx[mask], idx[~mask]
        feature[node], threshold[node] = f, t
        left[node] = new_node(li)
        right[node] = new_node(ri)
        # right pushed first so the left subtree is numbered first
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))

    return Tree(
        np.array(feature, dtype=np.int64), np.array(threshold), np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64), np.array(value), np.array(count, dtype=np.int64),
    )


class DecisionTreeClassifier(BinaryClassifier):
    def __init__(self, max_depth=None, min_samples_leaf=1, min_samples_split=2):
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.min_samples_split = min_samples_split

    def fit(self, features, labels, weights=None):
        x, y = check_xy(features, labels)
        cfg = CartConfig(self.max_depth, self.min_samples_leaf, self.min_samples_split)
        self.tree_ = cart_fit(x, y, weights, cfg)
        self.n_features_ = x.shape[1]
        return self

    def score(self, features):
        return self.tree_.proba(self._check_query(features))


# -------------------------------------------------------------------- forest

@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 10
    max_features: int | str | None = "sqrt"  # int, "sqrt" or None (all: bagging)
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise UsageError("n_trees must be >= 1")


def resolve_max_features(spec, d: int) -> int:
    if spec is None:
        return d
    if spec == "sqrt":
        return max(1, min(d, int(math.floor(math.sqrt(d) + 0.5))))
    m = int(spec)
    if not 1 <= m <= d:
        raise UsageError(f"max_features must lie in [1, {d}], got {m}")
    return m


@dataclass(frozen=True)
class ForestModel:
    trees: tuple

    def votes(self, X) -> np.ndarray:
        return np.mean([(t.proba(X) > 0.5) for t in self.trees], axis=0)


def forest_fit(features, labels, config: ForestConfig = ForestConfig()) -> ForestModel:
    """Unpruned trees on bootstrap resamples with per-split feature sampling.

    Each tree owns a seed derived from ``config.seed``, so a forest does not
    depend on the order in which its trees are built.
    """
    X = np.ascontiguousarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    n, d = X.shape
    m = resolve_max_features(config.max_features, d)
    trees = []
    for tree_seed in child_seeds(config.seed, config.n_trees, 60):
        if config.bootstrap:
            idx = rng(tree_seed, 61).integers(0, n, size=n)
            xb, yb = X[idx], y[idx]
        else:
            xb, yb = X, y
        trees.append(cart_fit(xb, yb, None, CartConfig(), max_features=m, seed=tree_seed))
    return ForestModel(tuple(trees))


def forest_predict(model: ForestModel, rows) -> np.ndarray:
    """Majority vote; an exact split vote predicts 0."""
    return (model.votes(np.asarray(rows, dtype=np.float64)) > 0.5).astype(np.int64)


class RandomForestClassifier(BinaryClassifier):
    """Score is the fraction of trees voting positive."""

    def __init__(self, n_trees=10, max_features="sqrt", bootstrap=True, seed=0):
        self.n_trees = n_trees
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.seed = seed

    def fit(self, features, labels):
        x, y = check_xy(features, labels)
        cfg = ForestConfig(self.n_trees, self.max_features, self.bootstrap, self.seed)
        self.forest_ = forest_fit(x, y, cfg)
        self.n_features_ = x.shape[1]
        return self

    def score(self, features):
        return self.forest_.votes(self._check_query(features))


# ------------------------------------------------------------------ AdaBoost

@dataclass(frozen=True)
class Stump:
    feature: int
    threshold: float
    left_sign: int  # +1 / -1 for rows with x <= threshold
    right_sign: int

    def predict_signed(self, X) -> np.ndarray:
        return np.where(X[:, self.feature] <= self.threshold, self.left_sign, self.right_sign)


@dataclass(frozen=True)
class BoostModel:
    alphas: tuple
    stumps: tuple
    errors: tuple
    # set only when stage 1 already failed (e_1 >= 0.5): constant prediction
    majority: int | None = None

    @property
    def n_stages(self) -> int:
        return len(self.stumps)

    def decision(self, X) -> np.ndarray:
        total = np.zeros(X.shape[0])
        for a, s in zip(self.alphas, self.stumps):
            total += a * s.predict_signed(X)
        return total


def stump_from_tree(tree: Tree) -> Stump | None:
    if tree.feature[0] < 0:
        return None
    sign = lambda p: 1 if p > 0.5 else -1  # noqa: E731
    return Stump(int(tree.feature[0]), float(tree.threshold[0]),
                 sign(tree.value[tree.left[0]]), sign(tree.value[tree.right[0]]))


def boost_alpha(error: float) -> float:
    return 0.5 * math.log((1.0 - error) / error)


def adaboost_fit(features, labels, n_stages: int = 3, record_weights: bool = False):
    """Discrete AdaBoost with depth-1 weighted-Gini stumps.

    Labels are 0/1 and mapped to -1/+1 internally. Returns the model and,
    if ``record_weights``, the normalised weight vector in force at the start
    of every fitted stage followed by the final weights.
    """
    X = np.ascontiguousarray(features, dtype=np.float64)
    y01 = np.asarray(labels)
    if np.unique(y01).size < 2:
        raise UsageError("AdaBoost needs both classes present")
    if n_stages < 1:
        raise UsageError("n_stages must be >= 1")
    ys = np.where(y01 == 1, 1.0, -1.0)
    n = X.shape[0]
    w = np.full(n, 1.0 / n)
    history = [w.copy()]
    alphas, stumps, errors = [], [], []
    for _ in range(n_stages):
        stump = stump_from_tree(cart_fit(X, y01, w, CartConfig(max_depth=1)))
        if stump is None:
            break
        h = stump.predict_signed(X)
        err = float(w[h != ys].sum() / w.sum())
        if err >= 0.5:
            break
        if err == 0.0:
            alphas.append(boost_alpha(ALPHA_CAP_ERROR))
            stumps.append(stump)
            errors.append(err)
            break
        alpha = boost_alpha(err)
        w = w * np.exp(-alpha * ys * h)
        w = w / w.sum()
        alphas.append(alpha)
        stumps.append(stump)
        errors.append(err)
        history.append(w.copy())
    majority = None if stumps else int(np.mean(y01) > 0.5)
    model = BoostModel(tuple(alphas), tuple(stumps), tuple(errors), majority)
    return (model, history) if record_weights else model


def adaboost_predict(model: BoostModel, rows) -> np.ndarray:
    X = np.asarray(rows, dtype=np.float64)
    if model.n_stages == 0:
        if model.majority is None:
            raise UsageError("boosted model has no stages")
        return np.full(X.shape[0], model.majority, dtype=np.int64)
    return (model.decision(X) > 0).astype(np.int64)


class AdaBoostClassifier(BinaryClassifier):
    threshold = 0.0

    def __init__(self, n_stages=3):
        self.n_stages = n_stages

    def fit(self, features, labels):
        x, y = check_xy(features, labels)
        self.model_ = adaboost_fit(x, y, self.n_stages)
        self.n_features_ = x.shape[1]
        return self

    def score(self, features):
        x = self._check_query(features)
        if self.model_.n_stages == 0:
            return np.full(x.shape[0], 1.0 if self.model_.majority else -1.0)
        return self.model_.decision(x)
