"""Classifier contract, the majority-class null model and brute-force KNN."""
from __future__ import annotations

import numpy as np

from ._accel import jit
from .errors import UsageError


def check_xy(features, labels=None):
    x = np.ascontiguousarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise UsageError(f"features must be 2-D, got shape {x.shape}")
    if labels is None:
        return x
    y = np.asarray(labels)
    if y.shape != (x.shape[0],):
        raise UsageError("labels length must equal the number of rows")
    if not np.isin(y, (0, 1)).all():
        raise UsageError("labels must be 0/1")
    return x, y.astype(np.int64)


class BinaryClassifier:
    """fit(X, y) -> self; score(X) -> real scores; predict(X) -> {0,1}.

    ``predict`` is ``score > threshold``: 0.5 for probability-like scores,
    0 for margins. Exact ties therefore go to class 0.
    """

    threshold = 0.5
    n_features_: int

    def fit(self, features, labels):
        raise NotImplementedError

    def score(self, features) -> np.ndarray:
        raise NotImplementedError

    def predict(self, features) -> np.ndarray:
        return (self.score(features) > self.threshold).astype(np.int64)

    def _check_query(self, features):
        x = check_xy(features)
        if x.shape[1] != self.n_features_:
            raise UsageError(f"expected {self.n_features_} features, got {x.shape[1]}")
        return x


class NullModel(BinaryClassifier):
    """Predicts the training majority class; a 50/50 split predicts 0."""

    def fit(self, features, labels):
        x, y = check_xy(features, labels)
        if y.size == 0:
            raise UsageError("cannot fit on empty labels")
        self.n_features_ = x.shape[1]
        self.positive_rate_ = float(y.mean())
        self.majority_ = int(self.positive_rate_ > 0.5)
        return self

    def score(self, features):
        x = self._check_query(features)
        return np.full(x.shape[0], self.positive_rate_)


def null_fit_predict(labels_train, n_test: int) -> np.ndarray:
    y = np.asarray(labels_train)
    if y.size == 0:
        raise UsageError("cannot fit on empty labels")
    return np.full(n_test, int(y.mean() > 0.5), dtype=np.int64)


def knn_positive_counts_numpy(train, labels, queries, k, chunk=256):
    """Vectorised twin of the compiled kernel with the same accumulation order."""
    out = np.empty(queries.shape[0], dtype=np.int64)
    for start in range(0, queries.shape[0], chunk):
        q = queries[start:start + chunk]
        dist = np.zeros((q.shape[0], train.shape[0]))
        for c in range(train.shape[1]):
            diff = train[None, :, c] - q[:, c, None]
            dist += diff * diff
        order = np.argsort(dist, axis=1, kind="stable")[:, :k]
        out[start:start + chunk] = labels[order].sum(axis=1)
    return out


@jit(numpy_twin=knn_positive_counts_numpy)
def _knn_positive_counts(train, labels, queries, k):
    """Positive-label count among the k nearest training rows of each query.

    Squared Euclidean distance accumulated column by column; equal distances
    resolve to the lower training index through a stable sort.
    """
    n, d = train.shape
    out = np.empty(queries.shape[0], dtype=np.int64)
    dist = np.empty(n)
    for q in range(queries.shape[0]):
        for i in range(n):
            acc = 0.0
            for c in range(d):
                diff = train[i, c] - queries[q, c]
                acc += diff * diff
            dist[i] = acc
        order = np.argsort(dist, kind="mergesort")
        count = 0
        for r in range(k):
            count += labels[order[r]]
        out[q] = count
    return out


class KNNClassifier(BinaryClassifier):
    """Lazy K-nearest-neighbour voter; score is the positive fraction among K."""

    def __init__(self, k: int = 10):
        self.k = k

    def fit(self, features, labels):
        x, y = check_xy(features, labels)
        if not 1 <= self.k <= x.shape[0]:
            raise UsageError(f"K must lie in [1, {x.shape[0]}], got {self.k}")
        self.train_ = x
        self.labels_ = y
        self.n_features_ = x.shape[1]
        return self

    def score(self, features):
        x = self._check_query(features)
        counts = _knn_positive_counts(self.train_, self.labels_, x, self.k)
        return counts / self.k


def knn_fit(features, labels, k: int) -> KNNClassifier:
    return KNNClassifier(k).fit(features, labels)


def knn_score(model: KNNClassifier, rows) -> np.ndarray:
    return model.score(rows)
