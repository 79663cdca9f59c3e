"""Permutation importance, rank correlation and feature clustering."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import UsageError
from .seeding import rng
from .tabular import Table


@dataclass(frozen=True)
class ImportanceResult:
    features: tuple
    mean_drop: np.ndarray
    std: np.ndarray
    base_accuracy: float

    @property
    def order(self) -> list[int]:
        """Feature indices by descending mean drop, ties by name."""
        return sorted(range(len(self.features)), key=lambda j: (-self.mean_drop[j], self.features[j]))

    @property
    def ranks(self) -> np.ndarray:
        out = np.empty(len(self.features), dtype=np.int64)
        for r, j in enumerate(self.order, start=1):
            out[j] = r
        return out

    def rank_of(self, name: str) -> int:
        return int(self.ranks[self.features.index(name)])

    def to_csv(self) -> str:
        lines = ["feature,mean_drop,std,rank"]
        ranks = self.ranks
        for j in self.order:
            lines.append(f"{self.features[j]},{float(self.mean_drop[j])!r},{float(self.std[j])!r},{ranks[j]}")
        return "\n".join(lines) + "\n"


def permutation_importance(pipeline, table: Table, n_repeats: int = 10, seed: int = 0,
                           features=None) -> ImportanceResult:
    """Accuracy drop when one raw column of ``table`` is shuffled.

    Columns are permuted before the pipeline's own transform, so encoders
    only ever see valid levels. Each (feature, repeat) pair draws its own
    permutation from the seed.
    """
    if n_repeats < 1:
        raise UsageError("n_repeats must be >= 1")
    names = tuple(features) if features is not None else tuple(table.feature_names)
    y = table.labels()
    base = float(np.mean(pipeline.predict(table) == y))
    drops = np.empty((len(names), n_repeats))
    for j, name in enumerate(names):
        col = table[name]
        for r in range(n_repeats):
            perm = rng(seed, 80, j, r).permutation(table.n_rows)
            shuffled = table.with_column(name, col[perm])
            drops[j, r] = base - float(np.mean(pipeline.predict(shuffled) == y))
    return ImportanceResult(names, drops.mean(axis=1), drops.std(axis=1), base)


def feature_correlation(matrix):
    """Spearman correlation matrix and a mask of zero-variance columns.

    Correlations with a constant column are defined as 0; the diagonal is 1.
    """
    x = np.asarray(matrix, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] < 2:
        raise UsageError("need a 2-D matrix with at least two columns")
    ranks = np.apply_along_axis(rankdata, 0, x)
    centred = ranks - ranks.mean(axis=0)
    norm = np.sqrt((centred * centred).sum(axis=0))
    constant = norm == 0
    safe = np.where(constant, 1.0, norm)
    z = centred / safe
    corr = z.T @ z
    corr[constant, :] = 0.0
    corr[:, constant] = 0.0
    np.fill_diagonal(corr, 1.0)
    return np.clip(corr, -1.0, 1.0), constant


# ----------------------------------------------------------------- dendrogram

@dataclass(frozen=True)
class Leaf:
    index: int

    @property
    def height(self) -> float:
        return 0.0

    def leaves(self) -> list[int]:
        return [self.index]


@dataclass(frozen=True)
class Merge:
    left: object
    right: object
    height: float

    def leaves(self) -> list[int]:
        return self.left.leaves() + self.right.leaves()


def hier_cluster(corr) -> Leaf | Merge:
    """Average-linkage agglomeration on ``1 - |rho|``.

    Equal distances resolve to the pair with the smallest (i, j) among the
    current cluster slots, where a merged cluster takes the lower slot.
    """
    c = np.asarray(corr, dtype=np.float64)
    n = c.shape[0]
    if c.ndim != 2 or c.shape != (n, n) or n < 1:
        raise UsageError("correlation matrix must be square")
    dist = 1.0 - np.abs(c)
    np.fill_diagonal(dist, np.inf)
    nodes = [Leaf(i) for i in range(n)]
    sizes = np.ones(n)
    alive = np.ones(n, dtype=bool)
    for _ in range(n - 1):
        masked = np.where(alive[:, None] & alive[None, :], dist, np.inf)
        flat = int(np.argmin(masked))  # row-major: first (i, j) on ties
        i, j = divmod(flat, n)
        i, j = min(i, j), max(i, j)
        h = float(dist[i, j])
        nodes[i] = Merge(nodes[i], nodes[j], h)
        new_row = (sizes[i] * dist[i] + sizes[j] * dist[j]) / (sizes[i] + sizes[j])
        dist[i, :] = new_row
        dist[:, i] = new_row
        dist[i, i] = np.inf
        sizes[i] += sizes[j]
        alive[j] = False
        nodes[j] = None
    return nodes[int(np.flatnonzero(alive)[0])]


def dendrogram_json(node, names=None) -> str:
    def encode(nd):
        if isinstance(nd, Leaf):
            return {"leaf": nd.index if names is None else names[nd.index]}
        return {"height": nd.height, "left": encode(nd.left), "right": encode(nd.right)}
    return json.dumps(encode(node), indent=1)


def cut_clusters(node, height: float) -> list[list[int]]:
    """Leaf groups of the subtrees whose merge height is at most ``height``."""
    if isinstance(node, Leaf) or node.height <= height:
        return [sorted(node.leaves())]
    return cut_clusters(node.left, height) + cut_clusters(node.right, height)


def pick_representatives(node, names, height: float) -> list[str]:
    """Lexicographically first feature name of every cluster below ``height``."""
    return sorted(min(names[i] for i in group) for group in cut_clusters(node, height))
