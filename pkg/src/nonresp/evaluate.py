"""Confusion-matrix metrics, ROC/AUC, validation curves and grid search."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .preprocess import Recipe, pipeline_fit
from .tabular import SplitPlan, Table, shuffle_split_iter


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise UsageError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def confusion(y_true, y_pred) -> ConfusionMatrix:
    t = np.asarray(y_true)
    p = np.asarray(y_pred)
    if t.shape != p.shape or t.ndim != 1:
        raise UsageError("y_true and y_pred must be 1-D and equally long")
    if not (np.isin(t, (0, 1)).all() and np.isin(p, (0, 1)).all()):
        raise UsageError("labels must be 0/1")
    t = t.astype(bool)
    p = p.astype(bool)
    return ConfusionMatrix(int(np.sum(t & p)), int(np.sum(~t & ~p)), int(np.sum(~t & p)), int(np.sum(t & ~p)))


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    balanced_accuracy: float
    misclassification: float
    recall: float | None
    specificity: float | None
    fpr: float | None
    precision: float | None = None
    auc: float | None = None

    def as_dict(self) -> dict:
        """Metric fields in report order, absent values omitted."""
        keys = ("accuracy", "balanced_accuracy", "misclassification", "precision",
                "recall", "specificity", "fpr", "auc")
        return {k: getattr(self, k) for k in keys if getattr(self, k) is not None}


def _ratio(num, den):
    return num / den if den > 0 else None


def metrics(cm: ConfusionMatrix, y_true=None, scores=None) -> MetricsReport:
    """Derived rates of a confusion matrix; AUC when truth and scores are given."""
    if cm.total == 0:
        raise UsageError("empty confusion matrix")
    accuracy = (cm.tp + cm.tn) / cm.total
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    specificity = _ratio(cm.tn, cm.tn + cm.fp)
    fpr = _ratio(cm.fp, cm.fp + cm.tn)
    parts = [v for v in (recall, specificity) if v is not None]
    balanced = sum(parts) / len(parts)
    area = None
    if scores is not None and y_true is not None and len(np.unique(y_true)) == 2:
        area = auc(roc_curve(y_true, scores))
    return MetricsReport(accuracy, balanced, 1.0 - accuracy, recall, specificity, fpr,
                         _ratio(cm.tp, cm.tp + cm.fp), area)


# ------------------------------------------------------------------------ ROC

@dataclass(frozen=True)
class RocCurve:
    thresholds: np.ndarray  # +inf first
    fpr: np.ndarray
    tpr: np.ndarray

    def to_csv(self) -> str:
        lines = ["threshold,fpr,tpr"]
        lines += [f"{t!r},{f!r},{p!r}" for t, f, p in zip(self.thresholds.tolist(), self.fpr.tolist(), self.tpr.tolist())]
        return "\n".join(lines) + "\n"


def roc_curve(y_true, scores) -> RocCurve:
    """One point per distinct score (descending) plus the (inf, 0, 0) origin."""
    y = np.asarray(y_true)
    s = np.asarray(scores, dtype=np.float64)
    if y.shape != s.shape or y.ndim != 1:
        raise UsageError("y_true and scores must be 1-D and equally long")
    n_pos = int(np.sum(y == 1))
    n_neg = y.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UsageError("ROC needs both classes in y_true")
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    pos = np.cumsum(y[order] == 1)
    neg = np.arange(1, s.shape[0] + 1) - pos
    # last index of each group of tied scores
    ends = np.r_[np.flatnonzero(np.diff(s_sorted) != 0), s.shape[0] - 1]
    thresholds = np.r_[np.inf, s_sorted[ends]]
    tpr = np.r_[0.0, pos[ends] / n_pos]
    fpr = np.r_[0.0, neg[ends] / n_neg]
    return RocCurve(thresholds, fpr, tpr)


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under tpr(fpr)."""
    dx = np.diff(curve.fpr)
    return float(np.sum(dx * (curve.tpr[1:] + curve.tpr[:-1]) * 0.5))


# ------------------------------------------------------------ model selection

@dataclass
class ValidationCurveResult:
    param: str
    values: list
    train_mean: np.ndarray
    train_std: np.ndarray
    val_mean: np.ndarray
    val_std: np.ndarray

    def to_csv(self) -> str:
        lines = ["param,train_mean,train_std,val_mean,val_std"]
        for i, v in enumerate(self.values):
            lines.append(
                f"{v},{float(self.train_mean[i])!r},{float(self.train_std[i])!r},"
                f"{float(self.val_mean[i])!r},{float(self.val_std[i])!r}"
            )
        return "\n".join(lines) + "\n"


def _fold_scores(table: Table, factory, params: dict, recipe: Recipe, plan: SplitPlan, metric: str):
    """Train and validation scores on every shuffle split for one setting."""
    labels = table.labels()
    train_scores, val_scores, errors = [], [], []
    for fold, (tr, va) in enumerate(shuffle_split_iter(table.n_rows, plan, labels if plan.stratified else None)):
        try:
            pipe = pipeline_fit(table, tr, recipe, factory(**params))
            train_scores.append(_score(labels[tr], pipe.predict(table.take(tr)), metric))
            val_scores.append(_score(labels[va], pipe.predict(table.take(va)), metric))
        except Exception as exc:  # recorded per cell, then re-raised by the caller
            errors.append((fold, exc))
    return np.array(train_scores), np.array(val_scores), errors


def _score(y, pred, metric):
    if metric == "accuracy":
        return float(np.mean(y == pred))
    if metric == "balanced_accuracy":
        return metrics(confusion(y, pred)).balanced_accuracy
    raise UsageError(f"unknown selection metric {metric!r}")


def validation_curve(factory, param: str, values, table: Table, plan: SplitPlan,
                     recipe: Recipe = Recipe(), fixed: dict | None = None,
                     metric: str = "accuracy") -> ValidationCurveResult:
    """Train/validation score mean and population std for each value of ``param``.

    ``factory(**kwargs)`` builds an unfitted classifier. Failures are
    collected per (value, fold); if any occur the first is re-raised after
    the sweep with the full list attached as ``exc.cells``.
    """
    values = list(values)
    if not values:
        raise UsageError("value grid is empty")
    fixed = dict(fixed or {})
    stats = []
    failures = []
    for v in values:
        tr, va, errors = _fold_scores(table, factory, {**fixed, param: v}, recipe, plan, metric)
        failures += [(v, fold, exc) for fold, exc in errors]
        stats.append((tr.mean() if tr.size else np.nan, tr.std() if tr.size else np.nan,
                      va.mean() if va.size else np.nan, va.std() if va.size else np.nan))
    if failures:
        exc = failures[0][2]
        exc.cells = [(v, fold, str(e)) for v, fold, e in failures]
        raise exc
    arr = np.array(stats)
    return ValidationCurveResult(param, values, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])


def grid_cells(grid: dict) -> list[dict]:
    """Cross product in enumeration order: keys sorted, values in given order."""
    keys = sorted(grid)
    for k in keys:
        if not list(grid[k]):
            raise UsageError(f"grid for {k!r} is empty")
    return [dict(zip(keys, combo)) for combo in itertools.product(*(list(grid[k]) for k in keys))]


@dataclass
class GridSearchResult:
    best: dict
    cells: list  # (params, val_mean, val_std, train_mean, train_std)

    @property
    def best_score(self) -> float:
        return max(c[1] for c in self.cells)


def grid_search(factory, grid: dict, table: Table, plan: SplitPlan, recipe: Recipe = Recipe(),
                metric: str = "accuracy") -> GridSearchResult:
    """Pick the cell with the highest mean validation score; ties go to the earliest cell."""
    cells = []
    best, best_score = None, -np.inf
    for params in grid_cells(grid):
        tr, va, errors = _fold_scores(table, factory, params, recipe, plan, metric)
        if errors:
            exc = errors[0][1]
            exc.cells = [(params, fold, str(e)) for fold, e in errors]
            raise exc
        score = float(va.mean())
        cells.append((params, score, float(va.std()), float(tr.mean()), float(tr.std())))
        if score > best_score:
            best, best_score = params, score
    return GridSearchResult(best, cells)
