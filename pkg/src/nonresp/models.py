"""Named model registry with tuned defaults and the matching preprocessing recipe."""
from __future__ import annotations

from dataclasses import dataclass

from .classify import KNNClassifier, NullModel
from .errors import UsageError
from .linear_margin import SVC, LogisticRegression
from .mlp import MLPClassifier
from .preprocess import Recipe
from .trees import AdaBoostClassifier, DecisionTreeClassifier, RandomForestClassifier


def _parse_hidden(text, activation="tanh"):
    """``"4,2"`` -> ``((4, act), (2, act))``; an empty string gives no hidden layers."""
    if not isinstance(text, str):
        return tuple(text)
    units = [int(u) for u in text.replace(" ", "").split(",") if u]
    return tuple((u, activation) for u in units)


def _mlp(hidden="4,2", activation="tanh", epochs=1000, batch_size=200, lr=0.001, seed=0):
    return MLPClassifier(_parse_hidden(hidden, activation), epochs, batch_size, lr, seed)


def _rf(n_trees=10, max_features="sqrt", bootstrap=True, seed=0):
    if max_features not in ("sqrt", None):
        max_features = None if str(max_features) == "all" else int(max_features)
    return RandomForestClassifier(n_trees, max_features, bootstrap, seed)


def _cart(max_depth=-1, min_samples_leaf=1, min_samples_split=2):
    return DecisionTreeClassifier(None if max_depth < 0 else max_depth, min_samples_leaf, min_samples_split)


@dataclass(frozen=True)
class ModelEntry:
    factory: object
    defaults: dict
    scaler: str
    seeded: bool = False  # factory takes a ``seed`` keyword


REGISTRY = {
    "null": ModelEntry(NullModel, {}, "none"),
    "knn": ModelEntry(KNNClassifier, {"k": 10}, "min_max"),
    "cart": ModelEntry(_cart, {"max_depth": 2, "min_samples_leaf": 1, "min_samples_split": 2}, "none"),
    "rf": ModelEntry(_rf, {"n_trees": 10, "max_features": "sqrt", "bootstrap": True}, "none", True),
    "adaboost": ModelEntry(AdaBoostClassifier, {"n_stages": 3}, "none"),
    "logreg": ModelEntry(LogisticRegression, {"penalty": "l1", "C": 1.0, "tol": 1e-4}, "standard", True),
    "svc": ModelEntry(SVC, {"C": 1.0, "kernel": "rbf", "gamma": 0.1, "tol": 1e-3}, "standard"),
    "mlp": ModelEntry(_mlp, {"hidden": "4,2", "activation": "tanh", "epochs": 1000,
                             "batch_size": 200, "lr": 0.001}, "standard", True),
}
MODEL_NAMES = tuple(REGISTRY)


def entry(name: str) -> ModelEntry:
    try:
        return REGISTRY[name]
    except KeyError:
        raise UsageError(f"unknown model {name!r}; choose from {', '.join(MODEL_NAMES)}") from None


def coerce(value, like):
    """Convert a config string to the type of the default ``like``."""
    if not isinstance(value, str):
        return value
    if isinstance(like, bool):
        low = value.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"expected a boolean, got {value!r}")
    try:
        if isinstance(like, int):
            return int(value)
        if isinstance(like, float):
            return float(value)
    except ValueError:
        raise UsageError(f"expected a number, got {value!r}") from None
    return value


def model_params(name: str, overrides: dict | None = None, seed: int = 0) -> dict:
    """Defaults merged with ``overrides`` (coerced to the default types)."""
    ent = entry(name)
    params = dict(ent.defaults)
    for key, value in (overrides or {}).items():
        if key not in params:
            raise UsageError(f"model {name!r} has no parameter {key!r}")
        params[key] = coerce(value, params[key])
    if ent.seeded:
        params["seed"] = seed
    return params


def build(name: str, overrides: dict | None = None, seed: int = 0):
    return entry(name).factory(**model_params(name, overrides, seed))


def default_recipe(name: str, **changes) -> Recipe:
    """Ordinal codes throughout; min-max for KNN, standard for linear, margin and MLP models."""
    base = {"impute": True, "encoder": "ordinal", "drop_first": True, "scaler": entry(name).scaler}
    base.update({k: v for k, v in changes.items() if v is not None})
    return Recipe(**base)
