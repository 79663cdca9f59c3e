"""Imputer, encoders, scalers and leak-free pipeline composition.

Every transformer is fitted on the training rows of a pipeline only; the
fitted states are plain frozen dataclasses and ``transform`` is pure.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, UsageError
from .tabular import MISSING_CODE, Table, column_mode


@dataclass(frozen=True)
class ImputerState:
    """Per-column fill values: modal level name or numeric median."""

    fills: tuple  # (column name, level str | float)

    def transform(self, table: Table) -> Table:
        cols = dict(table.columns)
        for name, fill in self.fills:
            spec = table.spec(name)
            arr = table[name]
            if spec.is_categorical:
                missing = arr == MISSING_CODE
                if missing.any():
                    cols[name] = np.where(missing, spec.code_of(fill), arr)
            else:
                missing = np.isnan(arr)
                if missing.any():
                    cols[name] = np.where(missing, fill, arr)
        return Table(table.schema, cols)


def imputer_fit(table: Table) -> ImputerState:
    """Most frequent level for categorical features, median for numeric ones."""
    fills = []
    for spec in table.feature_specs:
        arr = table[spec.name]
        if spec.is_categorical:
            fills.append((spec.name, spec.levels[column_mode(arr, len(spec.levels), spec.name)]))
        else:
            present = arr[~np.isnan(arr)]
            if present.size == 0:
                raise DataError(f"column {spec.name!r} is entirely missing")
            fills.append((spec.name, float(np.median(present))))
    return ImputerState(tuple(fills))


# ------------------------------------------------------------------ encoders

@dataclass(frozen=True)
class OrdinalEncoderState:
    # (name, levels) per feature; levels == () marks a numeric pass-through column
    columns: tuple

    @property
    def feature_names(self) -> list[str]:
        return [name for name, _ in self.columns]

    def transform(self, table: Table) -> np.ndarray:
        out = np.empty((table.n_rows, len(self.columns)))
        for j, (name, levels) in enumerate(self.columns):
            out[:, j] = _codes_against(table, name, levels) if levels else _numeric(table, name)
        return out

    def inverse_transform(self, matrix: np.ndarray) -> dict:
        """Level names per categorical column from an encoded matrix."""
        result = {}
        for j, (name, levels) in enumerate(self.columns):
            if levels:
                result[name] = [levels[int(round(v))] for v in matrix[:, j]]
        return result


@dataclass(frozen=True)
class OneHotEncoderState:
    # (name, levels, retained levels); numeric columns have levels == ()
    columns: tuple
    drop_first: bool

    @property
    def feature_names(self) -> list[str]:
        names = []
        for name, levels, kept in self.columns:
            if levels:
                names.extend(f"{name}={lv}" for lv in kept)
            else:
                names.append(name)
        return names

    def transform(self, table: Table) -> np.ndarray:
        blocks = []
        for name, levels, kept in self.columns:
            if not levels:
                blocks.append(_numeric(table, name)[:, None])
                continue
            codes = _codes_against(table, name, levels)
            offset = len(levels) - len(kept)
            block = np.zeros((table.n_rows, len(kept)))
            rows = np.flatnonzero(codes >= offset)
            block[rows, codes[rows] - offset] = 1.0
            blocks.append(block)
        return np.hstack(blocks) if blocks else np.empty((table.n_rows, 0))

    def inverse_transform(self, matrix: np.ndarray) -> dict:
        result = {}
        j = 0
        for name, levels, kept in self.columns:
            if not levels:
                j += 1
                continue
            block = matrix[:, j:j + len(kept)]
            j += len(kept)
            offset = len(levels) - len(kept)
            decoded = []
            for row in block:
                hits = np.flatnonzero(row > 0.5)
                decoded.append(levels[hits[0] + offset] if hits.size else levels[0])
            result[name] = decoded
        return result


def _numeric(table, name):
    arr = table[name]
    if np.isnan(arr).any():
        raise DataError(f"column {name!r} has missing values; impute before encoding")
    return arr


def _codes_against(table: Table, name: str, levels: tuple) -> np.ndarray:
    """Re-express the table's codes in the fitted level list."""
    spec = table.spec(name)
    codes = table[name]
    if (codes == MISSING_CODE).any():
        raise DataError(f"column {name!r} has missing values; impute before encoding")
    if spec.levels == levels:
        return codes.astype(np.int64)
    lookup = {lv: i for i, lv in enumerate(levels)}
    mapping = np.full(len(spec.levels), -1, dtype=np.int64)
    for k, lv in enumerate(spec.levels):
        mapping[k] = lookup.get(lv, -1)
    out = mapping[codes]
    if (out < 0).any():
        bad = spec.levels[int(codes[np.flatnonzero(out < 0)[0]])]
        raise DataError(f"column {name!r}: unseen level {bad!r}")
    return out


def encoder_fit(table: Table, kind: str = "ordinal", drop_first: bool = True):
    feats = table.feature_specs
    if kind == "ordinal":
        return OrdinalEncoderState(tuple((c.name, c.levels) for c in feats))
    if kind == "one_hot":
        cols = tuple(
            (c.name, c.levels, c.levels[1:] if drop_first else c.levels)
            if c.is_categorical else (c.name, (), ())
            for c in feats
        )
        return OneHotEncoderState(cols, drop_first)
    raise UsageError(f"unknown encoder kind {kind!r}")


def encoder_fit_transform(table: Table, kind: str = "ordinal", drop_first: bool = True):
    if not any(c.is_categorical for c in table.feature_specs):
        raise UsageError("no categorical feature columns to encode")
    state = encoder_fit(table, kind, drop_first)
    return state, state.transform(table)


# ------------------------------------------------------------------- scalers

@dataclass(frozen=True)
class StandardScalerState:
    mean: np.ndarray
    std: np.ndarray


@dataclass(frozen=True)
class MinMaxScalerState:
    min: np.ndarray
    max: np.ndarray


def scaler_fit(matrix, kind: str = "standard"):
    x = np.asarray(matrix, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise UsageError("scaler needs a non-empty 2-D matrix")
    if kind == "standard":
        return StandardScalerState(x.mean(axis=0), x.std(axis=0))
    if kind == "min_max":
        return MinMaxScalerState(x.min(axis=0), x.max(axis=0))
    raise UsageError(f"unknown scaler kind {kind!r}")


def scaler_transform(state, matrix) -> np.ndarray:
    x = np.asarray(matrix, dtype=np.float64)
    if isinstance(state, StandardScalerState):
        center, spread = state.mean, state.std
    else:
        center, spread = state.min, state.max - state.min
    if x.ndim != 2 or x.shape[1] != center.shape[0]:
        raise UsageError(f"expected {center.shape[0]} columns, got shape {x.shape}")
    safe = np.where(spread > 0, spread, 1.0)
    return np.where(spread > 0, (x - center) / safe, 0.0)


# ------------------------------------------------------------------ pipeline

@dataclass(frozen=True)
class Recipe:
    impute: bool = True
    encoder: str = "ordinal"
    drop_first: bool = True
    scaler: str = "none"  # none | standard | min_max

    def __post_init__(self):
        if self.encoder not in ("ordinal", "one_hot"):
            raise UsageError(f"unknown encoder {self.encoder!r}")
        if self.scaler not in ("none", "standard", "min_max"):
            raise UsageError(f"unknown scaler {self.scaler!r}")


@dataclass
class FittedPipeline:
    imputer: ImputerState | None
    encoder: object
    scaler: object | None
    classifier: object
    train_indices: np.ndarray = field(repr=False)

    @property
    def feature_names(self) -> list[str]:
        return self.encoder.feature_names

    def transform(self, table: Table) -> np.ndarray:
        if self.imputer is not None:
            table = self.imputer.transform(table)
        x = self.encoder.transform(table)
        if self.scaler is not None:
            x = scaler_transform(self.scaler, x)
        return x

    def predict(self, table: Table) -> np.ndarray:
        return self.classifier.predict(self.transform(table))

    def score(self, table: Table) -> np.ndarray:
        return self.classifier.score(self.transform(table))


def pipeline_fit(table: Table, train_indices, recipe: Recipe, classifier) -> FittedPipeline:
    """Fit every step on ``table`` rows ``train_indices`` only.

    ``classifier`` is an unfitted estimator; a deep copy is fitted so the
    caller's object can be reused across folds.
    """
    train_indices = np.asarray(train_indices, dtype=np.int64)
    train = table.take(train_indices)
    imputer = imputer_fit(train) if recipe.impute else None
    if imputer is not None:
        train = imputer.transform(train)
    encoder = encoder_fit(train, recipe.encoder, recipe.drop_first)
    x = encoder.transform(train)
    scaler = None
    if recipe.scaler != "none":
        scaler = scaler_fit(x, recipe.scaler)
        x = scaler_transform(scaler, x)
    model = copy.deepcopy(classifier)
    model.fit(x, train.labels())
    return FittedPipeline(imputer, encoder, scaler, model, train_indices)


def pipeline_fit_predict(table: Table, train_indices, test_indices, recipe: Recipe, classifier):
    train_indices = np.asarray(train_indices, dtype=np.int64)
    test_indices = np.asarray(test_indices, dtype=np.int64)
    if np.intersect1d(train_indices, test_indices).size:
        raise UsageError("train and test indices overlap")
    pipe = pipeline_fit(table, train_indices, recipe, classifier)
    test = table.take(test_indices)
    x = pipe.transform(test)
    return pipe, pipe.classifier.predict(x), pipe.classifier.score(x)
