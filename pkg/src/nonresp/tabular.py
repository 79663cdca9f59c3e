"""Column-major tables, CSV/schema I/O, imputation, splits and the cohort CI.

Categorical cells hold integer codes into their column's level list
(lexicographic order, fixed at schema time) with ``MISSING_CODE`` for
missing cells. Numeric cells are float64 with NaN as the missing marker.
"""
from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import DataError, UsageError
from .seeding import rng

MISSING_CODE = -1
KINDS = ("categorical", "numeric")
ROLES = ("feature", "target", "id")


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str
    role: str = "feature"
    levels: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UsageError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.role not in ROLES:
            raise UsageError(f"column {self.name!r}: unknown role {self.role!r}")
        if self.kind == "categorical":
            levels = tuple(str(v) for v in self.levels)
            if not levels:
                raise UsageError(f"column {self.name!r}: categorical column needs levels")
            if len(set(levels)) != len(levels):
                raise UsageError(f"column {self.name!r}: duplicate levels")
            object.__setattr__(self, "levels", tuple(sorted(levels)))
        elif self.levels:
            raise UsageError(f"column {self.name!r}: numeric column cannot have levels")

    @property
    def is_categorical(self) -> bool:
        return self.kind == "categorical"

    def code_of(self, level: str) -> int:
        try:
            return self.levels.index(level)
        except ValueError:
            raise DataError(f"column {self.name!r}: unknown level {level!r}") from None


def validate_schema(schema: Sequence[ColumnSpec]) -> tuple[ColumnSpec, ...]:
    schema = tuple(schema)
    names = [c.name for c in schema]
    if len(set(names)) != len(names):
        raise UsageError("schema has duplicate column names")
    targets = [c for c in schema if c.role == "target"]
    if len(targets) != 1:
        raise UsageError(f"schema needs exactly one target column, found {len(targets)}")
    if not targets[0].is_categorical or targets[0].levels != ("0", "1"):
        raise UsageError("target column must be categorical with levels {0,1}")
    return schema


@dataclass(frozen=True)
class Table:
    schema: tuple[ColumnSpec, ...]
    columns: dict = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "schema", validate_schema(self.schema))
        cols = {}
        n = None
        for spec in self.schema:
            if spec.name not in self.columns:
                raise UsageError(f"missing data for column {spec.name!r}")
            arr = np.asarray(self.columns[spec.name])
            if spec.is_categorical:
                arr = arr.astype(np.int32)
                bad = (arr != MISSING_CODE) & ((arr < 0) | (arr >= len(spec.levels)))
                if bad.any():
                    raise DataError(f"column {spec.name!r}: code out of range")
            else:
                arr = arr.astype(np.float64)
            if arr.ndim != 1:
                raise UsageError(f"column {spec.name!r} must be one-dimensional")
            if n is None:
                n = arr.shape[0]
            elif arr.shape[0] != n:
                raise UsageError("columns have inconsistent lengths")
            arr.flags.writeable = False
            cols[spec.name] = arr
        object.__setattr__(self, "columns", cols)

    @property
    def n_rows(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def spec(self, name: str) -> ColumnSpec:
        for c in self.schema:
            if c.name == name:
                return c
        raise UsageError(f"no column named {name!r}")

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    @property
    def feature_specs(self) -> tuple[ColumnSpec, ...]:
        return tuple(c for c in self.schema if c.role == "feature")

    @property
    def feature_names(self) -> list[str]:
        return [c.name for c in self.feature_specs]

    @property
    def target_spec(self) -> ColumnSpec:
        return next(c for c in self.schema if c.role == "target")

    def labels(self) -> np.ndarray:
        """Target column as int64 0/1; missing targets are a data error."""
        y = self.columns[self.target_spec.name]
        if (y == MISSING_CODE).any():
            raise DataError("target column has missing values")
        return y.astype(np.int64)

    def take(self, indices) -> "Table":
        idx = np.asarray(indices, dtype=np.int64)
        return Table(self.schema, {k: v[idx] for k, v in self.columns.items()})

    def with_column(self, name: str, values) -> "Table":
        self.spec(name)
        cols = dict(self.columns)
        cols[name] = np.asarray(values)
        return Table(self.schema, cols)

    def equals(self, other: "Table") -> bool:
        if self.schema != other.schema:
            return False
        return all(
            np.array_equal(self.columns[c.name], other.columns[c.name], equal_nan=not c.is_categorical)
            for c in self.schema
        )


# ---------------------------------------------------------------- schema file

def parse_schema(text: str) -> tuple[ColumnSpec, ...]:
    specs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) not in (3, 4):
            raise DataError(f"schema line {lineno}: expected name,kind,role[,levels]")
        name, kind, role = parts[:3]
        levels = tuple(parts[3].split("|")) if len(parts) == 4 else ()
        try:
            specs.append(ColumnSpec(name, kind, role, levels))
        except UsageError as exc:
            raise DataError(f"schema line {lineno}: {exc}") from None
    try:
        return validate_schema(specs)
    except UsageError as exc:
        raise DataError(str(exc)) from None


def read_schema(path) -> tuple[ColumnSpec, ...]:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_schema(fh.read())
    except OSError as exc:
        raise DataError(f"cannot read schema {path}: {exc}") from None


def format_schema(schema: Sequence[ColumnSpec]) -> str:
    lines = []
    for c in schema:
        row = [c.name, c.kind, c.role]
        if c.is_categorical:
            row.append("|".join(c.levels))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def bundled_schema() -> tuple[ColumnSpec, ...]:
    path = os.path.join(os.path.dirname(__file__), "data", "elsa_schema.txt")
    return read_schema(path)


# ------------------------------------------------------------------------ CSV

def _parse_number(text: str, row: int, col: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"row {row}, column {col!r}: non-numeric value {text!r}") from None
    if math.isnan(value):
        raise DataError(f"row {row}, column {col!r}: NaN literal not allowed, leave the field empty")
    return value


def parse_csv(text: str, schema: Sequence[ColumnSpec]) -> Table:
    schema = validate_schema(schema)
    reader = csv.reader(io.StringIO(text), delimiter=",", quotechar='"', strict=True)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("missing header row") from None
    except csv.Error as exc:
        raise DataError(f"malformed CSV header: {exc}") from None
    names = [c.name for c in schema]
    if header != names:
        raise DataError(f"header mismatch: expected {names}, got {header}")
    data = {c.name: [] for c in schema}
    try:
        for row_idx, row in enumerate(reader):
            if not row:
                continue
            if len(row) != len(schema):
                raise DataError(f"row {row_idx}: expected {len(schema)} fields, got {len(row)}")
            for spec, value in zip(schema, row):
                if value == "":
                    data[spec.name].append(MISSING_CODE if spec.is_categorical else np.nan)
                elif spec.is_categorical:
                    if value not in spec.levels:
                        raise DataError(
                            f"row {row_idx}, column {spec.name!r}: unknown level {value!r}"
                        )
                    data[spec.name].append(spec.levels.index(value))
                else:
                    data[spec.name].append(_parse_number(value, row_idx, spec.name))
    except csv.Error as exc:
        raise DataError(f"malformed CSV: {exc}") from None
    cols = {
        c.name: np.array(data[c.name], dtype=np.int32 if c.is_categorical else np.float64)
        for c in schema
    }
    return Table(schema, cols)


def read_csv(path, schema: Sequence[ColumnSpec]) -> Table:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    return parse_csv(text, schema)


def _format_number(v: float) -> str:
    if math.isnan(v):
        return ""
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def format_csv(table: Table) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter=",", quotechar='"', lineterminator="\n")
    writer.writerow([c.name for c in table.schema])
    cols = []
    for c in table.schema:
        arr = table[c.name]
        if c.is_categorical:
            lv = c.levels
            cols.append(["" if k == MISSING_CODE else lv[k] for k in arr.tolist()])
        else:
            cols.append([_format_number(v) for v in arr.tolist()])
    writer.writerows(zip(*cols))
    return buf.getvalue()


def write_csv(table: Table, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_csv(table))


# ----------------------------------------------------------------- imputation

def column_mode(codes: np.ndarray, n_levels: int, name: str = "?") -> int:
    """Modal level code over non-missing cells; ties go to the smaller code."""
    present = codes[codes != MISSING_CODE]
    if present.size == 0:
        raise DataError(f"column {name!r} is entirely missing")
    # argmax returns the first maximum, i.e. the lexicographically smallest level
    return int(np.argmax(np.bincount(present, minlength=n_levels)))


def impute_most_frequent(table: Table) -> Table:
    cols = dict(table.columns)
    changed = False
    for spec in table.feature_specs:
        if not spec.is_categorical:
            continue
        codes = table[spec.name]
        missing = codes == MISSING_CODE
        if not missing.any():
            continue
        fill = column_mode(codes, len(spec.levels), spec.name)
        cols[spec.name] = np.where(missing, fill, codes).astype(np.int32)
        changed = True
    return Table(table.schema, cols) if changed else table


# ------------------------------------------------------------------ splitting

@dataclass(frozen=True)
class SplitPlan:
    test_fraction: float = 0.25
    n_splits: int = 5
    seed: int = 0
    stratified: bool = False

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise UsageError(f"test_fraction must lie in (0,1), got {self.test_fraction}")
        if self.n_splits < 1:
            raise UsageError("n_splits must be >= 1")
        if self.seed < 0:
            raise UsageError("seed must be non-negative")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def test_size(n_rows: int, fraction: float) -> int:
    if n_rows < 2:
        raise UsageError("need at least 2 rows to split")
    n_test = _round_half_up(fraction * n_rows)
    if n_test < 1 or n_test > n_rows - 1:
        raise UsageError(f"test fraction {fraction} leaves an empty side for n={n_rows}")
    return n_test


def _split_once(n_rows, fraction, gen, labels):
    n_test = test_size(n_rows, fraction)
    if labels is None:
        perm = gen.permutation(n_rows)
        test = perm[:n_test]
    else:
        labels = np.asarray(labels)
        if labels.shape != (n_rows,):
            raise UsageError("labels length must equal n_rows")
        classes = np.unique(labels)
        members = [np.flatnonzero(labels == c) for c in classes]
        exact = np.array([fraction * len(m) for m in members])
        take = np.floor(exact).astype(np.int64)
        # largest remainder, ties by class order
        short = n_test - take.sum()
        order = np.argsort(-(exact - take), kind="stable")
        take[order[:short]] += 1
        test = np.concatenate([gen.permutation(m)[:k] for m, k in zip(members, take)])
    mask = np.zeros(n_rows, dtype=bool)
    mask[test] = True
    return np.flatnonzero(~mask), np.flatnonzero(mask)


def train_test_split(n_rows: int, plan: SplitPlan, labels=None):
    """Sorted (train, test) index arrays.

    The stratified variant needs ``labels`` and keeps every class's test
    count within one row of its proportional share.
    """
    if plan.stratified and labels is None:
        raise UsageError("stratified split needs labels")
    return _split_once(n_rows, plan.test_fraction, rng(plan.seed), labels if plan.stratified else None)


def shuffle_split_iter(n_rows: int, plan: SplitPlan, labels=None) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    if plan.stratified and labels is None:
        raise UsageError("stratified split needs labels")
    test_size(n_rows, plan.test_fraction)
    for k in range(plan.n_splits):
        yield _split_once(
            n_rows, plan.test_fraction, rng(plan.seed, 1, k), labels if plan.stratified else None
        )


# ------------------------------------------------------------- cohort CI

def proportion_ci(p: float, n: int) -> tuple[float, float, float]:
    """Two-standard-error interval for a proportion: 2*sqrt(p(1-p)/n)."""
    if n < 1:
        raise UsageError("n must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise UsageError("p must lie in [0,1]")
    error = 2.0 * math.sqrt(p * (1.0 - p) / n)
    return error, max(0.0, p - error), min(1.0, p + error)
