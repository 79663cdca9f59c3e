import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonresp.errors import DataError, UsageError
from nonresp.tabular import (
    MISSING_CODE, ColumnSpec, SplitPlan, Table, bundled_schema, format_csv, format_schema,
    impute_most_frequent, parse_csv, parse_schema, proportion_ci, read_csv, shuffle_split_iter,
    test_size as split_test_size, train_test_split, write_csv,
)

SCHEMA = (
    ColumnSpec("id", "numeric", "id"),
    ColumnSpec("mode", "categorical", "feature", ("web", "phone")),
    ColumnSpec("age", "numeric", "feature"),
    ColumnSpec("y", "categorical", "target", ("0", "1")),
)


def cat_table(values, levels=("a", "b", "c")):
    schema = (ColumnSpec("c", "categorical", "feature", levels), ColumnSpec("y", "categorical", "target", ("0", "1")))
    codes = [MISSING_CODE if v is None else sorted(levels).index(v) for v in values]
    return Table(schema, {"c": codes, "y": [0] * len(values)})


class TestSchema:
    def test_levels_sorted(self):
        assert SCHEMA[1].levels == ("phone", "web")

    def test_rejects_two_targets(self):
        with pytest.raises(UsageError):
            Table(SCHEMA + (ColumnSpec("z", "categorical", "target", ("0", "1")),), {})

    def test_bundled_schema_shape(self):
        schema = bundled_schema()
        feats = [c for c in schema if c.role == "feature"]
        assert len(feats) == 50
        assert sum(c.is_categorical for c in feats) == 49
        assert {c.role for c in schema} == {"id", "feature", "target"}

    def test_schema_text_round_trip(self):
        schema = bundled_schema()
        assert parse_schema(format_schema(schema)) == schema

    def test_duplicate_levels(self):
        with pytest.raises(UsageError):
            ColumnSpec("c", "categorical", "feature", ("a", "a"))


class TestReadCsv:
    def test_lexicographic_codes(self):
        t = parse_csv("id,mode,age,y\n1,web,50,0\n2,phone,60,1\n3,web,70,0\n", SCHEMA)
        assert t["mode"].tolist() == [1, 0, 1]
        assert t.n_rows == 3

    def test_empty_field_is_missing(self):
        t = parse_csv("id,mode,age,y\n1,,50,0\n2,web,,1\n", SCHEMA)
        assert t["mode"][0] == MISSING_CODE
        assert math.isnan(t["age"][1])

    def test_unknown_level_names_row_and_value(self):
        with pytest.raises(DataError, match=r"row 1.*'mode'.*'fax'"):
            parse_csv("id,mode,age,y\n1,web,50,0\n2,fax,60,1\n", SCHEMA)

    def test_non_numeric(self):
        with pytest.raises(DataError, match="non-numeric"):
            parse_csv("id,mode,age,y\n1,web,old,0\n", SCHEMA)

    def test_header_mismatch(self):
        with pytest.raises(DataError, match="header"):
            parse_csv("id,age,mode,y\n", SCHEMA)

    def test_missing_header(self):
        with pytest.raises(DataError, match="header"):
            parse_csv("", SCHEMA)

    def test_quoted_fields(self):
        t = parse_csv('id,mode,age,y\n"1","web","50","0"\n', SCHEMA)
        assert t["mode"].tolist() == [1]

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            read_csv(tmp_path / "nope.csv", SCHEMA)

    def test_round_trip(self, tmp_path, small_table):
        path = tmp_path / "t.csv"
        write_csv(small_table, path)
        back = read_csv(path, small_table.schema)
        assert back.equals(small_table)
        assert format_csv(back) == path.read_text()


class TestImpute:
    def test_mode(self):
        out = impute_most_frequent(cat_table(["a", "a", "b", None]))
        assert out["c"].tolist() == [0, 0, 1, 0]

    def test_tie_goes_to_smallest_level(self):
        out = impute_most_frequent(cat_table(["b", "a", None]))
        assert out["c"].tolist() == [1, 0, 0]

    def test_no_missing_is_identity(self):
        t = cat_table(["a", "b", "c"])
        assert impute_most_frequent(t) is t

    def test_all_missing(self):
        with pytest.raises(DataError):
            impute_most_frequent(cat_table([None, None]))

    def test_numeric_untouched(self):
        t = parse_csv("id,mode,age,y\n1,,50,0\n2,web,,1\n3,web,1,1\n", SCHEMA)
        out = impute_most_frequent(t)
        assert math.isnan(out["age"][1])
        assert out["mode"][0] == 1


class TestSplits:
    def test_quarter_split_size(self):
        train, test = train_test_split(5820, SplitPlan(0.25, seed=0))
        assert test.size == 1455 == 1 + 1334 + 4 + 116
        assert train.size + test.size == 5820

    def test_deterministic(self):
        a = train_test_split(4, SplitPlan(0.5, seed=7))
        b = train_test_split(4, SplitPlan(0.5, seed=7))
        assert all(np.array_equal(x, y) for x, y in zip(a, b))

    def test_stratified_counts(self):
        labels = np.r_[np.zeros(900, int), np.ones(100, int)]
        for seed in range(5):
            _, test = train_test_split(1000, SplitPlan(0.25, seed=seed, stratified=True), labels)
            assert abs(labels[test].sum() - round(0.1 * test.size)) <= 1

    def test_degenerate_fraction(self):
        with pytest.raises(UsageError):
            train_test_split(3, SplitPlan(0.1))
        with pytest.raises(UsageError):
            SplitPlan(1.0)

    def test_shuffle_split_partition(self):
        pairs = list(shuffle_split_iter(50, SplitPlan(0.2, n_splits=5, seed=1)))
        assert len(pairs) == 5
        for tr, va in pairs:
            assert np.array_equal(np.sort(np.r_[tr, va]), np.arange(50))

    def test_shuffle_split_repeatable_and_distinct(self):
        plan = SplitPlan(0.3, n_splits=2, seed=4)
        a = list(shuffle_split_iter(100, plan))
        b = list(shuffle_split_iter(100, plan))
        assert all(np.array_equal(x[1], y[1]) for x, y in zip(a, b))
        assert not np.array_equal(a[0][1], a[1][1])

    @settings(max_examples=60, deadline=None)
    @given(n=st.integers(2, 300), frac=st.floats(0.05, 0.95), seed=st.integers(0, 2**32))
    def test_split_covers_rows(self, n, frac, seed):
        try:
            size = split_test_size(n, frac)
        except UsageError:
            return
        train, test = train_test_split(n, SplitPlan(frac, seed=seed))
        assert test.size == size
        assert np.intersect1d(train, test).size == 0
        assert train.size + test.size == n

    @settings(max_examples=40, deadline=None)
    @given(n=st.integers(20, 300), rate=st.floats(0.05, 0.5), seed=st.integers(0, 1000))
    def test_stratified_within_one(self, n, rate, seed):
        labels = (np.arange(n) < int(rate * n)).astype(int)
        _, test = train_test_split(n, SplitPlan(0.3, seed=seed, stratified=True), labels)
        for c in (0, 1):
            share = 0.3 * np.sum(labels == c)
            assert abs(np.sum(labels[test] == c) - share) <= 1


class TestProportionCI:
    def test_zero(self):
        assert proportion_ci(0.0, 10)[0] == 0.0

    def test_cohort_one(self):
        err, lo, hi = proportion_ci(252 / 2819, 2819)
        assert err == pytest.approx(0.01075, abs=5e-6)
        assert lo == pytest.approx(252 / 2819 - err)

    def test_half(self):
        assert proportion_ci(0.5, 100)[0] == pytest.approx(0.1)

    def test_n_zero(self):
        with pytest.raises(UsageError):
            proportion_ci(0.5, 0)

    @given(p=st.floats(0, 1), n=st.integers(1, 10**6))
    def test_symmetric(self, p, n):
        q = 1 - p
        p = 1 - q  # q and p are now exact complements
        assert proportion_ci(p, n)[0] == pytest.approx(proportion_ci(q, n)[0], rel=1e-12, abs=1e-15)
