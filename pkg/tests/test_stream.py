import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semidrift.stream import (UNLABELED, ArraySource, BudgetExhausted, CsvSchema, LabelOracle,
                              StreamError, Window, iter_windows, labeled_fraction, next_window,
                              read_csv_stream, write_csv)


def _source(n=10, d=2):
    X = np.arange(n * d, dtype=float).reshape(n, d)
    y = np.arange(n) % 2
    return ArraySource(X, y)


class TestWindow:
    def test_end_index_and_indices(self):
        w = Window(5, np.zeros((3, 2)), np.full(3, UNLABELED))
        assert w.end_index == 7
        assert w.indices.tolist() == [5, 6, 7]

    def test_arrays_are_read_only(self):
        w = Window(0, np.zeros((2, 1)), np.zeros(2, dtype=np.int64))
        with pytest.raises(ValueError):
            w.X[0, 0] = 1.0

    def test_misaligned_rejected(self):
        with pytest.raises(StreamError):
            Window(0, np.zeros((3, 2)), np.zeros(2, dtype=np.int64))

    def test_instances_hide_unlabeled(self):
        w = Window(0, np.ones((2, 1)), np.array([1, UNLABELED]))
        a, b = w.instances
        assert a.label == 1 and b.label is None


class TestLabeledFraction:
    def test_examples(self):
        y = np.full(1000, UNLABELED)
        y[:300] = 1
        assert labeled_fraction(Window(0, np.zeros((1000, 1)), y)) == 0.3
        assert labeled_fraction(Window(0, np.zeros((0, 1)), np.zeros(0, np.int64))) == 0.0

    @given(st.lists(st.booleans(), min_size=1, max_size=200))
    def test_bounds(self, mask):
        y = np.where(mask, 0, UNLABELED)
        f = labeled_fraction(Window(0, np.zeros((len(y), 1)), y))
        assert 0.0 <= f <= 1.0
        assert f == pytest.approx(sum(mask) / len(mask))


class TestNextWindow:
    def test_hides_labels_and_registers_truth(self):
        src, oracle = _source(), LabelOracle()
        w = next_window(src, 4, oracle)
        assert (w.y == UNLABELED).all()
        assert oracle.truth(w.indices).tolist() == [0, 1, 0, 1]

    def test_last_window_is_partial_then_end(self):
        src = _source(10)
        sizes = [len(w) for w in iter_windows(src, 4)]
        assert sizes == [4, 4, 2]
        assert next_window(src, 4) is None

    def test_reveal_policy(self):
        src = _source(6)
        src.revealed = lambda y, idx: y == 1
        w = next_window(src, 6)
        assert w.y.tolist() == [UNLABELED, 1] * 3

    def test_rejects_bad_size(self):
        with pytest.raises(ValueError):
            next_window(_source(), 0)


class TestLabelOracle:
    def test_budget_cap(self):
        o = LabelOracle(budget=0.2)
        o.register(0, np.zeros(1000, np.int64))
        assert o.allowance() == 200
        o.query(np.arange(200))
        with pytest.raises(BudgetExhausted):
            o.query([500])

    def test_requery_is_free(self):
        o = LabelOracle(budget=0.01)
        o.register(0, np.arange(100) % 3)
        assert o.query([7]).tolist() == [1]
        assert o.query([7]).tolist() == [1]
        assert o.query_count == 1

    def test_float_guard(self):
        o = LabelOracle(budget=0.6)
        o.register(0, np.zeros(1000, np.int64))
        assert o.allowance() == 600

    def test_non_contiguous_register(self):
        o = LabelOracle()
        with pytest.raises(StreamError):
            o.register(3, [0])

    @pytest.mark.parametrize("budget", [0.0, -0.1, 1.5])
    def test_bad_budget(self, budget):
        with pytest.raises(ValueError):
            LabelOracle(budget)

    @settings(max_examples=50)
    @given(st.floats(0.01, 1.0), st.integers(1, 3000))
    def test_allowance_is_ceiling(self, alpha, n):
        o = LabelOracle(alpha)
        o.register(0, np.zeros(n, np.int64))
        assert o.allowance() == math.ceil(round(alpha * n, 9))


class TestCsv:
    def test_round_trip(self, tmp_path):
        X = np.random.default_rng(0).normal(size=(20, 3))
        y = np.arange(20) % 2
        path = write_csv(tmp_path / "d.csv", X, y, ["a", "b", "c"])
        src = read_csv_stream(path)
        Xr, yr = src.read(100)
        np.testing.assert_array_equal(Xr, X)  # repr floats round-trip exactly
        assert yr.tolist() == y.tolist()
        assert src.feature_names == ["a", "b", "c"]

    def test_missing_file(self, tmp_path):
        with pytest.raises(StreamError, match="not found"):
            read_csv_stream(tmp_path / "nope.csv")

    @pytest.mark.parametrize("row, msg", [
        ("1.0,abc,0", "row 3: non-numeric"),
        ("1.0,2.0,x", "row 3: label 'x'"),
        ("1.0,2.0", "row 3: expected 3 fields"),
        ("1.0,inf,1", "row 3: non-finite"),
    ])
    def test_bad_rows_name_the_row(self, tmp_path, row, msg):
        p = tmp_path / "d.csv"
        p.write_text(f"x1,x2,label\n0.5,0.5,1\n{row}\n")
        with pytest.raises(StreamError, match=msg):
            read_csv_stream(p)

    def test_unknown_label_with_schema(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("x1,label\n0.5,1\n0.7,5\n")
        with pytest.raises(StreamError, match="row 3: unknown label value 5"):
            read_csv_stream(p, CsvSchema(["x1"], classes=[0, 1]))

    def test_header_must_end_with_label(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("x1,y\n0.5,1\n")
        with pytest.raises(StreamError, match="label"):
            read_csv_stream(p)
