import math
import pickle

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semidrift.hoeffding import HoeffdingTreeClassifier, hoeffding_bound


def _threshold_data(n, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 1, (n, 2))
    return X, (X[:, 0] > 0.6).astype(np.int64)


class TestBound:
    def test_reference_value(self):
        # sqrt(ln(1e7) / 2000)
        assert hoeffding_bound(1.0, 1e-7, 1000) == pytest.approx(0.0897722, abs=1e-6)

    @settings(max_examples=50)
    @given(st.integers(1, 10_000))
    def test_shrinks_with_n(self, n):
        assert hoeffding_bound(1.0, 1e-7, n + 1) < hoeffding_bound(1.0, 1e-7, n)

    def test_scales_with_range(self):
        assert hoeffding_bound(2.0, 0.01, 50) == pytest.approx(2 * hoeffding_bound(1.0, 0.01, 50))

    @pytest.mark.parametrize("args", [(1.0, 0.0, 10), (1.0, 1e-7, 0)])
    def test_rejects_bad_args(self, args):
        with pytest.raises(ValueError):
            hoeffding_bound(*args)


class TestTree:
    def test_learns_threshold_concept(self):
        X, y = _threshold_data(5000)
        tree = HoeffdingTreeClassifier().fit(X, y)
        Xt, yt = _threshold_data(2000, seed=1)
        assert (tree.predict(Xt) == yt).mean() > 0.97
        assert tree.n_splits_ >= 1

    def test_max_depth_zero_never_splits(self):
        X, y = _threshold_data(3000)
        assert HoeffdingTreeClassifier(max_depth=0).fit(X, y).n_splits_ == 0

    def test_incremental_equals_batch(self):
        X, y = _threshold_data(1500)
        a = HoeffdingTreeClassifier().fit(X, y)
        b = HoeffdingTreeClassifier()
        for row, label in zip(X, y):
            b.train_one(row, int(label))
        assert a.dump() == b.dump()
        np.testing.assert_array_equal(a.predict(X), b.predict(X))

    def test_predict_one_matches_predict(self):
        X, y = _threshold_data(800)
        tree = HoeffdingTreeClassifier().fit(X, y)
        assert [tree.predict_one(r) for r in X[:50]] == tree.predict(X[:50]).tolist()

    def test_predict_proba_rows_sum_to_one(self):
        X, y = _threshold_data(800)
        P = HoeffdingTreeClassifier().fit(X, y).predict_proba(X[:100])
        assert P.shape == (100, 2)
        np.testing.assert_allclose(P.sum(axis=1), 1.0)

    def test_untrained(self):
        tree = HoeffdingTreeClassifier()
        assert not tree.is_trained
        tree.partial_fit(np.zeros((1, 2)), [1])
        assert tree.is_trained
        assert tree.predict(np.ones((2, 2))).tolist() == [1, 1]

    def test_feature_count_mismatch(self):
        tree = HoeffdingTreeClassifier().fit(np.zeros((3, 2)), [0, 1, 0])
        with pytest.raises(ValueError):
            tree.partial_fit(np.zeros((1, 3)), [0])

    def test_unknown_leaf_prediction(self):
        with pytest.raises(ValueError):
            HoeffdingTreeClassifier(leaf_prediction="knn").fit(np.zeros((2, 1)), [0, 1])

    def test_deterministic_and_picklable(self):
        X, y = _threshold_data(1000)
        a = HoeffdingTreeClassifier().fit(X, y)
        b = pickle.loads(pickle.dumps(a))
        assert a.dump() == b.dump()
        assert HoeffdingTreeClassifier().fit(X, y).dump() == a.dump()

    @pytest.mark.parametrize("mode", ["mc", "nb", "nba"])
    def test_leaf_modes_learn(self, mode):
        X, y = _threshold_data(4000)
        tree = HoeffdingTreeClassifier(leaf_prediction=mode).fit(X, y)
        assert (tree.predict(X) == y).mean() > 0.9

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            HoeffdingTreeClassifier().fit(np.array([[math.nan]]), [0])
