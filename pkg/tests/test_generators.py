import numpy as np
import pytest

from semidrift.generators import (SEA_THRESHOLDS, DriftSchedule, HyperplaneGenerator,
                                  LabelInversionGenerator, SEAGenerator, hyperplane_label,
                                  sea_label, write_dataset)
from semidrift.stream import read_csv_stream


class TestDriftSchedule:
    def test_concept_ids(self):
        s = DriftSchedule((3, 6))
        assert s.concept_ids(8).tolist() == [0, 0, 0, 1, 1, 1, 2, 2]

    @pytest.mark.parametrize("points", [(5, 5), (6, 3), (0,), (-2,)])
    def test_rejects_bad_points(self, points):
        with pytest.raises(ValueError):
            DriftSchedule(points)

    def test_point_beyond_length(self):
        with pytest.raises(ValueError, match="beyond"):
            SEAGenerator(length=100, schedule=DriftSchedule((100,)))

    def test_noise_range(self):
        with pytest.raises(ValueError):
            DriftSchedule(noise=0.5)


def test_sea_label_definition():
    X = np.array([[4.0, 4.0, 9.0], [4.0, 4.1, 0.0], [8.0, 0.0, 0.0]])
    assert sea_label(X, 8.0).tolist() == [1, 0, 1]


def test_hyperplane_label_definition():
    w = np.array([1.0, 3.0])
    X = np.array([[0.0, 0.7], [1.0, 0.3], [0.0, 0.0]])
    # threshold 0.5 * sum(w) = 2
    assert hyperplane_label(X, w).tolist() == [1, 0, 0]


class TestSEA:
    def test_shape_and_ranges(self):
        g = SEAGenerator(seed=3, length=5000)
        X, y = g.read(5000)
        assert X.shape == (5000, 3)
        assert X.min() >= 0 and X.max() <= 10
        assert set(np.unique(y)) == {0, 1}

    def test_thresholds_cycle_at_drift_points(self):
        g = SEAGenerator(length=400, schedule=DriftSchedule((100, 200, 300)))
        assert g.concept_threshold[[0, 150, 250, 350]].tolist() == list(SEA_THRESHOLDS)

    def test_noise_rate(self):
        g = SEAGenerator(seed=1, length=50_000, schedule=DriftSchedule(noise=0.1))
        _, y = g.read(50_000)
        assert abs((y != g.clean_labels).mean() - 0.1) < 0.01

    def test_class_balance_matches_geometry(self):
        # P(x1 + x2 <= 8) for independent U[0, 10] features is 0.32
        g = SEAGenerator(seed=2, length=50_000, schedule=DriftSchedule(noise=0.0))
        assert abs(g.clean_labels.mean() - 0.32) < 0.01

    def test_seeded(self):
        a = SEAGenerator(seed=7, length=300).read(300)
        b = SEAGenerator(seed=7, length=300).read(300)
        c = SEAGenerator(seed=8, length=300).read(300)
        np.testing.assert_array_equal(a[0], b[0])
        assert not np.array_equal(a[0], c[0])


class TestHyperplane:
    def test_labels_follow_concept_weights(self):
        g = HyperplaneGenerator(seed=4, length=2000, n_features=5,
                                schedule=DriftSchedule((1000,), 0.0))
        X, y = g.read(2000)
        np.testing.assert_array_equal(y[:1000], hyperplane_label(X[:1000], g.weights[0]))
        np.testing.assert_array_equal(y[1000:], hyperplane_label(X[1000:], g.weights[1]))

    def test_needs_two_features(self):
        with pytest.raises(ValueError):
            HyperplaneGenerator(n_features=1)


def test_inversion_swaps_labels_at_drift():
    g = LabelInversionGenerator(seed=1, length=2000, schedule=DriftSchedule((1000,), 0.0))
    X, y = g.read(2000)
    np.testing.assert_array_equal(y[:1000], sea_label(X[:1000], 8.0))
    np.testing.assert_array_equal(y[1000:], 1 - sea_label(X[1000:], 8.0))


def test_write_dataset_round_trip(tmp_path):
    g = SEAGenerator(seed=5, length=250)
    path = write_dataset(g, tmp_path / "sea.csv")
    X, y = read_csv_stream(path).read(1000)
    ref = SEAGenerator(seed=5, length=250).read(250)
    np.testing.assert_array_equal(X, ref[0])
    np.testing.assert_array_equal(y, ref[1])
