"""Seeded SEA and HyperPlane streams with abrupt drift at chosen indices."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .stream import ArraySource, write_csv

SEA_THRESHOLDS = (8.0, 9.0, 7.0, 9.5)


@dataclass(frozen=True)
class DriftSchedule:
    drift_points: tuple = ()
    noise: float = 0.0

    def __post_init__(self):
        pts = tuple(int(p) for p in self.drift_points)
        object.__setattr__(self, "drift_points", pts)
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError(f"drift points must be strictly increasing: {pts}")
        if any(p <= 0 for p in pts):
            raise ValueError(f"drift points must be positive: {pts}")
        if not 0.0 <= self.noise < 0.5:
            raise ValueError(f"noise must lie in [0, 0.5), got {self.noise}")

    def validate(self, length: int) -> None:
        if self.drift_points and self.drift_points[-1] >= length:
            raise ValueError(
                f"drift point {self.drift_points[-1]} lies beyond stream length {length}"
            )

    def concept_ids(self, length: int) -> np.ndarray:
        """Index of the active concept for every position."""
        return np.searchsorted(self.drift_points, np.arange(length), side="right")


def sea_label(X, threshold: float) -> np.ndarray:
    X = np.atleast_2d(X)
    return (X[:, 0] + X[:, 1] <= threshold).astype(np.int64)


def hyperplane_label(X, weights) -> np.ndarray:
    X = np.atleast_2d(X)
    weights = np.asarray(weights, dtype=float)
    return (X @ weights >= 0.5 * weights.sum()).astype(np.int64)


def _rngs(seed: int):
    feat, noise, concept = np.random.SeedSequence(seed).spawn(3)
    return (np.random.default_rng(feat), np.random.default_rng(noise),
            np.random.default_rng(concept))


def _flip(y: np.ndarray, noise: float, rng) -> np.ndarray:
    flips = rng.random(len(y)) < noise
    return np.where(flips, 1 - y, y)


class SEAGenerator(ArraySource):
    """SEA concepts: three uniform features on [0, 10], label 1 iff x1 + x2 <= theta.

    The threshold cycles through ``thresholds``, advancing at each drift point.
    """

    def __init__(self, seed: int = 1, length: int = 100_000,
                 schedule: DriftSchedule | None = None,
                 thresholds: Sequence[float] = SEA_THRESHOLDS):
        if length < 1:
            raise ValueError("length must be >= 1")
        schedule = schedule if schedule is not None else DriftSchedule(noise=0.1)
        schedule.validate(length)
        if not thresholds:
            raise ValueError("at least one SEA threshold is required")
        self.seed, self.schedule = seed, schedule
        self.thresholds = tuple(float(t) for t in thresholds)
        frng, nrng, _ = _rngs(seed)
        X = frng.uniform(0.0, 10.0, size=(length, 3))
        cid = schedule.concept_ids(length)
        theta = np.asarray(self.thresholds)[cid % len(self.thresholds)]
        self.clean_labels = (X[:, 0] + X[:, 1] <= theta).astype(np.int64)
        super().__init__(X, _flip(self.clean_labels, schedule.noise, nrng), n_classes=2)
        self.concept_threshold = theta


class HyperplaneGenerator(ArraySource):
    """Rotating-hyperplane concepts with abrupt weight redraws at drift points.

    Features are uniform on [0, 1]^d; a concept is a weight vector ``w`` drawn
    uniformly from [0, 1]^d, and the label is 1 iff ``w . x >= sum(w) / 2``.
    """

    def __init__(self, seed: int = 1, length: int = 100_000, n_features: int = 10,
                 schedule: DriftSchedule | None = None):
        if n_features < 2:
            raise ValueError("hyperplane streams need at least 2 features")
        if length < 1:
            raise ValueError("length must be >= 1")
        schedule = schedule if schedule is not None else DriftSchedule(noise=0.05)
        schedule.validate(length)
        self.seed, self.schedule = seed, schedule
        frng, nrng, crng = _rngs(seed)
        X = frng.uniform(0.0, 1.0, size=(length, n_features))
        self.weights = crng.uniform(0.0, 1.0, size=(len(schedule.drift_points) + 1, n_features))
        cid = schedule.concept_ids(length)
        W = self.weights[cid]
        self.clean_labels = (np.einsum("ij,ij->i", X, W) >= 0.5 * W.sum(axis=1)).astype(np.int64)
        super().__init__(X, _flip(self.clean_labels, schedule.noise, nrng), n_classes=2)


class LabelInversionGenerator(ArraySource):
    """SEA features under one fixed threshold; every drift point swaps the two labels.

    The inputs and the decision boundary never move, only which side is
    which class, so the posterior of every previously correct label flips.
    """

    def __init__(self, seed: int = 1, length: int = 100_000,
                 schedule: DriftSchedule | None = None, threshold: float = 8.0):
        if length < 1:
            raise ValueError("length must be >= 1")
        schedule = schedule if schedule is not None else DriftSchedule(noise=0.1)
        schedule.validate(length)
        self.seed, self.schedule, self.threshold = seed, schedule, float(threshold)
        frng, nrng, _ = _rngs(seed)
        X = frng.uniform(0.0, 10.0, size=(length, 3))
        inverted = schedule.concept_ids(length) % 2 == 1
        clean = sea_label(X, self.threshold)
        self.clean_labels = np.where(inverted, 1 - clean, clean)
        super().__init__(X, _flip(self.clean_labels, schedule.noise, nrng), n_classes=2)


def sea_stream(seed: int, length: int, schedule: DriftSchedule | None = None,
               thresholds: Sequence[float] = SEA_THRESHOLDS) -> SEAGenerator:
    return SEAGenerator(seed, length, schedule, thresholds)


def hyperplane_stream(seed: int, length: int, d: int = 10,
                      schedule: DriftSchedule | None = None) -> HyperplaneGenerator:
    return HyperplaneGenerator(seed, length, d, schedule)


def inversion_stream(seed: int, length: int, schedule: DriftSchedule | None = None,
                     threshold: float = 8.0) -> LabelInversionGenerator:
    return LabelInversionGenerator(seed, length, schedule, threshold)


def write_dataset(source: ArraySource, path):
    """Materialize the whole source (from its current position) as CSV."""
    X, y = source.read(len(source) - source.position)
    return write_csv(path, X, y, getattr(source, "feature_names", None))
