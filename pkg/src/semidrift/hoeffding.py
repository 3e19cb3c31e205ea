"""Hoeffding tree (VFDT) with Gaussian numeric attribute observers."""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from ._validation import check_features, check_labels

_SQRT2 = math.sqrt(2.0)


def hoeffding_bound(value_range: float, confidence: float, n: int) -> float:
    """Radius ``sqrt(R^2 ln(1/delta) / 2n)`` within which the true mean lies w.p. 1 - delta."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 < confidence <= 1.0:
        raise ValueError("confidence must lie in (0, 1]")
    return math.sqrt(value_range * value_range * math.log(1.0 / confidence) / (2.0 * n))


def _entropy(counts) -> float:
    total = sum(counts)
    if total <= 0:
        return 0.0
    h = 0.0
    for c in counts:
        if c > 0:
            p = c / total
            h -= p * math.log2(p)
    return h


def _majority(counts: dict) -> Optional[int]:
    if not counts:
        return None
    best = max(counts.values())
    return min(k for k, v in counts.items() if v == best)


class _Split:
    __slots__ = ("attribute", "threshold", "left", "right")

    def __init__(self, attribute, threshold, left, right):
        self.attribute = attribute
        self.threshold = threshold
        self.left = left
        self.right = right


class _Leaf:
    """Class counts plus a running Gaussian per (class, attribute)."""

    __slots__ = ("depth", "class_counts", "stats", "lo", "hi", "since_attempt",
                 "initial_counts", "mc_correct", "nb_correct", "fallback",
                 "fallback_correct", "own_correct")

    def __init__(self, d: int, depth: int = 0, initial_counts: Optional[dict] = None):
        self.depth = depth
        self.class_counts: dict[int, int] = {}
        # class -> [n, means, m2s] (Welford)
        self.stats: dict[int, list] = {}
        self.lo = [math.inf] * d
        self.hi = [-math.inf] * d
        self.since_attempt = 0
        self.initial_counts = initial_counts or {}
        self.mc_correct = 0
        self.nb_correct = 0
        # detached parent leaf; predicts here until this leaf's own predictions
        # have been more accurate on the instances routed to it
        self.fallback: Optional[_Leaf] = None
        self.fallback_correct = 0
        self.own_correct = 0

    def update(self, x, y: int) -> None:
        self.class_counts[y] = self.class_counts.get(y, 0) + 1
        st = self.stats.get(y)
        if st is None:
            st = self.stats[y] = [0, [0.0] * len(x), [0.0] * len(x)]
        st[0] += 1
        n = st[0]
        means, m2 = st[1], st[2]
        lo, hi = self.lo, self.hi
        for i, v in enumerate(x):
            delta = v - means[i]
            means[i] += delta / n
            m2[i] += delta * (v - means[i])
            if v < lo[i]:
                lo[i] = v
            if v > hi[i]:
                hi[i] = v

    def variance(self, y: int, i: int) -> float:
        n, _, m2 = self.stats[y]
        return m2[i] / (n - 1) if n > 1 else 0.0

    def predict(self) -> int:
        c = _majority(self.class_counts)
        if c is None:
            c = _majority(self.initial_counts)
        return 0 if c is None else c

    def predict_nb(self, x) -> int:
        if not self.class_counts:
            return self.predict()
        total = sum(self.class_counts.values())
        best, best_score = None, -math.inf
        for y in sorted(self.class_counts):
            n, means, _ = self.stats[y]
            score = math.log(n / total)
            for i, v in enumerate(x):
                var = self.variance(y, i)
                if var <= 0.0:
                    # degenerate Gaussian: fall back to a tiny spread around the mean
                    var = 1e-9 + 1e-6 * abs(means[i])
                diff = v - means[i]
                score -= 0.5 * (math.log(2.0 * math.pi * var) + diff * diff / var)
            if score > best_score:
                best, best_score = y, score
        return best

    def left_estimate(self, i: int, threshold: float) -> dict:
        """Estimated per-class count with attribute ``i`` <= ``threshold``."""
        out = {}
        for y, (n, means, _) in self.stats.items():
            sd = math.sqrt(self.variance(y, i))
            if sd <= 0.0:
                out[y] = float(n) if means[i] <= threshold else 0.0
            else:
                z = (threshold - means[i]) / (sd * _SQRT2)
                out[y] = n * 0.5 * (1.0 + math.erf(z))
        return out


class HoeffdingTreeClassifier(ClassifierMixin, BaseEstimator):
    """Incremental decision tree with binary numeric splits.

    Parameters
    ----------
    grace_period : int
        Instances a leaf absorbs between split attempts.
    split_confidence : float
        Allowed error probability of the Hoeffding bound.
    tie_threshold : float
        Bound below which the best two splits are considered tied and the
        best one is taken.
    max_depth : int or None
        Depth limit; leaves at this depth never split.
    n_split_points : int
        Equal-width candidate thresholds between the observed min and max.
    leaf_prediction : {"mc", "nb", "nba"}
        Majority class, naive Bayes over the leaf's Gaussians, or adaptive
        (whichever of the two has been more accurate on the leaf's own
        training instances).
    """

    def __init__(self, grace_period=200, split_confidence=1e-7, tie_threshold=0.05,
                 max_depth=None, n_split_points=10, leaf_prediction="nba"):
        self.grace_period = grace_period
        self.split_confidence = split_confidence
        self.tie_threshold = tie_threshold
        self.max_depth = max_depth
        self.n_split_points = n_split_points
        self.leaf_prediction = leaf_prediction

    @property
    def is_trained(self) -> bool:
        return getattr(self, "n_samples_seen_", 0) > 0

    def _init(self, d: int) -> None:
        if self.leaf_prediction not in ("mc", "nb", "nba"):
            raise ValueError(f"unknown leaf_prediction {self.leaf_prediction!r}")
        self.n_features_in_ = d
        self.root_ = _Leaf(d)
        self.n_samples_seen_ = 0
        self.n_splits_ = 0
        self.classes_ = np.empty(0, dtype=np.int64)

    def fit(self, X, y):
        X = check_features(X)
        self._init(X.shape[1])
        return self.partial_fit(X, y)

    def partial_fit(self, X, y, classes=None):
        X = check_features(X)
        y = check_labels(y, len(X))
        if not hasattr(self, "root_"):
            self._init(X.shape[1])
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        for row, label in zip(X.tolist(), y.tolist()):
            self._learn(row, label)
        seen = np.union1d(self.classes_, y if classes is None else np.union1d(y, classes))
        self.classes_ = seen.astype(np.int64)
        return self

    def train_one(self, x, y: int):
        x = [float(v) for v in x]
        if not hasattr(self, "root_"):
            self._init(len(x))
        if len(x) != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {len(x)}")
        self._learn(x, int(y))
        if int(y) not in self.classes_:
            self.classes_ = np.union1d(self.classes_, [int(y)]).astype(np.int64)
        return self

    def _learn(self, x: list, y: int) -> None:
        self.n_samples_seen_ += 1
        node, parent, went_left = self.root_, None, False
        while isinstance(node, _Split):
            parent = node
            went_left = x[node.attribute] <= node.threshold
            node = node.left if went_left else node.right
        if node.fallback is not None:
            node.fallback_correct += self._leaf_predict(node.fallback, x) == y
            node.own_correct += self._leaf_predict(node, x) == y
            if node.own_correct > node.fallback_correct and \
                    sum(node.class_counts.values()) >= self.grace_period:
                node.fallback = None
        self._update_leaf(node, x, y)
        node.since_attempt += 1
        if node.since_attempt >= self.grace_period and len(node.class_counts) > 1:
            node.since_attempt = 0
            if self.max_depth is None or node.depth < self.max_depth:
                split = self._attempt_split(node)
                if split is not None:
                    if parent is None:
                        self.root_ = split
                    elif went_left:
                        parent.left = split
                    else:
                        parent.right = split
                    self.n_splits_ += 1

    def _update_leaf(self, leaf: _Leaf, x: list, y: int) -> None:
        if self.leaf_prediction == "nba" and leaf.class_counts:
            leaf.mc_correct += leaf.predict() == y
            leaf.nb_correct += leaf.predict_nb(x) == y
        leaf.update(x, y)

    def _attempt_split(self, leaf: _Leaf) -> Optional[_Split]:
        counts = leaf.class_counts
        n = sum(counts.values())
        h_parent = _entropy(counts.values())
        best_per_attr = []
        k = self.n_split_points
        for i in range(self.n_features_in_):
            lo, hi = leaf.lo[i], leaf.hi[i]
            if not hi > lo:
                continue
            step = (hi - lo) / (k + 1)
            best = None
            for j in range(1, k + 1):
                t = lo + j * step
                left = leaf.left_estimate(i, t)
                right = {c: counts[c] - left[c] for c in counts}
                nl, nr = sum(left.values()), sum(right.values())
                gain = h_parent - (nl * _entropy(left.values()) + nr * _entropy(right.values())) / n
                if best is None or gain > best[0]:
                    best = (gain, i, t, left, right)
            best_per_attr.append(best)
        if not best_per_attr:
            return None
        best_per_attr.sort(key=lambda b: (-b[0], b[1]))
        top = best_per_attr[0]
        second_gain = best_per_attr[1][0] if len(best_per_attr) > 1 else 0.0
        if top[0] <= 1e-12:
            return None
        eps = hoeffding_bound(math.log2(len(counts)), self.split_confidence, n)
        if top[0] - second_gain > eps or eps < self.tie_threshold:
            _, i, t, left, right = top
            d = self.n_features_in_
            children = _Leaf(d, leaf.depth + 1, left), _Leaf(d, leaf.depth + 1, right)
            leaf.fallback = None
            for child in children:
                child.fallback = leaf
            return _Split(i, t, *children)
        return None

    def _leaf_for(self, x) -> _Leaf:
        node = self.root_
        while isinstance(node, _Split):
            node = node.left if x[node.attribute] <= node.threshold else node.right
        return node

    def predict(self, X) -> np.ndarray:
        X = check_features(X)
        if not self.is_trained:
            return np.zeros(len(X), dtype=np.int64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return np.fromiter((self._predict_row(r) for r in X.tolist()),
                           dtype=np.int64, count=len(X))

    def _predict_row(self, x) -> int:
        leaf = self._leaf_for(x)
        return self._leaf_predict(leaf.fallback or leaf, x)

    def _leaf_predict(self, leaf: _Leaf, x) -> int:
        mode = self.leaf_prediction
        if mode == "nb" or (mode == "nba" and leaf.nb_correct > leaf.mc_correct):
            return leaf.predict_nb(x)
        return leaf.predict()

    def predict_one(self, x) -> int:
        if not self.is_trained:
            return 0
        return self._predict_row(list(x))

    def predict_proba(self, X) -> np.ndarray:
        X = check_features(X)
        out = np.zeros((len(X), len(self.classes_)))
        if not self.is_trained:
            return out
        pos = {int(c): j for j, c in enumerate(self.classes_)}
        for r, row in enumerate(X.tolist()):
            leaf = self._leaf_for(row)
            counts = leaf.class_counts or leaf.initial_counts
            total = sum(counts.values())
            for c, v in counts.items():
                if c in pos and total > 0:
                    out[r, pos[c]] = v / total
        return out

    @property
    def depth(self) -> int:
        def walk(node):
            if isinstance(node, _Split):
                return 1 + max(walk(node.left), walk(node.right))
            return 0
        return walk(self.root_) if hasattr(self, "root_") else 0

    def leaves(self) -> list[_Leaf]:
        out, stack = [], [self.root_]
        while stack:
            node = stack.pop()
            if isinstance(node, _Split):
                stack.extend((node.right, node.left))
            else:
                out.append(node)
        return out

    def dump(self) -> str:
        """Indented text rendering of the tree, for debugging."""
        lines = []

        def walk(node, indent):
            pad = "  " * indent
            if isinstance(node, _Split):
                lines.append(f"{pad}if x[{node.attribute}] <= {node.threshold:.6g}:")
                walk(node.left, indent + 1)
                lines.append(f"{pad}else:")
                walk(node.right, indent + 1)
            else:
                lines.append(f"{pad}class {node.predict()}  counts={dict(sorted(node.class_counts.items()))}")

        if hasattr(self, "root_"):
            walk(self.root_, 0)
        return "\n".join(lines)
