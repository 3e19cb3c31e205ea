"""Reliable labeled sets from partially labeled windows.

Two strategies turn a window with few (or only positive) labels into a set
of labeled instances the detector can trust: uniform active learning against
a budgeted oracle, and PU learning with a biased classifier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .stream import LabelOracle, Window, labeled_fraction

GIVEN, QUERIED, INFERRED = "given", "queried", "inferred"


@dataclass(frozen=True)
class LabelBudget:
    """Fraction of each window whose labels may be held."""

    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"label budget must lie in (0, 1], got {self.alpha}")

    def target(self, n: int) -> int:
        """``ceil(alpha * n)``, guarded against float noise."""
        return math.ceil(round(self.alpha * n, 9))


@dataclass
class ReliableLabeledSet:
    """Labeled instances of one window plus where each label came from.

    Attributes
    ----------
    indices : ndarray of int
        Stream indices, unique.
    X, y : ndarray
    provenance : ndarray of str
        ``"given"``, ``"queried"`` or ``"inferred"`` per entry.
    flags : list of str
        Non-fatal problems (budget truncation, PU shortfall, no positives).
    """

    indices: np.ndarray
    X: np.ndarray
    y: np.ndarray
    provenance: np.ndarray
    flags: list = field(default_factory=list)

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.y = np.asarray(self.y, dtype=np.int64)
        self.provenance = np.asarray(self.provenance, dtype=object)
        n = len(self.indices)
        if not (len(self.X) == len(self.y) == len(self.provenance) == n):
            raise ValueError("reliable set fields are misaligned")
        if len(np.unique(self.indices)) != n:
            raise ValueError("reliable set has duplicate instance indices")
        if n and self.y.min() < 0:
            raise ValueError("every reliable entry needs a label")

    @classmethod
    def empty(cls, d: int, flags=None) -> "ReliableLabeledSet":
        return cls(np.empty(0, np.int64), np.empty((0, d)), np.empty(0, np.int64),
                   np.empty(0, object), list(flags or []))

    def __len__(self) -> int:
        return len(self.indices)

    def count(self, provenance: str) -> int:
        return int(np.count_nonzero(self.provenance == provenance))

    @property
    def entries(self) -> list[tuple[int, int, str]]:
        return list(zip(self.indices.tolist(), self.y.tolist(), self.provenance.tolist()))


def _assemble(window: Window, parts, flags) -> ReliableLabeledSet:
    # parts: (local positions, labels, provenance) triples
    if not parts:
        return ReliableLabeledSet.empty(window.X.shape[1], flags)
    pos = np.concatenate([p for p, _, _ in parts]).astype(np.int64)
    y = np.concatenate([lab for _, lab, _ in parts]).astype(np.int64)
    prov = np.concatenate([np.full(len(p), tag, dtype=object) for p, _, tag in parts])
    order = np.argsort(pos, kind="stable")
    pos, y, prov = pos[order], y[order], prov[order]
    return ReliableLabeledSet(window.start_index + pos, window.X[pos], y, prov, list(flags))


def active_learn(window: Window, oracle: LabelOracle, budget: LabelBudget,
                 rng: np.random.Generator) -> ReliableLabeledSet:
    """Given labels plus uniformly drawn oracle queries up to ``ceil(alpha * n)``.

    Queries are only made when the window's labeled fraction is below the
    budget. If the oracle's running allowance is smaller than needed, the set
    is truncated and flagged instead of failing.
    """
    given = np.flatnonzero(window.labeled_mask)
    parts = [(given, window.y[given], GIVEN)] if len(given) else []
    flags = []
    if labeled_fraction(window) < budget.alpha:
        unlabeled = np.flatnonzero(~window.labeled_mask)
        need = min(budget.target(len(window)) - len(given), len(unlabeled))
        picked = np.sort(rng.choice(unlabeled, size=need, replace=False)) if need > 0 \
            else np.empty(0, np.int64)
        allowed = oracle.allowance()
        if len(picked) > allowed:
            flags.append(f"budget exhausted: {len(picked)} queries wanted, {allowed} allowed")
            picked = np.sort(rng.permutation(picked)[:allowed])
        if len(picked):
            labels = oracle.query(window.start_index + picked)
            parts.append((picked, labels, QUERIED))
    return _assemble(window, parts, flags)


def _balanced_biased_tree(X_pos, X_unl, rng, estimator=None):
    """Positives vs all unlabeled, positives resampled to equal count."""
    if estimator is None:
        from .hoeffding import HoeffdingTreeClassifier
        estimator = HoeffdingTreeClassifier()
    from sklearn.base import clone
    reps = rng.choice(len(X_pos), size=max(len(X_unl), len(X_pos)), replace=True)
    X = np.vstack([X_pos[reps], X_unl])
    s = np.concatenate([np.ones(len(reps), np.int64), np.zeros(len(X_unl), np.int64)])
    order = rng.permutation(len(X))
    return clone(estimator).fit(X[order], s[order])


def pu_learn(window: Window, budget: LabelBudget, rng: np.random.Generator,
             positive: int = 1, negative: int = 0, estimator=None) -> ReliableLabeledSet:
    """Labeled positives plus reliable negatives found by a biased classifier.

    The biased classifier treats every unlabeled instance as negative. Among
    the unlabeled instances it still calls negative, as many as there are
    labeled positives are drawn uniformly and labeled ``negative``.

    Parameters
    ----------
    budget : LabelBudget
        Only validated here; the negative count follows the positive count.
    estimator : classifier, optional
        Template for the biased classifier (defaults to a Hoeffding tree).
    """
    given = np.flatnonzero(window.labeled_mask)
    if len(given) and np.any(window.y[given] != positive):
        raise ValueError("PU learning expects only positive labels in the window")
    if not len(given):
        return ReliableLabeledSet.empty(window.X.shape[1], ["no positive labels in window"])
    unlabeled = np.flatnonzero(~window.labeled_mask)
    parts = [(given, np.full(len(given), positive), GIVEN)]
    flags = []
    if len(unlabeled):
        clf = _balanced_biased_tree(window.X[given], window.X[unlabeled], rng, estimator)
        pool = unlabeled[clf.predict(window.X[unlabeled]) != 1]
        want = len(given)
        if len(pool) < want:
            flags.append(f"negative shortfall: {want} wanted, {len(pool)} available")
        picked = np.sort(rng.choice(pool, size=min(want, len(pool)), replace=False))
        if len(picked):
            parts.append((picked, np.full(len(picked), negative), INFERRED))
    else:
        flags.append(f"negative shortfall: {len(given)} wanted, 0 available")
    return _assemble(window, parts, flags)


def discover(window: Window, method: str, oracle: Optional[LabelOracle],
             budget: LabelBudget, rng) -> ReliableLabeledSet:
    """Dispatch on the knowledge-discovery method name (``active`` or ``pu``)."""
    if method == "active":
        if oracle is None:
            raise ValueError("active learning needs an oracle")
        return active_learn(window, oracle, budget, rng)
    if method == "pu":
        return pu_learn(window, budget, rng)
    raise ValueError(f"unknown knowledge-discovery method {method!r}")


__all__ = ["GIVEN", "QUERIED", "INFERRED", "LabelBudget",
           "ReliableLabeledSet", "active_learn", "pu_learn", "discover"]
