"""Supervised drift detectors over a per-instance error stream.

All four detectors share one interface: ``update(value)`` consumes one
error bit (or real value for Page-Hinkley) and returns a :class:`DriftState`.
After a drift the detector resets itself and starts over.
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np
from sklearn.base import BaseEstimator

from .density import DriftState


class BinaryErrorDetector(BaseEstimator):
    """Base class; subclasses implement ``_update`` and ``_reset``."""

    def __init__(self):
        self.reset()

    def reset(self):
        self.n_seen = 0
        self.state = DriftState.STABLE
        self._reset()
        return self

    def _reset(self):
        raise NotImplementedError

    def _update(self, value) -> DriftState:
        raise NotImplementedError

    def update(self, value) -> DriftState:
        self.n_seen += 1
        state = self._update(value)
        if state is DriftState.DRIFT:
            self.reset()
        self.state = state
        return state

    def fit(self, values, y=None):
        """Feed a whole sequence; records ``drift_indices_`` and ``warning_indices_``."""
        self.drift_indices_, self.warning_indices_ = [], []
        for i, v in enumerate(np.asarray(values, dtype=float).ravel()):
            st = self.update(v)
            if st is DriftState.DRIFT:
                self.drift_indices_.append(i)
            elif st is DriftState.WARNING:
                self.warning_indices_.append(i)
        return self


def _bit(value) -> int:
    if value not in (0, 1, 0.0, 1.0, True, False):
        raise ValueError(f"error bit must be 0 or 1, got {value!r}")
    return int(value)


class DDM(BinaryErrorDetector):
    """Drift detection from the running error rate and its binomial std.

    Warning when ``p + s > p_min + warning_level * s_min`` and drift when
    ``p + s > p_min + drift_level * s_min``, with ``(p_min, s_min)`` taken
    where ``p + s`` was smallest.
    """

    def __init__(self, min_instances=30, warning_level=2.0, drift_level=3.0):
        self.min_instances = min_instances
        self.warning_level = warning_level
        self.drift_level = drift_level
        super().__init__()

    def _reset(self):
        self.n_errors = 0
        self.p = 0.0
        self.s = 0.0
        self.p_min = math.inf
        self.s_min = math.inf

    def _update(self, value):
        self.n_errors += _bit(value)
        i = self.n_seen
        self.p = self.n_errors / i
        self.s = math.sqrt(self.p * (1.0 - self.p) / i)
        if i < self.min_instances:
            return DriftState.STABLE
        level = self.p + self.s
        if level <= self.p_min + self.s_min:
            self.p_min, self.s_min = self.p, self.s
        # strict comparison so an error-free prefix (p_min = s_min = 0) stays quiet
        if level > self.p_min + self.drift_level * self.s_min:
            return DriftState.DRIFT
        if level > self.p_min + self.warning_level * self.s_min:
            return DriftState.WARNING
        return DriftState.STABLE


class EDDM(BinaryErrorDetector):
    """Drift detection from the distance between consecutive errors.

    Tracks the mean ``p'`` and std ``s'`` of the gaps and the maximum of
    ``p' + 2 s'``; the ratio of the current value to that maximum falling
    below ``warning_ratio``/``drift_ratio`` signals warning/drift.
    """

    def __init__(self, min_errors=30, warning_ratio=0.95, drift_ratio=0.90):
        self.min_errors = min_errors
        self.warning_ratio = warning_ratio
        self.drift_ratio = drift_ratio
        super().__init__()

    def _reset(self):
        self.n_errors = 0
        self.last_error = 0
        self.mean = 0.0
        self._m2 = 0.0
        self.max_level = 0.0

    @property
    def std(self) -> float:
        return math.sqrt(self._m2 / self.n_errors) if self.n_errors else 0.0

    def _update(self, value):
        if not _bit(value):
            return self.state if self.state is DriftState.WARNING else DriftState.STABLE
        gap = self.n_seen - self.last_error
        self.last_error = self.n_seen
        self.n_errors += 1
        d = gap - self.mean
        self.mean += d / self.n_errors
        self._m2 += d * (gap - self.mean)
        if self.n_errors < self.min_errors:
            return DriftState.STABLE
        # the maximum is only tracked once the gap statistics have warmed up
        level = self.mean + 2.0 * self.std
        self.max_level = max(self.max_level, level)
        ratio = level / self.max_level
        if ratio < self.drift_ratio:
            return DriftState.DRIFT
        if ratio < self.warning_ratio:
            return DriftState.WARNING
        return DriftState.STABLE


class ADWIN(BinaryErrorDetector):
    """Adaptive windowing over an exponential histogram of buckets.

    Every update tests each bucket boundary as a cut between an older and a
    newer sub-window; when their means differ by more than
    ``sqrt(ln(4 W / delta) / (2 m))`` with ``m = 1 / (1/n0 + 1/n1)``, the
    older sub-window of the most significant cut is dropped and drift is
    reported.

    Parameters
    ----------
    delta : float
    max_buckets : int
        Buckets kept per size class before the two oldest are merged.
    min_sub_window : int
        Cuts leaving fewer instances on either side are not tested.
    warning_fraction : float
        Warning when some cut exceeds this fraction of its bound.
    """

    def __init__(self, delta=0.002, max_buckets=5, min_sub_window=5, warning_fraction=0.8):
        self.delta = delta
        self.max_buckets = max_buckets
        self.min_sub_window = min_sub_window
        self.warning_fraction = warning_fraction
        super().__init__()

    def _reset(self):
        # rows[k] holds sums of buckets of size 2**k, newest last
        self.rows: list[deque] = []
        self.width = 0
        self.total = 0.0

    @property
    def mean(self) -> float:
        return self.total / self.width if self.width else 0.0

    @property
    def n_buckets(self) -> int:
        return sum(len(r) for r in self.rows)

    def _insert(self, value: float):
        if not self.rows:
            self.rows.append(deque())
        self.rows[0].append(value)
        self.width += 1
        self.total += value
        k = 0
        while len(self.rows[k]) > self.max_buckets:
            merged = self.rows[k].popleft() + self.rows[k].popleft()
            if k + 1 == len(self.rows):
                self.rows.append(deque())
            self.rows[k + 1].append(merged)
            k += 1

    def _drop_oldest(self):
        k = len(self.rows) - 1
        while not self.rows[k]:
            k -= 1
        self.total -= self.rows[k].popleft()
        self.width -= 2 ** k
        while self.rows and not self.rows[-1]:
            self.rows.pop()

    def cut_bound(self, n0: int, n1: int) -> float:
        m = 1.0 / (1.0 / n0 + 1.0 / n1)
        return math.sqrt(math.log(4.0 * (n0 + n1) / self.delta) / (2.0 * m))

    def _worst_cut(self) -> tuple[float, int]:
        """Largest ``|mean0 - mean1| / bound`` over cuts and the older side's size there."""
        worst, at, n0, s0 = 0.0, 0, 0, 0.0
        for k in range(len(self.rows) - 1, -1, -1):
            size = 2 ** k
            for bucket in self.rows[k]:
                n0 += size
                s0 += bucket
                n1 = self.width - n0
                if n1 < self.min_sub_window:
                    return worst, at
                if n0 < self.min_sub_window:
                    continue
                diff = abs(s0 / n0 - (self.total - s0) / n1)
                ratio = diff / self.cut_bound(n0, n1)
                if ratio > worst:
                    worst, at = ratio, n0
        return worst, at

    def _update(self, value):
        self._insert(float(_bit(value)))
        drift, ratio = False, 0.0
        while self.width > 2 * self.min_sub_window:
            ratio, at = self._worst_cut()
            if ratio <= 1.0:
                break
            # drop the whole older sub-window of the most significant cut
            keep = self.width - at
            while self.width > keep:
                self._drop_oldest()
            drift = True
        if drift:
            return DriftState.DRIFT
        return DriftState.WARNING if ratio > self.warning_fraction else DriftState.STABLE

    def update(self, value) -> DriftState:
        # ADWIN keeps its shrunken window after a drift instead of starting over
        self.n_seen += 1
        self.state = self._update(value)
        return self.state


class PageHinkley(BinaryErrorDetector):
    """Page-Hinkley test for an increase in the mean.

    ``m_T = sum_t (x_t - mean_t - delta)`` with ``mean_t`` the running mean
    and ``M_T = min m_t``; drift when ``m_T - M_T > lambda_``.
    """

    def __init__(self, lambda_=50.0, delta=0.005, min_instances=30, warning_fraction=0.5):
        self.lambda_ = lambda_
        self.delta = delta
        self.min_instances = min_instances
        self.warning_fraction = warning_fraction
        super().__init__()

    def _reset(self):
        self.mean = 0.0
        self.cumulative = 0.0
        self.minimum = 0.0

    def _update(self, value):
        x = float(value)
        self.mean += (x - self.mean) / self.n_seen
        self.cumulative += x - self.mean - self.delta
        self.minimum = min(self.minimum, self.cumulative)
        if self.n_seen < self.min_instances:
            return DriftState.STABLE
        gap = self.cumulative - self.minimum
        if gap > self.lambda_:
            return DriftState.DRIFT
        if gap > self.warning_fraction * self.lambda_:
            return DriftState.WARNING
        return DriftState.STABLE


BASELINES = {"ddm": DDM, "eddm": EDDM, "adwin": ADWIN, "ph": PageHinkley}


def make_baseline(name: str) -> BinaryErrorDetector:
    try:
        return BASELINES[name]()
    except KeyError:
        raise ValueError(f"unknown baseline detector {name!r}") from None
