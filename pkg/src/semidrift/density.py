"""Posterior-density drift detection.

Each window yields two labelings: the reliable labels (current concept) and
the incremental estimator's predictions (the concept learned so far). Both
are turned into class posteriors under a Gaussian naive Bayes model fitted on
the reliable labels, and a Gaussian KDE fitted to the reliable sample scores
the incremental one. When the incremental estimator disagrees with the
current concept its labels land in low-posterior regions and the density
collapses; the collapse is scaled by the label budget and pushed through
``erf`` to give an error-rate value in [0, 1).

Two statistics are available:

``"calibrated"`` (default)
    Joint naive Bayes posteriors, one per instance, both samples on the
    reference sample's scale. The mean density is divided by the reference
    sample's own leave-one-out mean density, and that ratio is compared with
    its recent stable history to give a z-score. The score's lower-tail
    probability is what gets scaled and passed to ``erf``.
``"literal"``
    Per-attribute posteriors pooled into one sample, each sample standardized
    on its own, and the scaled mean density passed to ``erf`` directly.
"""

from __future__ import annotations

import collections
import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, clone

from ._validation import check_features, check_labels

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class DetectionSkipped(Exception):
    """The reliable labeled set cannot support a posterior model."""


class DriftState(str, enum.Enum):
    STABLE = "stable"
    WARNING = "warning"
    DRIFT = "drift"


# -- posterior model --------------------------------------------------------


class PosteriorModel(BaseEstimator):
    """Per-attribute Gaussian class conditionals with empirical priors.

    ``posterior(i, x, y)`` is ``p(x_i|y) p(y) / sum_y' p(x_i|y') p(y')``.
    """

    def __init__(self, var_floor=1e-9, min_samples=10):
        self.var_floor = var_floor
        self.min_samples = min_samples

    def fit(self, X, y):
        X = check_features(X)
        y = check_labels(y, len(X))
        classes, counts = np.unique(y, return_counts=True)
        if len(X) < self.min_samples:
            raise DetectionSkipped(f"{len(X)} reliable labels, need {self.min_samples}")
        if len(classes) < 2:
            raise DetectionSkipped("reliable labels contain a single class")
        self.classes_ = classes
        self.priors_ = counts / counts.sum()
        self.means_ = np.array([X[y == c].mean(axis=0) for c in classes])
        self.vars_ = np.maximum(np.array([X[y == c].var(axis=0) for c in classes]), self.var_floor)
        return self

    def _log_joint(self, X) -> np.ndarray:
        # (m, d, k): log p(x_i | y) + log p(y)
        diff = X[:, :, None] - self.means_.T[None, :, :]
        var = self.vars_.T[None, :, :]
        with np.errstate(divide="ignore"):
            log_prior = np.log(self.priors_)
        return -0.5 * (np.log(2.0 * np.pi * var) + diff * diff / var) + log_prior

    def posterior_matrix(self, X) -> np.ndarray:
        """``p(y|x_i)`` for every row, attribute and class, shape (m, d, k)."""
        X = check_features(X)
        lj = self._log_joint(X)
        lj -= lj.max(axis=2, keepdims=True)
        p = np.exp(lj)
        p /= p.sum(axis=2, keepdims=True)
        return np.clip(p, 0.0, 1.0)

    def posterior(self, i: int, x: float, y: int) -> float:
        if y not in self.classes_:
            return 0.0
        row = np.zeros((1, self.means_.shape[1]))
        row[0, i] = x
        k = int(np.searchsorted(self.classes_, y))
        return float(self.posterior_matrix(row)[0, i, k])

    def label_posteriors(self, X, labels) -> np.ndarray:
        """Posterior of each row's own label under every attribute, shape (m, d).

        Labels the model never saw get posterior 0.
        """
        labels = np.asarray(labels, dtype=np.int64)
        P = self.posterior_matrix(X)
        k = np.searchsorted(self.classes_, labels)
        k = np.clip(k, 0, len(self.classes_) - 1)
        known = self.classes_[k] == labels
        out = np.take_along_axis(P, k[:, None, None], axis=2)[:, :, 0]
        out[~known] = 0.0
        return out


    def joint_label_posteriors(self, X, labels) -> np.ndarray:
        """Naive Bayes posterior of each row's own label given all attributes, shape (m,).

        Composed from the same per-attribute class conditionals:
        ``p(y|x) ~ p(y) prod_i p(x_i|y)``. Unknown labels get 0.
        """
        X = check_features(X)
        labels = np.asarray(labels, dtype=np.int64)
        d = X.shape[1]
        lj = self._log_joint(X).sum(axis=1) - (d - 1) * np.log(self.priors_)
        lj -= lj.max(axis=1, keepdims=True)
        p = np.exp(lj)
        p /= p.sum(axis=1, keepdims=True)
        k = np.clip(np.searchsorted(self.classes_, labels), 0, len(self.classes_) - 1)
        out = np.clip(p[np.arange(len(X)), k], 0.0, 1.0)
        out[self.classes_[k] != labels] = 0.0
        return out


def fit_posterior_model(X, y, var_floor=1e-9, min_samples=10) -> PosteriorModel:
    return PosteriorModel(var_floor=var_floor, min_samples=min_samples).fit(X, y)


@dataclass(frozen=True)
class PosteriorSample:
    """Flattened per-(instance, attribute) posteriors and their z-scores."""

    raw: np.ndarray
    mean: float
    std: float

    @property
    def values(self) -> np.ndarray:
        """Standardized values (all zero when the raw values are constant)."""
        return self.standardize(self.raw)

    @property
    def degenerate(self) -> bool:
        return not self.std > 0.0

    def standardize(self, raw) -> np.ndarray:
        raw = np.asarray(raw, dtype=float)
        if self.degenerate:
            return np.zeros_like(raw)
        return (raw - self.mean) / self.std

    @classmethod
    def from_raw(cls, raw) -> "PosteriorSample":
        raw = np.asarray(raw, dtype=float).ravel()
        if raw.size == 0:
            raise ValueError("posterior sample is empty")
        return cls(raw, float(raw.mean()), float(raw.std()))


def compute_posterior_sample(model: PosteriorModel, X, labels) -> PosteriorSample:
    return PosteriorSample.from_raw(model.label_posteriors(X, labels))


# -- kernel density -----------------------------------------------------------


def silverman_bandwidth(m: int) -> float:
    """Rule-of-thumb bandwidth for ``m`` unit-variance points."""
    return 1.06 * m ** -0.2


class GaussianKDE(BaseEstimator):
    """One-dimensional Gaussian kernel density estimate.

    Parameters
    ----------
    bandwidth : float or None
        Kernel width; ``None`` uses ``1.06 * m ** -0.2`` (the sample is
        expected to be standardized already).
    grid_size : int
        Batch scoring of more than ``exact_limit`` kernel evaluations goes
        through linear interpolation on a grid of this many nodes.
    """

    def __init__(self, bandwidth=None, grid_size=2048, exact_limit=4_000_000):
        self.bandwidth = bandwidth
        self.grid_size = grid_size
        self.exact_limit = exact_limit

    def fit(self, points):
        points = np.asarray(points, dtype=float).ravel()
        if points.size == 0:
            raise ValueError("cannot fit a density to an empty sample")
        self.points_ = np.sort(points)
        self.bandwidth_ = float(self.bandwidth) if self.bandwidth is not None \
            else silverman_bandwidth(points.size)
        if not self.bandwidth_ > 0:
            raise ValueError("bandwidth must be positive")
        self._grid = None
        return self

    def density(self, x: float) -> float:
        """Exact kernel sum at one point."""
        u = (x - self.points_) / self.bandwidth_
        return float(np.exp(-0.5 * u * u).sum() * _INV_SQRT_2PI / (self.points_.size * self.bandwidth_))

    def _exact(self, q: np.ndarray, chunk: int = 2048) -> np.ndarray:
        out = np.empty(q.size)
        norm = _INV_SQRT_2PI / (self.points_.size * self.bandwidth_)
        for s in range(0, q.size, chunk):
            u = (q[s:s + chunk, None] - self.points_[None, :]) / self.bandwidth_
            out[s:s + chunk] = np.exp(-0.5 * u * u).sum(axis=1) * norm
        return out

    def score_samples(self, X) -> np.ndarray:
        """Densities (not log densities) at each query point."""
        q = np.asarray(X, dtype=float).ravel()
        if q.size * self.points_.size <= self.exact_limit:
            return self._exact(q)
        if self._grid is None:
            pad = 9.0 * self.bandwidth_
            nodes = np.linspace(self.points_[0] - pad, self.points_[-1] + pad, self.grid_size)
            self._grid = (nodes, self._exact(nodes))
        nodes, dens = self._grid
        return np.interp(q, nodes, dens, left=0.0, right=0.0)

    def mean_density(self, X) -> float:
        return float(self.score_samples(X).mean())


def fit_kde(sample: PosteriorSample, bandwidth=None) -> GaussianKDE:
    return GaussianKDE(bandwidth=bandwidth).fit(sample.values)


def kde_density(model: GaussianKDE, x: float) -> float:
    return model.density(x)


# -- scaling and error-rate -------------------------------------------------


def scaling_factor(alpha: float, delta: float = 0.0) -> float:
    """Sensitivity scale ``50 exp(-4 alpha) + delta``; shrinks as labels grow."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if delta < 0:
        raise ValueError(f"delta must be >= 0, got {delta}")
    return 50.0 * math.exp(-4.0 * alpha) + delta


def error_rate(x: float) -> float:
    """Gauss error function, ``(2/sqrt(pi)) * integral_0^x exp(-t^2) dt``, for x >= 0."""
    if x < 0:
        raise ValueError(f"error_rate expects x >= 0, got {x}")
    return math.erf(x)


def _normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


# -- detector -----------------------------------------------------------------


@dataclass(frozen=True)
class DetectorConfig:
    """Thresholds and knobs of :class:`DensityDriftDetector`.

    Parameters
    ----------
    tau, phi : float
        Drift and warning thresholds on the error-rate value, ``0 < tau < phi < 1``.
    delta : float
        Offset added to the label-budget scaling factor. Larger values make
        the detector less sensitive.
    alpha : float
        Label fraction the stream is run at.
    window : int
        Window size (informational; the detector works on whatever it is given).
    min_rl : int
        Reliable labels needed to run detection at all.
    statistic : {"calibrated", "literal"}
    history : int
        Stable windows remembered for calibrating the density ratio.
    scan : int
        The score is the most extreme combined z-score over the last
        ``1..scan`` windows since the last replacement.
    """

    tau: float = 0.05
    phi: float = 0.1
    delta: float = 0.0
    alpha: float = 1.0
    window: int = 1000
    min_rl: int = 10
    var_floor: float = 1e-9
    statistic: str = "calibrated"
    history: int = 20
    scan: int = 3

    def __post_init__(self):
        if not 0.0 < self.tau < self.phi < 1.0:
            raise ValueError(f"thresholds must satisfy 0 < tau < phi < 1, got tau={self.tau}, phi={self.phi}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.delta < 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.min_rl < 2:
            raise ValueError("min_rl must be >= 2")
        if self.statistic not in ("calibrated", "literal"):
            raise ValueError(f"unknown statistic {self.statistic!r}")
        if self.history < 1 or self.scan < 1:
            raise ValueError("history and scan must be >= 1")

    @property
    def gamma(self) -> float:
        return scaling_factor(self.alpha, self.delta)

    def classify(self, epsilon: Optional[float]) -> DriftState:
        """Threshold partition: drift below tau, warning below phi."""
        if epsilon is None or epsilon >= self.phi:
            return DriftState.STABLE
        return DriftState.DRIFT if epsilon < self.tau else DriftState.WARNING


@dataclass(frozen=True)
class DriftVerdict:
    """Outcome of one detection step.

    ``epsilon`` is ``None`` when detection did not run (bootstrap window or
    too few reliable labels); ``note`` says why.
    """

    state: DriftState
    epsilon: Optional[float]
    window_end_index: int
    density: Optional[float] = None
    ratio: Optional[float] = None
    score: Optional[float] = None
    rl_size: int = 0
    note: str = ""


def density_ratio(reference, incremental):
    """Mean density of ``incremental`` relative to the reference's own.

    Both samples are put on the reference's scale, the KDE is fitted on the
    reference, and the reference is scored leave-one-out so the ratio is
    about 1 when the two samples share a distribution.

    Returns
    -------
    density : float
        Mean KDE density of the incremental sample.
    ratio : float
    se : float
        Delta-method standard error of the ratio.
    """
    ref = PosteriorSample.from_raw(reference)
    inc = np.asarray(incremental, dtype=float).ravel()
    if ref.degenerate:
        # every reference point coincides; nothing to compare against
        return float("nan"), 1.0, 0.0
    kde = GaussianKDE().fit(ref.values)
    n, h = ref.raw.size, kde.bandwidth_
    f_ref = (kde.score_samples(ref.values) * n - _INV_SQRT_2PI / h) / (n - 1)
    f_inc = kde.score_samples(ref.standardize(inc))
    mi, mr = f_inc.mean(), f_ref.mean()
    if not mr > 0:
        return float(mi), 1.0, 0.0
    r = mi / mr
    if mi > 0:
        se = r * math.sqrt(f_inc.var() / f_inc.size / mi ** 2 + f_ref.var() / n / mr ** 2)
    else:
        se = math.sqrt(f_inc.var() / f_inc.size) / mr
    return float(mi), float(r), float(se)


class DensityDriftDetector:
    """Window-level drift detector that also owns the incremental estimator.

    Parameters
    ----------
    config : DetectorConfig
    estimator : classifier with ``fit``/``partial_fit``/``predict``
        Template for both the static and the incremental estimator; cloned,
        never fitted in place. Defaults to a Hoeffding tree.

    Attributes
    ----------
    incremental_ : estimator or None
        ``None`` until the first window with reliable labels.
    verdicts_ : list of DriftVerdict
    """

    def __init__(self, config: Optional[DetectorConfig] = None, estimator=None):
        self.config = config if config is not None else DetectorConfig()
        if estimator is None:
            from .hoeffding import HoeffdingTreeClassifier
            estimator = HoeffdingTreeClassifier()
        self.estimator = estimator
        self.incremental_ = None
        self.verdicts_: list[DriftVerdict] = []
        self._ratios = collections.deque(maxlen=self.config.history)
        self._scores: list[float] = []

    def reset(self):
        self.incremental_ = None
        self.verdicts_.clear()
        self._forget()

    def _forget(self):
        self._ratios.clear()
        self._scores.clear()

    def _fresh(self, X, y):
        return clone(self.estimator).fit(X, y)

    def _epsilon(self, model: PosteriorModel, rl_X, rl_y, X, i_y):
        cfg = self.config
        if cfg.statistic == "literal":
            ref = compute_posterior_sample(model, rl_X, rl_y)
            inc = compute_posterior_sample(model, X, i_y)
            rho = fit_kde(ref).mean_density(inc.values)
            return error_rate(cfg.gamma * rho), rho, None, None
        rho, r, se = density_ratio(model.joint_label_posteriors(rl_X, rl_y),
                                   model.joint_label_posteriors(X, i_y))
        z = 0.0
        if self._ratios and se > 0:
            k = len(self._ratios)
            z = (r - float(np.mean(self._ratios))) / (se * math.sqrt(1.0 + 1.0 / k))
        self._scores.append(z)
        recent = self._scores[-cfg.scan:]
        score = min(sum(recent[-j:]) / math.sqrt(j) for j in range(1, len(recent) + 1))
        return error_rate(cfg.gamma * _normal_cdf(score)), rho, r, score

    def detect(self, window, rl):
        """Run one window through detection and the train/freeze/replace policy.

        Parameters
        ----------
        window : Window
        rl : object with ``X`` and ``y``
            Reliable labeled set for this window.

        Returns
        -------
        verdict : DriftVerdict
        static : estimator or None
            Fresh estimator trained on ``rl`` (``None`` when ``rl`` is empty).
        """
        cfg = self.config
        rl_X = check_features(rl.X) if len(rl.y) else np.empty((0, window.X.shape[1]))
        rl_y = check_labels(rl.y, len(rl_X))
        end = window.end_index
        static = self._fresh(rl_X, rl_y) if len(rl_y) else None

        if self.incremental_ is None:
            if static is not None:
                self.incremental_ = self._fresh(rl_X, rl_y)
            return self._record(DriftVerdict(DriftState.STABLE, None, end, rl_size=len(rl_y),
                                             note="bootstrap"), static)
        try:
            model = fit_posterior_model(rl_X, rl_y, cfg.var_floor, cfg.min_rl)
        except DetectionSkipped as exc:
            if len(rl_y):
                self.incremental_.partial_fit(rl_X, rl_y)
            return self._record(DriftVerdict(DriftState.STABLE, None, end, rl_size=len(rl_y),
                                             note=f"skipped: {exc}"), static)

        i_y = self.incremental_.predict(window.X)
        eps, rho, r, score = self._epsilon(model, rl_X, rl_y, window.X, i_y)
        state = cfg.classify(eps)
        if state is DriftState.DRIFT:
            self.incremental_ = static
            self._forget()
        elif state is DriftState.STABLE:
            self.incremental_.partial_fit(rl_X, rl_y)
            if r is not None:
                self._ratios.append(r)
        verdict = DriftVerdict(state, eps, end, density=rho, ratio=r, score=score,
                               rl_size=len(rl_y))
        return self._record(verdict, static)

    def _record(self, verdict, static):
        self.verdicts_.append(verdict)
        return verdict, static
