"""Instances, windows, stream sources and the budget-enforcing label oracle."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

UNLABELED = -1


class StreamError(Exception):
    """Raised on malformed stream input (bad CSV rows, schema mismatches)."""


class BudgetExhausted(Exception):
    """Raised by :meth:`LabelOracle.query` when a query would exceed the budget."""


@dataclass(frozen=True)
class Instance:
    index: int
    features: tuple
    label: Optional[int] = None


@dataclass(frozen=True, eq=False)
class Window:
    """A contiguous batch of instances.

    ``X`` holds the features row-wise; ``y`` holds the labels that arrived
    with the stream, with :data:`UNLABELED` marking hidden ones. Both arrays
    are read-only.
    """

    start_index: int
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        if self.X.ndim != 2 or len(self.X) != len(self.y):
            raise StreamError("window features and labels are misaligned")
        self.X.setflags(write=False)
        self.y.setflags(write=False)

    def __len__(self) -> int:
        return len(self.X)

    @property
    def end_index(self) -> int:
        """Index of the last instance (inclusive)."""
        return self.start_index + len(self.X) - 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.start_index, self.start_index + len(self.X))

    @property
    def labeled_mask(self) -> np.ndarray:
        return self.y != UNLABELED

    @property
    def instances(self) -> list[Instance]:
        return [
            Instance(int(i), tuple(float(v) for v in x), None if lab == UNLABELED else int(lab))
            for i, x, lab in zip(self.indices, self.X, self.y)
        ]


def labeled_fraction(window: Window) -> float:
    if len(window) == 0:
        return 0.0
    return float(np.count_nonzero(window.labeled_mask)) / len(window)


class LabelOracle:
    """Holds the hidden ground truth of a stream and accounts for label queries.

    Parameters
    ----------
    budget : float or None
        Fraction of seen instances whose labels may be queried. ``None``
        disables enforcement (the evaluation path).
    """

    def __init__(self, budget: Optional[float] = None):
        if budget is not None and not 0.0 < budget <= 1.0:
            raise ValueError(f"budget must lie in (0, 1], got {budget}")
        self.budget = budget
        self._truth = np.empty(0, dtype=np.int64)
        self._charged = np.empty(0, dtype=bool)
        self.query_count = 0

    @property
    def instances_seen(self) -> int:
        return len(self._truth)

    def register(self, start_index: int, labels) -> None:
        labels = np.asarray(labels, dtype=np.int64)
        if start_index != len(self._truth):
            raise StreamError(
                f"oracle expected index {len(self._truth)}, got {start_index}"
            )
        self._truth = np.concatenate([self._truth, labels])
        self._charged = np.concatenate([self._charged, np.zeros(len(labels), bool)])

    def allowance(self) -> int:
        """Number of further queries the budget permits."""
        if self.budget is None:
            return len(self._truth) - self.query_count
        # rounding guard so that e.g. 0.6 * 1000 does not become 601
        cap = math.ceil(round(self.budget * self.instances_seen, 9))
        return max(0, cap - self.query_count)

    def query(self, indices) -> np.ndarray:
        """Reveal labels, charging each index at most once against the budget."""
        indices = np.asarray(indices, dtype=np.int64)
        new = np.unique(indices[~self._charged[indices]])
        if len(new) > self.allowance():
            raise BudgetExhausted(
                f"{len(new)} queries requested, {self.allowance()} allowed"
            )
        self._charged[new] = True
        self.query_count += len(new)
        return self._truth[indices].copy()

    def truth(self, indices) -> np.ndarray:
        """Ground truth for evaluation; never charged."""
        return self._truth[np.asarray(indices, dtype=np.int64)].copy()


class StreamSource:
    """Base class for sequential, single-consumer instance sources.

    Subclasses implement :meth:`_read`, returning at most ``k`` rows of
    ``(X, y_true)``. ``y_true`` goes to the oracle; the exposed labels are
    decided by :attr:`revealed` (a callable mapping true labels and indices
    to a boolean mask), which defaults to nothing revealed.
    """

    n_features: int
    n_classes: int

    def __init__(self):
        self.position = 0
        self.revealed = None

    def _read(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def read(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        X, y = self._read(k)
        self.position += len(X)
        return X, y

    def __iter__(self) -> Iterator[tuple[np.ndarray, int]]:
        while True:
            X, y = self.read(1024)
            if len(X) == 0:
                return
            yield from zip(X, y.tolist())


def next_window(source: StreamSource, n: int, oracle: Optional[LabelOracle] = None):
    """Pull the next ``n`` instances from ``source``.

    Returns ``None`` at end of stream. Ground truth is registered with
    ``oracle``; labels are exposed on the window only where the source's
    reveal policy says so.
    """
    if n < 1:
        raise ValueError(f"window size must be >= 1, got {n}")
    start = source.position
    X, y_true = source.read(n)
    if len(X) == 0:
        return None
    if oracle is not None:
        oracle.register(start, y_true)
    y = np.full(len(X), UNLABELED, dtype=np.int64)
    if source.revealed is not None:
        mask = np.asarray(source.revealed(y_true, np.arange(start, start + len(X))))
        y[mask] = y_true[mask]
    return Window(start, np.array(X, dtype=float), y)


def iter_windows(source: StreamSource, n: int, oracle: Optional[LabelOracle] = None):
    while (w := next_window(source, n, oracle)) is not None:
        yield w


class ArraySource(StreamSource):
    """In-memory source over fixed arrays."""

    def __init__(self, X, y, n_classes: Optional[int] = None):
        super().__init__()
        self._X = np.asarray(X, dtype=float)
        self._y = np.asarray(y, dtype=np.int64)
        if self._X.ndim != 2 or len(self._X) != len(self._y):
            raise StreamError("X must be 2-D and aligned with y")
        if not np.all(np.isfinite(self._X)):
            raise StreamError("features must be finite")
        self.n_features = self._X.shape[1]
        self.n_classes = n_classes if n_classes is not None else int(self._y.max(initial=0)) + 1

    def __len__(self) -> int:
        return len(self._X)

    def _read(self, k):
        s = slice(self.position, self.position + k)
        return self._X[s], self._y[s]


@dataclass(frozen=True)
class CsvSchema:
    """Column layout of a dataset file: numeric features then ``label``."""

    feature_names: Sequence[str]
    label_column: str = "label"
    classes: Optional[Sequence[int]] = field(default=None)

    @property
    def header(self) -> list[str]:
        return [*self.feature_names, self.label_column]


def read_csv_stream(path, schema: Optional[CsvSchema] = None) -> ArraySource:
    """Parse a dataset CSV into a source.

    When ``schema`` is omitted it is inferred from the header. Errors name
    the offending (1-based, header = row 1) row number.
    """
    path = Path(path)
    if not path.exists():
        raise StreamError(f"dataset file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise StreamError(f"{path}: empty file (no header row)") from None
        header = [h.strip() for h in header]
        if schema is None:
            if not header or header[-1] != "label":
                raise StreamError(f"{path}: last header column must be 'label'")
            schema = CsvSchema(header[:-1])
        elif header != schema.header:
            raise StreamError(f"{path}: header {header} does not match {schema.header}")
        d = len(schema.feature_names)
        allowed = None if schema.classes is None else set(schema.classes)
        rows, labels = [], []
        for rownum, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 1:
                raise StreamError(f"{path}: row {rownum}: expected {d + 1} fields, got {len(row)}")
            try:
                feats = [float(v) for v in row[:d]]
            except ValueError:
                raise StreamError(f"{path}: row {rownum}: non-numeric feature value") from None
            if not all(math.isfinite(v) for v in feats):
                raise StreamError(f"{path}: row {rownum}: non-finite feature value")
            try:
                lab = int(row[d])
            except ValueError:
                raise StreamError(f"{path}: row {rownum}: label {row[d]!r} is not an integer") from None
            if lab < 0 or (allowed is not None and lab not in allowed):
                raise StreamError(f"{path}: row {rownum}: unknown label value {lab}")
            rows.append(feats)
            labels.append(lab)
    X = np.array(rows, dtype=float).reshape(len(rows), d)
    n_classes = (max(schema.classes) + 1) if schema.classes else None
    src = ArraySource(X, np.array(labels, dtype=np.int64), n_classes=n_classes)
    src.feature_names = list(schema.feature_names)
    return src


def write_csv(path, X, y, feature_names: Optional[Sequence[str]] = None) -> Path:
    path = Path(path)
    X = np.asarray(X, dtype=float)
    names = list(feature_names) if feature_names else [f"x{i + 1}" for i in range(X.shape[1])]
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*names, "label"])
        for row, lab in zip(X.tolist(), np.asarray(y).tolist()):
            w.writerow([repr(v) for v in row] + [int(lab)])
    return path
