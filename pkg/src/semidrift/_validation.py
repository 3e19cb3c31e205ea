"""Input validation shared by the estimators."""

import numpy as np
from sklearn.utils.validation import check_array


def check_features(X) -> np.ndarray:
    return check_array(X, dtype=np.float64, ensure_all_finite=True, ensure_min_samples=0)


def check_labels(y, n: int) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1 or len(y) != n:
        raise ValueError(f"labels must be 1-D with {n} entries, got shape {y.shape}")
    if len(y) and (not np.issubdtype(y.dtype, np.integer) and not np.all(np.mod(y, 1) == 0)):
        raise ValueError("labels must be integer class ids")
    y = y.astype(np.int64)
    if len(y) and y.min() < 0:
        raise ValueError("labels must be non-negative")
    return y


def check_fraction(value, name: str, low_open: bool = True) -> float:
    value = float(value)
    ok = (0.0 < value <= 1.0) if low_open else (0.0 <= value <= 1.0)
    if not ok:
        raise ValueError(f"{name} must lie in {'(0, 1]' if low_open else '[0, 1]'}, got {value}")
    return value
