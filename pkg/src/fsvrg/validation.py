"""Input validation helpers for the estimator layer."""

from __future__ import annotations

import numpy as np

from .errors import InvalidDataError, LabelError


def check_feature_matrix(X) -> np.ndarray:
    """Coerce X to a finite, 2-d float64 array."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise InvalidDataError(f"X must be 2-d, got ndim={X.ndim}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise InvalidDataError(f"X must be non-empty, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidDataError("X contains non-finite values")
    return X


def check_target(y, n_samples: int) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != n_samples:
        raise InvalidDataError(
            f"y has {y.shape[0]} entries but X has {n_samples} rows"
        )
    if not np.all(np.isfinite(y)):
        raise InvalidDataError("y contains non-finite values")
    return y


def check_binary_labels(y, n_samples: int):
    """Validate a two-class target; returns (labels in {-1,+1}, sorted classes)."""
    y = np.asarray(y).ravel()
    if y.shape[0] != n_samples:
        raise LabelError(f"y has {y.shape[0]} entries but X has {n_samples} rows")
    classes = np.unique(y)
    if classes.shape[0] != 2:
        raise LabelError(
            f"expected exactly 2 classes, found {classes.shape[0]}"
        )
    pm1 = np.where(y == classes[1], 1.0, -1.0)
    return pm1, classes
