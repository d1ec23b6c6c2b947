"""Input validation helpers shared by the estimators."""

import numpy as np


def check_feature_matrix(X, dim=None):
    """Coerce X to a 2-D float64 array of finite features.

    A single vector is promoted to one row. If `dim` is given the
    feature count must match it.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D feature matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("feature matrix contains non-finite values")
    if dim is not None and X.shape[1] != dim:
        raise ValueError(f"expected {dim} features, got {X.shape[1]}")
    return X


def check_image_batch(X, shape=None):
    """Coerce X to a 4-D (N, C, H, W) float64 array of finite pixels."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 3:
        X = X[None, ...]
    if X.ndim != 4:
        raise ValueError(f"expected images shaped (N, C, H, W), got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("image batch contains non-finite values")
    if shape is not None and tuple(X.shape[1:]) != tuple(shape):
        raise ValueError(f"expected image shape {tuple(shape)}, got {tuple(X.shape[1:])}")
    return X


def check_labels(y, n, n_classes=None):
    """Coerce y to an int64 vector of length n, bounded by n_classes."""
    y = np.asarray(y)
    if y.ndim == 0:
        y = y[None]
    y = y.astype(np.int64, copy=False).ravel()
    if y.shape[0] != n:
        raise ValueError(f"got {y.shape[0]} labels for {n} examples")
    if y.size and y.min() < 0:
        raise ValueError("labels must be non-negative")
    if n_classes is not None and y.size and y.max() >= n_classes:
        raise ValueError(f"label {y.max()} out of range for {n_classes} classes")
    return y


def resolve_classes(classes, y):
    """Resolve the class count from an explicit `classes` argument or labels.

    `classes` may be an integer class count or an iterable of the class
    indices 0..C-1 (the sklearn `partial_fit` convention).
    """
    if classes is None:
        raise ValueError("classes must be given on the first partial_fit call")
    if np.isscalar(classes):
        n_classes = int(classes)
    else:
        arr = np.asarray(classes)
        if not np.array_equal(arr, np.arange(arr.size)):
            raise ValueError("classes must be the contiguous integers 0..C-1")
        n_classes = int(arr.size)
    if n_classes < 1:
        raise ValueError("need at least one class")
    return n_classes
