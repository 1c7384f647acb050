"""Input validation helpers shared by the estimator wrappers."""

from __future__ import annotations

import numpy as np


def check_feature_matrix(X) -> np.ndarray:
    """Coerce to a finite 2-D float64 matrix."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D sample matrix, got shape {X.shape}")
    if X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError(f"empty sample matrix {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("sample matrix contains non-finite values")
    return X


def check_binary_labels(y, n_samples: int) -> np.ndarray:
    y = np.asarray(y)
    if y.shape != (n_samples,):
        raise ValueError(f"labels shape {y.shape} mismatches {n_samples} samples")
    y = y.astype(np.intp)
    if not set(np.unique(y)) <= {0, 1}:
        raise ValueError(f"labels must be 0 (normal) or 1 (breakage), got {np.unique(y)}")
    return y


def infer_real_lengths(X: np.ndarray) -> np.ndarray:
    """Length of each row's leading non-pad region.

    Trailing exact zeros are treated as padding; raw current statistics
    are positive on any live signal, so an all-zero tail is unambiguous.
    """
    nonzero = X != 0.0
    reversed_any = np.cumsum(nonzero[:, ::-1], axis=1) > 0
    lengths = reversed_any.sum(axis=1)
    return np.maximum(lengths, 1).astype(np.intp)
