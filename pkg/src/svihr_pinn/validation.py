"""Input validation helpers for the estimator classes."""

import numpy as np
from sklearn.utils.validation import check_array, check_consistent_length

from .errors import DataFormatError


def check_weeks(X):
    """Accept ``(n,)`` or ``(n, 1)`` week indices; return a 1-D float array."""
    X = check_array(X, ensure_2d=False, dtype=float)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"expected a single time column, got shape {X.shape}")
        X = X[:, 0]
    return X


def check_compartments(y, n_rows=None):
    """``(n, 5)`` nonnegative finite compartment table."""
    y = check_array(y, dtype=float)
    if y.shape[1] != 5:
        raise ValueError(f"expected 5 compartment columns (S, V, I, H, R), got {y.shape[1]}")
    if np.any(y < 0):
        raise DataFormatError("negative value")
    if n_rows is not None:
        check_consistent_length(np.empty(n_rows), y)
    return y


def check_consecutive(weeks):
    """Weeks must be integers increasing by exactly one."""
    if not np.all(np.equal(np.mod(weeks, 1), 0)):
        raise DataFormatError("weeks must be integers")
    order = np.argsort(weeks, kind="stable")
    w = weeks[order]
    if w.size > 1 and np.any(np.diff(w) != 1):
        raise DataFormatError("weeks must be consecutive")
    return order
