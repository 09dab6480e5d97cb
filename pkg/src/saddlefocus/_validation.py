"""Input checks shared by the estimator wrappers."""
from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array, check_is_fitted

__all__ = ["check_points", "check_fitted"]


def check_points(X, n_features: int = 2, name: str = "X") -> np.ndarray:
    """2D float array of shape (n, n_features) with finite entries."""
    X = check_array(X, dtype=np.float64, ensure_2d=True, ensure_all_finite=True,
                    input_name=name)
    if X.shape[1] != n_features:
        raise ValueError(f"{name} must have {n_features} columns, got {X.shape[1]}")
    return X


def check_fitted(est, attr: str = "config_"):
    check_is_fitted(est, attr)
