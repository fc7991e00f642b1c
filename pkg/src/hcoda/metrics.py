"""Outlier-detection precision and matched community-assignment accuracy."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment


def od_accuracy(predicted, true) -> float:
    """Fraction of predicted outliers that are true outliers.

    An empty prediction scores 1.0 against an empty truth and 0.0 otherwise.
    """
    predicted, true = set(np.ravel(predicted).tolist()), set(np.ravel(true).tolist())
    if not predicted:
        return 1.0 if not true else 0.0
    return len(predicted & true) / len(predicted)


def confusion(predicted, true) -> np.ndarray:
    """Counts indexed [predicted community - 1, true community - 1], labels >= 1 only."""
    predicted = np.asarray(predicted, dtype=np.int64)
    true = np.asarray(true, dtype=np.int64)
    size = int(max(predicted.max(initial=0), true.max(initial=0), 1))
    mat = np.zeros((size, size))
    keep = (predicted > 0) & (true > 0)
    np.add.at(mat, (predicted[keep] - 1, true[keep] - 1), 1.0)
    return mat


def ca_accuracy(predicted, true) -> float:
    """Best one-to-one matching accuracy over nodes whose true label is nonzero.

    Predicted label 0 (an outlier call) never matches.  Different numbers of
    predicted and true communities are handled by zero padding.
    """
    predicted = np.asarray(predicted, dtype=np.int64)
    true = np.asarray(true, dtype=np.int64)
    if predicted.shape != true.shape:
        raise ValueError("label vectors differ in length")
    normal = np.count_nonzero(true > 0)
    if normal == 0:
        return 1.0
    mat = confusion(predicted, true)
    rows, cols = linear_sum_assignment(-mat)
    return float(mat[rows, cols].sum() / normal)
