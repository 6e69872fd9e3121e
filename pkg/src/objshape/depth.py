"""Metric lens depth and simple outlier labelling rules."""

from __future__ import annotations

import math

import numpy as np

from .metrics import DistanceMatrix

__all__ = ["depth_outlier_labels", "f1_score", "lens_depth", "lens_depth_counts"]


def lens_depth_counts(D) -> np.ndarray:
    """Number of pairs ``{j, k}`` (both != i) whose open lens contains ``i``.

    Point ``i`` lies in the lens of ``(j, k)`` when
    ``max(d_ij, d_ik) < d_jk``.
    """
    d = np.asarray(D.values if isinstance(D, DistanceMatrix) else D, dtype=float)
    n = d.shape[0]
    upper = np.triu(np.ones((n, n), dtype=bool), 1)
    counts = np.zeros(n, dtype=np.int64)
    for i in range(n):
        inside = np.maximum(d[i][:, None], d[i][None, :]) < d
        inside &= upper
        inside[i, :] = False
        inside[:, i] = False
        counts[i] = np.count_nonzero(inside)
    return counts


def lens_depth(D) -> np.ndarray:
    """Lens depth of every observation, normalized by ``C(n-1, 2)``."""
    d = np.asarray(D.values if isinstance(D, DistanceMatrix) else D, dtype=float)
    n = d.shape[0]
    if n < 3:
        raise ValueError("lens depth needs at least three observations")
    return lens_depth_counts(d) / math.comb(n - 1, 2)


def depth_outlier_labels(depths, mode: str = "jump", k: int | None = None) -> set:
    """Label low-depth observations as outliers.

    ``mode="oracle"`` returns the ``k`` smallest depths (ties to the smaller
    index). ``mode="jump"`` sorts depths increasingly and returns every
    observation before the largest gap between consecutive values.
    """
    dep = np.asarray(depths, dtype=float)
    n = dep.size
    order = np.argsort(dep, kind="stable")
    if mode == "oracle":
        if k is None or not 1 <= k < n:
            raise ValueError("oracle mode needs 1 <= k < n")
        return {int(i) for i in order[:k]}
    if mode != "jump":
        raise ValueError("mode must be 'oracle' or 'jump'")
    gaps = np.diff(dep[order])
    if gaps.size == 0 or gaps.max() <= 0:
        return set()
    cut = int(np.argmax(gaps)) + 1
    return {int(i) for i in order[:cut]}


def f1_score(predicted, truth) -> float:
    """Harmonic mean of precision and recall of ``predicted`` against ``truth``."""
    pred, true = set(predicted), set(truth)
    if not true:
        raise ValueError("truth set must be nonempty")
    hits = len(pred & true)
    if hits == 0:
        return 0.0
    precision = hits / len(pred)
    recall = hits / len(true)
    return 2 * precision * recall / (precision + recall)
