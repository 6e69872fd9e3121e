"""Sample object shape.

For a sample with squared-distance matrix ``B = {d(X_i, X_j)^2}`` the
object shape is

    O_n = (1' B^2 1) / (n ||B||_F^2) = sum_i r_i^2 / (n * sum_ij b_ij^2),

with ``r = B 1`` the row sums. This is the plain V-statistic (repeated
indices included). It lies in ``[1/2, (n-1)/n]`` for any sample from a
metric space: 1/2 for collinear samples, ``(n-1)/n`` for equidistant ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metrics import DistanceMatrix, distance_matrix

__all__ = [
    "DegenerateSampleError",
    "ShapeEstimate",
    "SquaredDistanceMatrix",
    "leave_one_out_shapes",
    "naive_shape",
    "object_shape",
    "sample_shape",
    "square_distances",
]


class DegenerateSampleError(ValueError):
    """All observations coincide, so the object shape is undefined."""


@dataclass(frozen=True)
class SquaredDistanceMatrix:
    b: np.ndarray
    row_sums: np.ndarray
    frob_sq: float

    @property
    def n(self) -> int:
        return self.b.shape[0]

    def check_consistency(self, rtol: float = 1e-9) -> None:
        """Recompute the cached aggregates and compare (debug/test aid)."""
        r = self.b.sum(axis=1)
        f = float(np.sum(self.b**2))
        if not np.allclose(r, self.row_sums, rtol=rtol, atol=0.0):
            raise AssertionError("cached row sums are stale")
        if not np.isclose(f, self.frob_sq, rtol=rtol, atol=0.0):
            raise AssertionError("cached Frobenius aggregate is stale")


@dataclass(frozen=True)
class ShapeEstimate:
    """Sample object shape with its two moment aggregates.

    ``numerator`` is ``1'B^2 1 / n^3`` and ``denominator`` is
    ``||B||^2 / n^2``; ``value`` is their ratio.
    """

    value: float
    numerator: float
    denominator: float
    n: int

    def __float__(self) -> float:
        return self.value

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "shape": self.value,
            "numerator": self.numerator,
            "denominator": self.denominator,
        }


def square_distances(D) -> SquaredDistanceMatrix:
    """Elementwise square of ``D`` plus cached row sums and ``||B||^2``."""
    d = np.asarray(D.values if isinstance(D, DistanceMatrix) else D, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError("distance matrix must be square")
    if d.shape[0] < 2:
        raise ValueError("need at least two observations")
    b = d * d
    # all terms are nonnegative, so plain (pairwise) summation has no cancellation
    row_sums = b.sum(axis=1)
    frob_sq = float(np.sum(b * b))
    b.setflags(write=False)
    row_sums.setflags(write=False)
    return SquaredDistanceMatrix(b=b, row_sums=row_sums, frob_sq=frob_sq)


def object_shape(B: SquaredDistanceMatrix) -> ShapeEstimate:
    """Sample object shape from a squared-distance matrix."""
    if not isinstance(B, SquaredDistanceMatrix):
        B = square_distances(B)
    n = B.n
    if not B.frob_sq > 0.0:
        raise DegenerateSampleError("all observations are identical; object shape undefined")
    num = float(np.dot(B.row_sums, B.row_sums))
    numerator = num / n**3
    denominator = B.frob_sq / n**2
    value = num / (n * B.frob_sq)
    return ShapeEstimate(value=value, numerator=numerator, denominator=denominator, n=n)


def sample_shape(data, metric=None) -> ShapeEstimate:
    """Object shape of raw points (given ``metric``) or of a distance matrix."""
    if metric is None:
        D = DistanceMatrix.coerce(data)
    else:
        D = distance_matrix(data, metric)
    return object_shape(square_distances(D))


def naive_shape(D) -> float:
    """Triple-sum evaluation of the estimator; O(n^3), for checking only."""
    d = np.asarray(D, dtype=float)
    n = d.shape[0]
    b = d**2
    num = 0.0
    for i in range(n):
        num += np.sum(np.outer(b[i], b[i]))
    den = float(np.sum(b**2))
    if den == 0.0:
        raise DegenerateSampleError("all observations are identical; object shape undefined")
    return (num / n**3) / (den / n**2)


def _exclusive_row_sums(x: np.ndarray) -> np.ndarray:
    """``out[j, i] = sum_{k != i} x[j, k]`` from prefix and suffix sums.

    Entries are nonnegative here, so nothing cancels even when one term
    dwarfs the rest of its row (a far outlier).
    """
    out = np.zeros_like(x)
    np.cumsum(x[:, :-1], axis=1, out=out[:, 1:])
    out[:, :-1] += np.cumsum(x[:, :0:-1], axis=1)[:, ::-1]
    return out


def _loo_values(b: np.ndarray, m: int) -> np.ndarray:
    """Leave-one-out shapes for every row of ``b`` (removed rows/columns zeroed).

    ``m`` is the current sample size. Entries whose removal would leave only
    coincident points are NaN.
    """
    # column i of rex holds the row sums of the sample without observation i
    rex = _exclusive_row_sums(b)
    np.fill_diagonal(rex, 0.0)
    qex = _exclusive_row_sums(b * b)
    np.fill_diagonal(qex, 0.0)
    num = np.einsum("ji,ji->i", rex, rex)
    frob_new = qex.sum(axis=0)
    vals = np.full(b.shape[0], np.nan)
    ok = frob_new > 0.0
    vals[ok] = num[ok] / ((m - 1) * frob_new[ok])
    return vals


def leave_one_out_shapes(B: SquaredDistanceMatrix) -> np.ndarray:
    """Object shape of the sample with each observation removed in turn.

    Uses ``r'_j = sum_{k != i} b_jk`` and ``||B'||^2 = sum_{j != i} sum_{k != i}
    b_jk^2``, both read off prefix/suffix sums, so the whole vector costs
    O(n^2) with no subtractive updates. Entries are NaN where the remaining
    observations all coincide.
    """
    if not isinstance(B, SquaredDistanceMatrix):
        B = square_distances(B)
    n = B.n
    if n < 3:
        raise ValueError("leave-one-out shapes need at least three observations")
    return _loo_values(np.asarray(B.b, dtype=float), n)
