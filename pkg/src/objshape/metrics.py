"""Metrics, point ingestion and distance matrices.

Every statistic in this package sees the data only through a
:class:`DistanceMatrix`. The helpers here turn raw observations of the
supported spaces into such a matrix:

* ``euclidean`` / ``manhattan`` -- vectors in R^p
* ``circle_chord`` -- angles with ``d(x, y) = sqrt(1 - cos(x - y))``
* ``aitchison`` -- compositions on the open simplex
* ``discrete`` -- category labels with ``d(i, j) = 1 - I(i == j)``
* ``spd_affine`` -- 3x3 SPD matrices with the affine invariant metric
* ``precomputed`` -- a user supplied distance matrix
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist, squareform

__all__ = [
    "Metric",
    "DistanceMatrix",
    "MetricReport",
    "as_points",
    "clr",
    "distance",
    "distance_matrix",
    "spd_affine_distance",
    "spd_from_upper",
    "spd_to_upper",
    "validate_metric",
]

TWO_PI = 2.0 * np.pi
COMPOSITION_TOL = 1e-9


class Metric(str, enum.Enum):
    EUCLIDEAN = "euclidean"
    MANHATTAN = "manhattan"
    CIRCLE = "circle_chord"
    AITCHISON = "aitchison"
    DISCRETE = "discrete"
    SPD = "spd_affine"
    PRECOMPUTED = "precomputed"

    @classmethod
    def parse(cls, name: "str | Metric") -> "Metric":
        """Accept enum members, canonical names and the short CLI aliases."""
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower()
        aliases = {"circle": cls.CIRCLE, "spd": cls.SPD, "l1": cls.MANHATTAN}
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            valid = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown metric {name!r}; expected one of {valid}") from None


class DistanceMatrix:
    """Immutable symmetric matrix of pairwise distances.

    The diagonal is exactly zero, the matrix is exactly symmetric and all
    entries are nonnegative; these are checked on construction. The
    triangle inequality is *not* checked here (it costs O(n^3)); use
    :func:`validate_metric` for that.
    """

    __slots__ = ("_values",)

    def __init__(self, values, *, check: bool = True):
        arr = np.array(values, dtype=float, copy=True)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"distance matrix must be square, got shape {arr.shape}")
        if check:
            if not np.all(np.isfinite(arr)):
                raise ValueError("distance matrix contains non-finite entries")
            if np.any(np.diag(arr) != 0.0):
                raise ValueError("distance matrix must have an exactly zero diagonal")
            if not np.array_equal(arr, arr.T):
                raise ValueError("distance matrix must be exactly symmetric")
            if np.any(arr < 0):
                raise ValueError("distance matrix has negative entries")
        arr.setflags(write=False)
        self._values = arr

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def n(self) -> int:
        return self._values.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._values
        return self._values.astype(dtype)

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"DistanceMatrix(n={self.n})"

    def subset(self, indices) -> "DistanceMatrix":
        idx = np.asarray(indices, dtype=int)
        return DistanceMatrix(self._values[np.ix_(idx, idx)], check=False)

    @classmethod
    def coerce(cls, D) -> "DistanceMatrix":
        return D if isinstance(D, cls) else cls(D)


# -- point ingestion ---------------------------------------------------------


def spd_from_upper(upper) -> np.ndarray:
    """Build 3x3 symmetric matrices from rows ``a11, a12, a13, a22, a23, a33``."""
    u = np.asarray(upper, dtype=float)
    single = u.ndim == 1
    u = np.atleast_2d(u)
    if u.shape[-1] != 6:
        raise ValueError("spd3 points need 6 upper-triangle entries per row")
    out = np.empty((u.shape[0], 3, 3))
    rows, cols = np.triu_indices(3)
    out[:, rows, cols] = u
    out[:, cols, rows] = u
    return out[0] if single else out


def spd_to_upper(mats) -> np.ndarray:
    m = np.asarray(mats, dtype=float)
    rows, cols = np.triu_indices(3)
    return m[..., rows, cols]


def _check_spd(mats: np.ndarray) -> np.ndarray:
    mats = np.asarray(mats, dtype=float)
    if mats.shape[-2:] != (3, 3):
        raise ValueError(f"spd3 points must be 3x3 matrices, got shape {mats.shape}")
    if not np.allclose(mats, np.swapaxes(mats, -1, -2), rtol=1e-12, atol=1e-14):
        raise ValueError("spd3 matrix is not symmetric")
    mats = 0.5 * (mats + np.swapaxes(mats, -1, -2))
    eig = np.linalg.eigvalsh(mats)
    scale = np.max(np.abs(eig), axis=-1)
    if np.any(eig[..., 0] <= 1e-14 * np.maximum(scale, 1e-300)):
        raise ValueError("spd3 matrix is not positive definite")
    return mats


def _check_composition(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] < 2:
        raise ValueError("compositions need at least 2 parts")
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise ValueError("composition entries must be strictly positive")
    return x / x.sum(axis=-1, keepdims=True)


def as_points(data, metric) -> np.ndarray:
    """Validate and normalize a sample for ``metric``.

    Returns an array whose first axis indexes observations: ``(n, p)`` for
    vectors and compositions, ``(n,)`` for angles and categories and
    ``(n, 3, 3)`` for SPD matrices (``(n, 6)`` upper-triangle rows are
    accepted). Compositions are rescaled to sum to one and angles reduced
    to ``[0, 2*pi)``.
    """
    metric = Metric.parse(metric)
    if metric is Metric.PRECOMPUTED:
        raise ValueError("precomputed metric takes a distance matrix, not points")
    arr = np.asarray(data)
    if metric in (Metric.EUCLIDEAN, Metric.MANHATTAN):
        arr = np.asarray(arr, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[1] < 1:
            raise ValueError("vector points must form an (n, p) array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("vector points contain non-finite values")
        return arr
    if metric is Metric.CIRCLE:
        arr = np.asarray(arr, dtype=float).reshape(-1)
        if not np.all(np.isfinite(arr)):
            raise ValueError("angles contain non-finite values")
        return np.mod(arr, TWO_PI)
    if metric is Metric.AITCHISON:
        arr = np.asarray(arr, dtype=float)
        if arr.ndim != 2:
            raise ValueError("compositions must form an (n, p) array")
        return _check_composition(arr)
    if metric is Metric.DISCRETE:
        arr = np.asarray(arr).reshape(-1)
        as_int = arr.astype(np.int64)
        if not np.array_equal(as_int, arr):
            raise ValueError("categories must be integers")
        if np.any(as_int < 1):
            raise ValueError("categories must be labelled 1..p")
        return as_int
    # SPD
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 6:
        arr = spd_from_upper(arr)
    if arr.ndim != 3:
        raise ValueError("spd3 sample must be (n, 3, 3) matrices or (n, 6) upper-triangle rows")
    return _check_spd(arr)


# -- pointwise distances -----------------------------------------------------


def clr(x) -> np.ndarray:
    """Centered logratio transform of a composition (or rows of compositions)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("clr needs strictly positive entries")
    logx = np.log(x)
    return logx - logx.mean(axis=-1, keepdims=True)


def spd_affine_distance(A, B) -> float:
    """Affine invariant distance ``||log(A^{-1/2} B A^{-1/2})||_F``.

    The generalized eigenvalues of ``(B, A)`` are obtained from the
    symmetric matrix ``L^{-1} B L^{-T}`` where ``L`` is the Cholesky factor
    of ``A``.
    """
    A = _check_spd(A)
    B = _check_spd(B)
    if A is B or np.array_equal(A, B):
        return 0.0
    L_inv = np.linalg.inv(np.linalg.cholesky(A))
    C = L_inv @ B @ L_inv.T
    lam = np.linalg.eigvalsh(0.5 * (C + C.T))
    if np.any(lam <= 0):
        raise ValueError("spd3 matrix is not positive definite")
    return float(np.sqrt(np.sum(np.log(lam) ** 2)))


def _aitchison_pair(x: np.ndarray, y: np.ndarray) -> float:
    lx, ly = np.log(x), np.log(y)
    diff = (lx[:, None] - lx[None, :]) - (ly[:, None] - ly[None, :])
    d2 = np.sum(diff**2) / (2.0 * x.shape[0])
    return float(np.sqrt(max(d2, 0.0)))


def distance(metric, x, y) -> float:
    """Distance between two points of the same space."""
    metric = Metric.parse(metric)
    if metric is Metric.PRECOMPUTED:
        raise ValueError("precomputed metric has no pointwise distance")
    if metric is Metric.SPD:
        x = spd_from_upper(x) if np.shape(x) == (6,) else x
        y = spd_from_upper(y) if np.shape(y) == (6,) else y
        return spd_affine_distance(x, y)
    if metric is Metric.CIRCLE:
        if np.ndim(x) != 0 or np.ndim(y) != 0:
            raise ValueError("circle_chord points are scalar angles")
        a, b = float(x) % TWO_PI, float(y) % TWO_PI
        return float(np.sqrt(np.clip(1.0 - np.cos(a - b), 0.0, 2.0)))
    if metric is Metric.DISCRETE:
        if np.ndim(x) != 0 or np.ndim(y) != 0:
            raise ValueError("discrete points are scalar category labels")
        return 0.0 if int(x) == int(y) else 1.0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise ValueError(f"point shapes differ: {x.shape} vs {y.shape}")
    if metric is Metric.EUCLIDEAN:
        return float(np.sqrt(np.sum((x - y) ** 2)))
    if metric is Metric.MANHATTAN:
        return float(np.sum(np.abs(x - y)))
    return _aitchison_pair(_check_composition(x), _check_composition(y))


# -- matrices ----------------------------------------------------------------


def _spd_matrix(mats: np.ndarray) -> np.ndarray:
    n = mats.shape[0]
    L_inv = np.linalg.inv(np.linalg.cholesky(mats))
    iu, ju = np.triu_indices(n, 1)
    C = L_inv[iu] @ mats[ju] @ np.swapaxes(L_inv[iu], -1, -2)
    lam = np.linalg.eigvalsh(0.5 * (C + np.swapaxes(C, -1, -2)))
    if np.any(lam <= 0):
        raise ValueError("spd3 matrix is not positive definite")
    out = np.zeros((n, n))
    vals = np.sqrt(np.sum(np.log(lam) ** 2, axis=-1))
    same = np.all(mats[iu] == mats[ju], axis=(-1, -2))
    vals[same] = 0.0
    out[iu, ju] = vals
    out[ju, iu] = vals
    return out


def _aitchison_matrix(comps: np.ndarray) -> np.ndarray:
    # the double log-ratio sum equals the squared Euclidean distance of clr images
    return squareform(pdist(clr(comps), "euclidean"))


def distance_matrix(points, metric) -> DistanceMatrix:
    """Pairwise distance matrix of a sample.

    ``points`` is anything :func:`as_points` accepts for ``metric``; for the
    ``precomputed`` metric it must already be a square distance matrix.
    """
    metric = Metric.parse(metric)
    if metric is Metric.PRECOMPUTED:
        return DistanceMatrix.coerce(points)
    pts = as_points(points, metric)
    n = pts.shape[0]
    if n < 2:
        raise ValueError("need at least two points")
    if metric is Metric.EUCLIDEAN:
        out = squareform(pdist(pts, "euclidean"))
    elif metric is Metric.MANHATTAN:
        out = squareform(pdist(pts, "cityblock"))
    elif metric is Metric.CIRCLE:
        diff = pts[:, None] - pts[None, :]
        out = np.sqrt(np.clip(1.0 - np.cos(diff), 0.0, 2.0))
        out = np.triu(out, 1)
        out = out + out.T
    elif metric is Metric.DISCRETE:
        out = (pts[:, None] != pts[None, :]).astype(float)
    elif metric is Metric.AITCHISON:
        out = _aitchison_matrix(pts)
    else:
        out = _spd_matrix(pts)
    np.fill_diagonal(out, 0.0)
    return DistanceMatrix(out, check=False)


@dataclass
class MetricReport:
    """Outcome of :func:`validate_metric`; empty lists mean the matrix is valid."""

    tol: float
    asymmetric: list = field(default_factory=list)
    negative: list = field(default_factory=list)
    nonzero_diagonal: list = field(default_factory=list)
    triangle: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.asymmetric or self.negative or self.nonzero_diagonal or self.triangle)

    def __bool__(self) -> bool:
        return self.ok


def validate_metric(D, tol: float | None = None) -> MetricReport:
    """Check the metric axioms on a distance matrix.

    Triangle violations are reported as ``(i, j, k)`` with ``i < k`` whenever
    ``D[i, k] > D[i, j] + D[j, k] + tol``. By default ``tol`` is ``1e-9``
    times the largest entry.
    """
    arr = np.asarray(D.values if isinstance(D, DistanceMatrix) else D, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError("distance matrix must be square")
    scale = float(np.max(np.abs(arr))) if arr.size else 0.0
    if tol is None:
        tol = 1e-9 * scale
    report = MetricReport(tol=tol)
    n = arr.shape[0]
    iu, ju = np.triu_indices(n, 1)
    bad = np.abs(arr[iu, ju] - arr[ju, iu]) > tol
    report.asymmetric = [(int(i), int(j)) for i, j in zip(iu[bad], ju[bad])]
    report.negative = [tuple(map(int, ij)) for ij in np.argwhere(arr < -tol)]
    report.nonzero_diagonal = [int(i) for i in np.flatnonzero(np.abs(np.diag(arr)) > tol)]
    for j in range(n):
        via = arr[:, j][:, None] + arr[j, :][None, :]
        viol = np.argwhere(arr > via + tol)
        for i, k in viol:
            if i < k and i != j and k != j:
                report.triangle.append((int(i), j, int(k)))
    report.triangle.sort()
    return report
