"""Tests of maximal symmetry built on the sample object shape.

Each family attains its largest object shape at the symmetric model, so all
four tests reject for *small* sample shapes (one-sided):

=================================  ======================================
test                               null limit of the statistic
=================================  ======================================
:func:`sphericity_test`            sqrt(n)(u_R - O_n) -> N(0, sigma_R^2)
:func:`circular_uniformity_test`   n(2/3 - O_n) -> (2/9)E_1 + (1/9)E_2
:func:`compositional_symmetry_test` sqrt(n)((2p-1)/(2p+2) - O_n) -> normal
:func:`discrete_uniformity_test`   scaled n(1 - 1/p - O_n) -> chi2_{p-1}
=================================  ======================================

Note the different rates: the circular statistic is scaled by ``n``, the
elliptical and compositional ones by ``sqrt(n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .metrics import Metric, distance_matrix
from .population import elliptical_upper_bound
from .shape import DegenerateSampleError, object_shape, square_distances

__all__ = [
    "MIN_N",
    "NullDistribution",
    "RadialMoments",
    "TestResult",
    "chi2_survival",
    "circular_uniformity_test",
    "compositional_symmetry_test",
    "discrete_shape_from_counts",
    "discrete_uniformity_test",
    "exp_mixture_survival",
    "pearson_chi2",
    "sphericity_sigma2",
    "sphericity_test",
]

MIN_N = 20
SCHEMA = "objshape.test/1"


class InvalidRegimeError(ValueError):
    """The test is not defined for the requested dimension or sample."""


@dataclass(frozen=True)
class NullDistribution:
    """Asymptotic null law of a test statistic.

    ``kind`` is ``"normal"`` (``params = {"mean": 0, "variance": s2}``),
    ``"weighted_exp_mixture"`` (``{"a": a, "b": b}``, the law of
    ``a E1 + b E2`` with unit exponentials) or ``"chi_squared"``
    (``{"df": k}``). ``rate`` records how the statistic is scaled in n.
    """

    kind: str
    params: dict
    rate: str

    def sf(self, x: float) -> float:
        if self.kind == "normal":
            return float(special.ndtr(-x / math.sqrt(self.params["variance"])))
        if self.kind == "weighted_exp_mixture":
            return exp_mixture_survival(max(x, 0.0), self.params["a"], self.params["b"])
        if self.kind == "chi_squared":
            return chi2_survival(max(x, 0.0), self.params["df"])
        raise ValueError(f"unknown null distribution {self.kind!r}")

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return 1.0 - np.vectorize(self.sf)(x)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "rate": self.rate, **self.params}


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # keep pytest from collecting this class

    test: str
    statistic: float
    null: NullDistribution
    p_value: float
    n: int
    p: int
    shape: float
    alpha: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def reject(self) -> bool | None:
        if self.alpha is None:
            return None
        return self.p_value < self.alpha

    def to_dict(self) -> dict:
        out = {
            "schema": SCHEMA,
            "test": self.test,
            "n": self.n,
            "p": self.p,
            "shape": self.shape,
            "statistic": self.statistic,
            "null": self.null.to_dict(),
            "p_value": self.p_value,
        }
        if self.alpha is not None:
            out["alpha"] = self.alpha
            out["reject"] = self.reject
        out.update(self.extra)
        return out


@dataclass(frozen=True)
class RadialMoments:
    """Radial moments ``q_r = E(R^r)`` for r = 2, 4, 6, 8."""

    q2: float
    q4: float
    q6: float
    q8: float

    def __post_init__(self):
        if min(self.q2, self.q4, self.q6, self.q8) <= 0:
            raise ValueError("radial moments must be positive")
        tol = 1e-12
        if self.q4 < self.q2**2 * (1 - tol) or self.q8 < self.q4**2 * (1 - tol):
            raise ValueError("radial moments violate Cauchy-Schwarz")

    @classmethod
    def gaussian(cls, p: int) -> "RadialMoments":
        """Moments of ``R^2 ~ chi2_p``: ``E R^{2k} = p (p+2) ... (p+2k-2)``."""
        q = [1.0]
        for k in range(4):
            q.append(q[-1] * (p + 2 * k))
        return cls(q[1], q[2], q[3], q[4])

    @classmethod
    def dirac(cls, r: float = 1.0) -> "RadialMoments":
        return cls(r**2, r**4, r**6, r**8)

    @property
    def beta(self) -> float:
        return self.q4 / self.q2**2


# -- null distribution helpers ----------------------------------------------


def exp_mixture_survival(x: float, a: float, b: float) -> float:
    """``P(a E1 + b E2 > x)`` for independent unit exponentials, ``a > b > 0``."""
    if not a > b > 0:
        raise ValueError("need a > b > 0")
    if x <= 0:
        return 1.0
    return (a * math.exp(-x / a) - b * math.exp(-x / b)) / (a - b)


def chi2_survival(x: float, df: int) -> float:
    """Upper tail of the chi-squared law (regularized upper incomplete gamma)."""
    if df < 1:
        raise ValueError("df must be >= 1")
    if x <= 0:
        return 1.0
    return float(special.gammaincc(0.5 * df, 0.5 * x))


def pearson_chi2(counts) -> float:
    """Pearson's statistic ``sum_i n p (n_i/n - 1/p)^2`` against uniformity."""
    c = np.asarray(counts, dtype=float)
    if c.size == 0:
        raise ValueError("counts must be nonempty")
    if np.any(c < 0):
        raise ValueError("counts must be nonnegative")
    n = c.sum()
    if n < 1:
        raise ValueError("need at least one observation")
    p = c.size
    return float(np.sum(n * p * (c / n - 1.0 / p) ** 2))


def _check_n(n: int, force: bool) -> None:
    if n < MIN_N and not force:
        raise InvalidRegimeError(
            f"n = {n} is below the minimum of {MIN_N} for an asymptotic test "
            "(pass force=True to override)")


def _shape_of(D, estimator: str = "v") -> float:
    """Sample object shape; ``estimator="u"`` drops repeated-index terms.

    The plain estimator carries an O(1/n) bias of about ``-(2 O - 1) / n``,
    which after sqrt(n) scaling still shifts the normal-limit statistics by
    a visible fraction of a standard deviation at n in the hundreds. The
    distinct-index ratio removes that term and has the same limit law.
    """
    B = square_distances(D)
    if estimator == "v":
        return object_shape(B).value
    if estimator != "u":
        raise ValueError("estimator must be 'v' or 'u'")
    n = B.n
    if n < 3:
        raise ValueError("the distinct-index estimator needs n >= 3")
    f = B.frob_sq
    if not f > 0:
        raise DegenerateSampleError("all observations are identical; object shape undefined")
    s = float(np.dot(B.row_sums, B.row_sums))
    return ((s - f) / (n * (n - 1) * (n - 2))) / (f / (n * (n - 1)))


# -- elliptical --------------------------------------------------------------


def sphericity_sigma2(p: int, moments: RadialMoments) -> float:
    """Asymptotic variance of ``sqrt(n) O_n`` under sphericity."""
    q2, q4, q6, q8 = moments.q2, moments.q4, moments.q6, moments.q8
    lead = p**2 * (p - 1) ** 2 * q2**2 / (p * (q4 + q2**2) + 2 * q2**2) ** 4
    core = 4 * q4**2 * (q4 - q2**2) - 4 * q4 * q2 * (q6 - q4 * q2) + q2**2 * (q8 - q4**2)
    return lead * core


def sphericity_test(sample, moments: RadialMoments, alpha: float | None = None,
                    force: bool = False, estimator: str = "u") -> TestResult:
    """Test ``Sigma = lambda I`` for an elliptical sample with known radial law.

    ``estimator="v"`` uses the plain sample shape in the statistic instead of
    the distinct-index version (see :func:`_shape_of`).
    """
    x = np.asarray(sample, dtype=float)
    if x.ndim != 2:
        raise ValueError("sample must be an (n, p) array")
    n, p = x.shape
    if p < 2:
        raise InvalidRegimeError("sphericity is vacuous for p = 1 (u_R = 1/2 for every law)")
    _check_n(n, force)
    s2 = sphericity_sigma2(p, moments)
    if not s2 > 0:
        raise InvalidRegimeError("radial moments give a nonpositive asymptotic variance")
    u = elliptical_upper_bound(p, moments.beta)
    shape = _shape_of(distance_matrix(x, Metric.EUCLIDEAN), estimator)
    stat = math.sqrt(n) * (u - shape)
    null = NullDistribution("normal", {"mean": 0.0, "variance": s2}, rate="sqrt(n)")
    return TestResult("sphericity", stat, null, null.sf(stat), n, p, shape, alpha,
                      extra={"upper_bound": u, "estimator": estimator})


# -- circle ------------------------------------------------------------------

CIRCLE_WEIGHTS = (2.0 / 9.0, 1.0 / 9.0)


def circular_uniformity_test(angles, alpha: float | None = None,
                             force: bool = False) -> TestResult:
    """Test uniformity on the circle with the chord metric ``sqrt(1 - cos)``."""
    a = np.asarray(angles, dtype=float).reshape(-1)
    n = a.size
    _check_n(n, force)
    try:
        shape = _shape_of(distance_matrix(a, Metric.CIRCLE))
    except DegenerateSampleError:
        raise DegenerateSampleError("all angles are identical; object shape undefined") from None
    stat = n * (2.0 / 3.0 - shape)
    wa, wb = CIRCLE_WEIGHTS
    null = NullDistribution("weighted_exp_mixture", {"a": wa, "b": wb}, rate="n")
    return TestResult("circular", stat, null, null.sf(stat), n, 1, shape, alpha)


# -- compositional -----------------------------------------------------------


def compositional_symmetry_test(sample, alpha: float | None = None,
                                force: bool = False, estimator: str = "u") -> TestResult:
    """Test exchangeable dispersion of lognormal-generated compositions."""
    x = np.asarray(sample, dtype=float)
    if x.ndim != 2:
        raise ValueError("sample must be an (n, p) array of compositions")
    n, p = x.shape
    if p <= 2:
        raise InvalidRegimeError(
            "compositional symmetry test needs p >= 3: the null variance "
            "(p-2)^2 / (2 (p+1)^3 (p-1)) vanishes at p = 2")
    _check_n(n, force)
    shape = _shape_of(distance_matrix(x, Metric.AITCHISON), estimator)
    center = (2 * p - 1) / (2 * p + 2)
    var = (p - 2) ** 2 / (2.0 * (p + 1) ** 3 * (p - 1))
    stat = math.sqrt(n) * (center - shape)
    null = NullDistribution("normal", {"mean": 0.0, "variance": var}, rate="sqrt(n)")
    return TestResult("compositional", stat, null, null.sf(stat), n, p, shape, alpha,
                      extra={"upper_bound": center, "estimator": estimator})


# -- discrete ----------------------------------------------------------------


def discrete_shape_from_counts(counts) -> float:
    """Sample object shape under the discrete metric, from category counts.

    With ``b_ij = 1`` for different categories, row sums are ``n - n_c`` and
    ``||B||^2 = n^2 - sum n_c^2``, which gives the estimator exactly.
    """
    c = np.asarray(counts, dtype=float)
    n = c.sum()
    frob = n * n - np.sum(c * c)
    if frob <= 0:
        raise DegenerateSampleError("fewer than two distinct categories observed")
    return float(np.sum(c * (n - c) ** 2) / (n * frob))


def discrete_uniformity_test(counts, alpha: float | None = None,
                             force: bool = False) -> TestResult:
    """Test uniformity of a categorical sample given as category counts."""
    c = np.asarray(counts)
    if c.ndim != 1 or np.any(c < 0) or not np.all(np.equal(np.mod(c, 1), 0)):
        raise ValueError("counts must be a 1-D array of nonnegative integers")
    p = c.size
    if p <= 2:
        raise InvalidRegimeError("discrete uniformity test needs p >= 3 (factor p - 2)")
    n = int(c.sum())
    _check_n(n, force)
    shape = discrete_shape_from_counts(c)
    stat = p * (p - 1) / (p - 2) * n * (1.0 - 1.0 / p - shape)
    null = NullDistribution("chi_squared", {"df": p - 1}, rate="n")
    return TestResult("discrete", stat, null, null.sf(stat), n, p, shape, alpha,
                      extra={"pearson": pearson_chi2(c)})
