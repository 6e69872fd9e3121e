"""Closed-form population object shapes.

Four model families are covered:

* elliptical laws in R^p, through ``(p, beta_R, G)`` where
  ``beta_R = E R^4 / (E R^2)^2`` and ``G = tr(S^2) / tr(S)^2``;
* von Mises laws on the circle with the chord metric ``sqrt(1 - cos)``;
* the log-ratio generated compositions ``mu_j Z_j^theta_j / sum`` with the
  Aitchison metric;
* categorical laws with the discrete metric.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CompositionalParams",
    "DiscreteParams",
    "EllipticalParams",
    "VonMisesParams",
    "bessel_I",
    "bessel_ratios",
    "compositional_shape",
    "compositional_upper_bound",
    "discrete_shape",
    "elliptical_shape",
    "elliptical_upper_bound",
    "radial_beta",
    "vonmises_shape",
]

# series / asymptotic switch for the Bessel functions
BESSEL_SWITCH = 15.0


# -- parameter bundles -------------------------------------------------------


def radial_beta(family: str, p: int, nu: float | None = None) -> float:
    """Kurtosis ratio ``E R^4 / (E R^2)^2`` of named radial laws.

    ``gaussian`` (``R^2 ~ chi2_p``), ``dirac`` (R constant) and ``t`` with
    ``nu > 4`` degrees of freedom.
    """
    family = family.lower()
    if p < 1:
        raise ValueError("p must be at least 1")
    if family in ("gaussian", "normal"):
        return (p + 2) / p
    if family in ("dirac", "uniform_sphere"):
        return 1.0
    if family == "t":
        if nu is None or nu <= 4:
            raise ValueError("the t radial law needs nu > 4 for a finite fourth moment")
        return (p + 2) * (nu - 2) / (p * (nu - 4))
    raise ValueError(f"unknown radial family {family!r}")


@dataclass(frozen=True)
class EllipticalParams:
    p: int
    beta_R: float
    G: float

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be at least 1")
        if self.beta_R < 1:
            raise ValueError("beta_R must be >= 1 (Cauchy-Schwarz)")
        eps = 1e-12
        if not (1.0 / self.p - eps <= self.G <= 1.0 + eps):
            raise ValueError(f"G must lie in [1/p, 1], got {self.G}")

    @classmethod
    def from_covariance(cls, cov, radial: str = "gaussian", nu: float | None = None):
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        p = cov.shape[0]
        tr = np.trace(cov)
        if tr <= 0:
            raise ValueError("scatter matrix must be nonzero")
        G = float(np.trace(cov @ cov) / tr**2)
        return cls(p=p, beta_R=radial_beta(radial, p, nu), G=min(max(G, 1.0 / p), 1.0))


@dataclass(frozen=True)
class VonMisesParams:
    kappa: float

    def __post_init__(self):
        if not self.kappa >= 0:
            raise ValueError("kappa must be >= 0")


@dataclass(frozen=True)
class CompositionalParams:
    p: int
    gamma_Z: float
    theta: tuple

    def __post_init__(self):
        theta = tuple(float(t) for t in self.theta)
        object.__setattr__(self, "theta", theta)
        if self.p < 2:
            raise ValueError("compositions need p >= 2")
        if len(theta) != self.p:
            raise ValueError("theta must have length p")
        if self.gamma_Z < 1:
            raise ValueError("gamma_Z must be >= 1")
        if any(t < 0 for t in theta) or not any(t > 0 for t in theta):
            raise ValueError("theta must be nonnegative and not all zero")

    @property
    def beta(self) -> float:
        th = np.asarray(self.theta)
        psi2 = np.sum(th**2)
        return float(np.sum(th**4) / psi2**2)


@dataclass(frozen=True)
class DiscreteParams:
    theta: tuple

    def __post_init__(self):
        theta = tuple(float(t) for t in self.theta)
        object.__setattr__(self, "theta", theta)
        if len(theta) < 3:
            raise ValueError("the discrete family needs p >= 3 categories")
        if any(t < 0 or t > 1 for t in theta):
            raise ValueError("probabilities must lie in [0, 1]")
        if abs(math.fsum(theta) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to one")
        if sum(t > 0 for t in theta) < 2:
            raise ValueError("need at least two categories with positive probability")

    @property
    def p(self) -> int:
        return len(self.theta)


# -- elliptical --------------------------------------------------------------


def elliptical_shape(params: EllipticalParams) -> float:
    p, beta, G = params.p, params.beta_R, params.G
    gb = p / (p + 2) * beta
    return ((gb + 3.0) + 2.0 * gb * G) / ((2.0 * gb + 2.0) + (4.0 * gb + 4.0) * G)


def elliptical_upper_bound(p: int, beta_R: float) -> float:
    """Maximal object shape of the elliptical family, attained at sphericity."""
    if p < 1:
        raise ValueError("p must be at least 1")
    if beta_R < 1:
        raise ValueError("beta_R must be >= 1")
    return 0.5 + (p - 1) / (p * (beta_R + 1.0) + 2.0)


# -- von Mises ---------------------------------------------------------------


def _bessel_series_scaled(m: int, x: float) -> float:
    # sum_k (x/2)^(2k+m) / (k! (k+m)!) times exp(-x)
    half = 0.5 * x
    term = half**m / math.factorial(m)
    total = term
    q = half * half
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + m))
        total += term
        if term <= 1e-17 * total:
            break
    return total * math.exp(-x)


def _bessel_asymptotic_scaled(m: int, x: float) -> float:
    mu = 4.0 * m * m
    term = 1.0
    total = 1.0
    k = 0
    prev = math.inf
    while True:
        k += 1
        term *= -(mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if term == 0.0 or abs(term) >= prev:
            break
        total += term
        prev = abs(term)
        if prev <= 1e-17 * abs(total):
            break
    return total / math.sqrt(2.0 * math.pi * x)


def bessel_I(m: int, kappa: float, scaled: bool = False) -> float:
    """Modified Bessel function of the first kind ``I_m(kappa)``, m in {0, 1, 2}.

    With ``scaled=True`` returns ``exp(-kappa) I_m(kappa)``, which stays
    finite for large ``kappa``.
    """
    if m not in (0, 1, 2):
        raise ValueError("only orders 0, 1 and 2 are supported")
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    if kappa == 0.0:
        return 1.0 if m == 0 else 0.0
    if kappa <= BESSEL_SWITCH:
        val = _bessel_series_scaled(m, kappa)
    else:
        val = _bessel_asymptotic_scaled(m, kappa)
    if scaled:
        return val
    if kappa > 700:
        raise OverflowError("I_m(kappa) overflows for kappa > 700; use scaled=True")
    return val * math.exp(kappa)


def bessel_ratios(kappa: float) -> tuple[float, float]:
    """``(I_1/I_0, I_2/I_0)`` at ``kappa``."""
    i0 = bessel_I(0, kappa, scaled=True)
    return bessel_I(1, kappa, scaled=True) / i0, bessel_I(2, kappa, scaled=True) / i0


def vonmises_shape(params: VonMisesParams | float) -> float:
    """Object shape of the von Mises law under the chord metric."""
    kappa = params.kappa if isinstance(params, VonMisesParams) else float(params)
    VonMisesParams(kappa)
    if kappa == 0.0:
        return 2.0 / 3.0
    x, y = bessel_ratios(kappa)
    x2 = x * x
    # O - 1/2 = ((1 - y)/2) (1 - 2x^2 + y) / (3 - 4x^2 + y^2)
    return 0.5 + 0.5 * (1.0 - y) * (1.0 - 2.0 * x2 + y) / (3.0 - 4.0 * x2 + y * y)


# -- compositional -----------------------------------------------------------


def compositional_shape(params: CompositionalParams) -> float:
    p, g = params.p, params.gamma_Z
    if p == 2:
        warnings.warn("for p = 2 the compositional family has constant object shape 1/2",
                      stacklevel=2)
    beta = params.beta
    c = (p - 1) ** 2
    num = 4.0 * c * (beta * g - beta + 4.0) - 8.0 * (beta - 1.0)
    den = 8.0 * c * (beta * g + beta + 2.0) - 32.0 * (beta - 1.0)
    return num / den


def compositional_upper_bound(p: int, gamma_Z: float) -> float:
    if p < 2:
        raise ValueError("p must be at least 2")
    if gamma_Z < 1:
        raise ValueError("gamma_Z must be >= 1")
    return 0.5 + p * (p - 2) / ((p - 1) * (gamma_Z + 2.0 * p + 1.0) + 4.0)


# -- discrete ----------------------------------------------------------------


def discrete_shape(params: DiscreteParams) -> float:
    if not isinstance(params, DiscreteParams):
        params = DiscreteParams(tuple(params))
    th = np.asarray(params.theta)
    w = th * (1.0 - th)
    return float(np.sum(w * (1.0 - th)) / np.sum(w))
