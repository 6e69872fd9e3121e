"""Seeded demo datasets used by the CLI examples and the test-suite."""

from __future__ import annotations

import numpy as np

from .sampling import sample_composition, sample_discrete, sample_elliptical, sample_vonmises

__all__ = ["FIXTURES", "make_fixture"]


def contaminated_planar(seed: int = 1, n: int = 50, n_out: int = 5, shift: float = 10.0):
    """Standard planar Gaussian bulk plus a group of ``n_out`` shifted points.

    The outliers are standard Gaussian around ``shift * u`` for a random unit
    vector ``u``. Returns ``(points, outlier_indices)`` with the outliers at
    random positions in the sample.
    """
    rng = np.random.default_rng(seed)
    bulk = rng.standard_normal((n, 2))
    ang = rng.uniform(0, 2 * np.pi)
    out = shift * np.array([np.cos(ang), np.sin(ang)]) + rng.standard_normal((n_out, 2))
    order = rng.permutation(n + n_out)
    pts = np.concatenate([bulk, out])[order]
    return pts, sorted(np.flatnonzero(order >= n).tolist())


def anisotropic_gaussian(seed: int = 1, n: int = 100, ratio: float = 16.0):
    """Planar Gaussian with covariance eigenvalues ``ratio`` and 1, rotated by 30 degrees."""
    rng = np.random.default_rng(seed)
    c, s = np.cos(np.pi / 6), np.sin(np.pi / 6)
    rot = np.array([[c, -s], [s, c]])
    cov = rot @ np.diag([ratio, 1.0]) @ rot.T
    return sample_elliptical(rng, n, cov)


def uniform_angles(seed: int = 1, n: int = 500):
    return sample_vonmises(np.random.default_rng(seed), 0.0, n)


def symmetric_compositions(seed: int = 1, n: int = 500, p: int = 3):
    return sample_composition(np.random.default_rng(seed), n, np.ones(p))


def uniform_categories(seed: int = 1, n: int = 500, p: int = 5):
    return sample_discrete(np.random.default_rng(seed), n, np.full(p, 1.0 / p))


FIXTURES = {
    "contaminated": lambda seed: contaminated_planar(seed)[0],
    "anisotropic": anisotropic_gaussian,
    "uniform-angles": uniform_angles,
    "compositions": symmetric_compositions,
    "categories": uniform_categories,
}


def make_fixture(name: str, seed: int = 1) -> np.ndarray:
    try:
        return np.asarray(FIXTURES[name](seed))
    except KeyError:
        raise ValueError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}") from None
