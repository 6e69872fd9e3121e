"""Random generators for the model families and the SPD outlier study.

All samplers take an explicit :class:`numpy.random.Generator`; there is no
hidden global state.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "replicate_rng",
    "sample_composition",
    "sample_discrete",
    "sample_elliptical",
    "sample_haar_orthogonal",
    "sample_scenario",
    "sample_spd",
    "sample_vonmises",
]


def replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    """Independent stream for replicate ``replicate`` under root ``seed``.

    The stream depends only on ``(seed, replicate)``, so results do not
    change with the order or parallelism in which replicates run.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(replicate,)))


def sample_haar_orthogonal(rng: np.random.Generator, p: int, size: int | None = None):
    """Haar-distributed orthogonal matrices via sign-corrected QR."""
    if p < 1:
        raise ValueError("p must be at least 1")
    shape = (p, p) if size is None else (size, p, p)
    g = rng.standard_normal(shape)
    q, r = np.linalg.qr(g)
    signs = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    signs[signs == 0] = 1.0
    return q * signs[..., None, :]


def sample_spd(rng: np.random.Generator, theta: float, size: int | None = None):
    """Draw ``U diag(exp(z)) U^T`` with Haar ``U`` and ``z_k ~ N(theta, 1)``."""
    m = 1 if size is None else size
    u = sample_haar_orthogonal(rng, 3, m)
    z = rng.normal(theta, 1.0, size=(m, 3))
    x = (u * np.exp(z)[:, None, :]) @ np.swapaxes(u, -1, -2)
    x = 0.5 * (x + np.swapaxes(x, -1, -2))
    return x[0] if size is None else x


def sample_vonmises(rng: np.random.Generator, kappa: float, size: int, mu: float = 0.0):
    """von Mises angles in ``[0, 2 pi)`` by Best and Fisher's rejection sampler."""
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    if kappa == 0:
        return rng.uniform(0.0, 2.0 * np.pi, size)
    tau = 1.0 + np.sqrt(1.0 + 4.0 * kappa * kappa)
    rho = (tau - np.sqrt(2.0 * tau)) / (2.0 * kappa)
    r = (1.0 + rho * rho) / (2.0 * rho)
    out = np.empty(size)
    filled = 0
    while filled < size:
        need = size - filled
        batch = max(16, int(need * 1.5))
        u1, u2, u3 = rng.uniform(size=(3, batch))
        z = np.cos(np.pi * u1)
        f = (1.0 + r * z) / (r + z)
        c = kappa * (r - f)
        with np.errstate(divide="ignore", invalid="ignore"):
            ok = (c * (2.0 - c) - u2 > 0) | (np.log(c / u2) + 1.0 - c >= 0)
        theta = np.sign(u3[ok] - 0.5) * np.arccos(np.clip(f[ok], -1.0, 1.0))
        take = min(need, theta.size)
        out[filled:filled + take] = theta[:take]
        filled += take
    return np.mod(out + mu, 2.0 * np.pi)


def sample_elliptical(rng: np.random.Generator, n: int, cov, mean=None):
    """Multivariate normal sample (the Gaussian member of the elliptical family)."""
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    p = cov.shape[0]
    mean = np.zeros(p) if mean is None else np.asarray(mean, dtype=float)
    w, v = np.linalg.eigh(cov)
    root = v * np.sqrt(np.clip(w, 0.0, None))
    return mean + rng.standard_normal((n, p)) @ root.T


def sample_composition(rng: np.random.Generator, n: int, theta, mu=None, log_sd: float = 1.0):
    """Compositions ``mu_j Z_j^theta_j / sum_k mu_k Z_k^theta_k`` with lognormal ``Z``."""
    theta = np.asarray(theta, dtype=float)
    p = theta.size
    mu = np.ones(p) if mu is None else np.asarray(mu, dtype=float)
    if np.any(mu <= 0) or np.any(theta < 0):
        raise ValueError("need mu > 0 and theta >= 0")
    logz = rng.normal(0.0, log_sd, size=(n, p))
    logw = np.log(mu) + theta * logz
    logw -= logw.max(axis=1, keepdims=True)
    w = np.exp(logw)
    return w / w.sum(axis=1, keepdims=True)


def sample_discrete(rng: np.random.Generator, n: int, theta):
    """Category labels in ``1..p`` drawn with probabilities ``theta``."""
    theta = np.asarray(theta, dtype=float)
    return rng.choice(theta.size, size=n, p=theta / theta.sum()) + 1


def sample_scenario(rng: np.random.Generator, family: str, n: int, **params):
    """Dispatch to one of the family samplers by name.

    ``elliptical_gaussian`` (``cov``), ``vonmises`` (``kappa``),
    ``composition`` (``theta``, optional ``mu``) or ``discrete`` (``theta``).
    """
    if family == "elliptical_gaussian":
        return sample_elliptical(rng, n, params["cov"], params.get("mean"))
    if family == "vonmises":
        return sample_vonmises(rng, params["kappa"], n)
    if family == "composition":
        return sample_composition(rng, n, params["theta"], params.get("mu"))
    if family == "discrete":
        return sample_discrete(rng, n, params["theta"])
    raise ValueError(f"unknown family {family!r}")
