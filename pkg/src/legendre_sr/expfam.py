"""Gaussian exponential family in natural and moment coordinates.

Natural parameters are ``(eta, lam)`` with density
``exp(eta.u - u.lam.u / 2 - potential)``; sufficient statistics are
``T(u) = (u, -u u^T / 2)``. The dual (expectation) coordinates are the
gradient of the log-partition potential and equal ``E[T(u)]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .numerics import check_spd, logdet_spd, spd_inverse


def _vector(x, name: str) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise DimensionError(f"{name} must be a vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} has non-finite entries")
    return x


def _matrix(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    return a


@dataclass(frozen=True)
class GaussianNatural:
    """Natural parameters ``(eta, lam)``; ``lam`` is the precision matrix."""

    eta: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        eta = _vector(self.eta, "eta")
        lam = check_spd(_matrix(self.lam, "lam"), "lam")
        if lam.shape != (eta.size, eta.size):
            raise DimensionError(f"eta has length {eta.size} but lam has shape {lam.shape}")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "lam", lam)

    @property
    def dim(self) -> int:
        return self.eta.size


@dataclass(frozen=True)
class GaussianMoments:
    """Mean ``m`` and covariance ``sigma``."""

    m: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        m = _vector(self.m, "m")
        sigma = check_spd(_matrix(self.sigma, "sigma"), "sigma")
        if sigma.shape != (m.size, m.size):
            raise DimensionError(f"m has length {m.size} but sigma has shape {sigma.shape}")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "sigma", sigma)

    @property
    def dim(self) -> int:
        return self.m.size


@dataclass(frozen=True)
class SufficientStats:
    """A point ``(t1, t2)`` in the space paired with natural parameters.

    ``t2`` is kept as a full symmetric matrix; the pairing with a natural
    parameter-like object is the dot product on ``t1`` plus the Frobenius
    inner product on ``t2``.
    """

    t1: np.ndarray
    t2: np.ndarray

    def __post_init__(self):
        t1 = _vector(self.t1, "t1")
        t2 = _matrix(self.t2, "t2")
        if t2.shape != (t1.size, t1.size):
            raise DimensionError(f"t1 has length {t1.size} but t2 has shape {t2.shape}")
        if np.linalg.norm(t2 - t2.T) > 1e-12 * max(1.0, np.linalg.norm(t2)):
            raise ValueError("t2 must be symmetric")
        object.__setattr__(self, "t1", t1)
        object.__setattr__(self, "t2", t2)


def pairing(vec_part, mat_part, stats: SufficientStats) -> float:
    """``<(vec_part, mat_part), stats>`` = dot on vectors + Frobenius on matrices."""
    return float(np.dot(vec_part, stats.t1) + np.sum(np.asarray(mat_part) * stats.t2))


def to_moments(theta: GaussianNatural) -> GaussianMoments:
    sigma = spd_inverse(theta.lam)
    return GaussianMoments(m=np.linalg.solve(theta.lam, theta.eta), sigma=sigma)


def to_natural(mom: GaussianMoments) -> GaussianNatural:
    lam = spd_inverse(mom.sigma)
    return GaussianNatural(eta=np.linalg.solve(mom.sigma, mom.m), lam=lam)


def potential(theta: GaussianNatural) -> float:
    """Log-partition ``eta^T lam^{-1} eta / 2 - log det(lam) / 2 + (d/2) log(2 pi)``."""
    d = theta.dim
    quad = float(theta.eta @ np.linalg.solve(theta.lam, theta.eta))
    return 0.5 * quad - 0.5 * logdet_spd(theta.lam) + 0.5 * d * math.log(2.0 * math.pi)


def dual_params(theta: GaussianNatural) -> SufficientStats:
    """Expectation coordinates ``(m, -(sigma + m m^T)/2)``, the gradient of ``potential``."""
    mom = to_moments(theta)
    t2 = -0.5 * (mom.sigma + np.outer(mom.m, mom.m))
    return SufficientStats(t1=mom.m, t2=0.5 * (t2 + t2.T))


def log_density(theta: GaussianNatural, u) -> float:
    u = _vector(u, "u")
    if u.size != theta.dim:
        raise DimensionError(f"u has length {u.size}, expected {theta.dim}")
    return float(theta.eta @ u - 0.5 * u @ theta.lam @ u) - potential(theta)


def sufficient_stats(u) -> SufficientStats:
    u = _vector(u, "u")
    return SufficientStats(t1=u, t2=-0.5 * np.outer(u, u))


def potential_gradient_fd(theta: GaussianNatural, step: float = 1e-5) -> SufficientStats:
    """Central finite-difference gradient of ``potential`` on (vector, symmetric matrix).

    Off-diagonal precision entries are perturbed in symmetric pairs and the
    response halved, so the result is the gradient on symmetric matrices.
    """
    d = theta.dim
    g_eta = np.empty(d)
    for i in range(d):
        e = np.zeros(d)
        e[i] = step
        up = potential(GaussianNatural(theta.eta + e, theta.lam))
        dn = potential(GaussianNatural(theta.eta - e, theta.lam))
        g_eta[i] = (up - dn) / (2.0 * step)
    g_lam = np.empty((d, d))
    for i in range(d):
        for j in range(i, d):
            e = np.zeros((d, d))
            e[i, j] = step
            e[j, i] = step
            up = potential(GaussianNatural(theta.eta, theta.lam + e))
            dn = potential(GaussianNatural(theta.eta, theta.lam - e))
            g = (up - dn) / (2.0 * step)
            if i != j:
                g *= 0.5
            g_lam[i, j] = g_lam[j, i] = g
    return SufficientStats(t1=g_eta, t2=g_lam)


def dual_gradient_residual(theta: GaussianNatural, step: float = 1e-5) -> float:
    """Max relative componentwise gap between ``dual_params`` and the FD gradient.

    Each component is compared with scale ``max(1, |value|)``.
    """
    exact = dual_params(theta)
    fd = potential_gradient_fd(theta, step)
    r1 = np.abs(exact.t1 - fd.t1) / np.maximum(1.0, np.abs(exact.t1))
    r2 = np.abs(exact.t2 - fd.t2) / np.maximum(1.0, np.abs(exact.t2))
    return float(max(r1.max(), r2.max()))
