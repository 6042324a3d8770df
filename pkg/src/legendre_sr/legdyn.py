"""Legendre dynamics on the Gaussian family.

Two generators are provided: the discrete LTI Kalman/GPR step written in
natural parameters, and the continuous Ornstein-Uhlenbeck flow of natural
parameters together with its density-generator identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConeExitError, DimensionError
from .expfam import (GaussianMoments, GaussianNatural, dual_params, pairing, sufficient_stats,
                     to_moments)
from .numerics import (as_square, check_spd, integrate_quadrature, mat_exp, rk4_integrate,
                       solve_lyapunov, spd_inverse)


@dataclass(frozen=True)
class LtiStateSpace:
    """``U' = A U + xi, xi ~ N(0, Q)`` and ``y = H U + eps, eps ~ N(0, R)``."""

    a_ss: np.ndarray
    q_noise: np.ndarray
    h_obs: np.ndarray
    r_noise: np.ndarray

    def __post_init__(self):
        a = as_square(np.atleast_2d(np.asarray(self.a_ss, dtype=float)), "a_ss")
        q = check_spd(np.atleast_2d(np.asarray(self.q_noise, dtype=float)), "q_noise")
        h = np.atleast_2d(np.asarray(self.h_obs, dtype=float))
        r = check_spd(np.atleast_2d(np.asarray(self.r_noise, dtype=float)), "r_noise")
        d = a.shape[0]
        if q.shape != (d, d):
            raise DimensionError(f"q_noise shape {q.shape}, expected {(d, d)}")
        if h.ndim != 2 or h.shape[1] != d:
            raise DimensionError(f"h_obs shape {h.shape}, expected (r, {d})")
        if r.shape != (h.shape[0], h.shape[0]):
            raise DimensionError(f"r_noise shape {r.shape}, expected {(h.shape[0],) * 2}")
        for name, val in (("a_ss", a), ("q_noise", q), ("h_obs", h), ("r_noise", r)):
            object.__setattr__(self, name, val)

    @property
    def state_dim(self) -> int:
        return self.a_ss.shape[0]

    @property
    def obs_dim(self) -> int:
        return self.h_obs.shape[0]


@dataclass(frozen=True)
class OUProcessSpec:
    """``dU = K (mu - U) dt + sigma dW`` with diffusion ``D = sigma sigma^T``."""

    k_drift: np.ndarray
    mu: np.ndarray
    diffusion: np.ndarray

    def __post_init__(self):
        k = as_square(np.atleast_2d(np.asarray(self.k_drift, dtype=float)), "k_drift")
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        dmat = check_spd(np.atleast_2d(np.asarray(self.diffusion, dtype=float)), "diffusion")
        if mu.shape != (k.shape[0],) or dmat.shape != k.shape:
            raise DimensionError("k_drift, mu and diffusion dimensions disagree")
        object.__setattr__(self, "k_drift", k)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "diffusion", dmat)

    @property
    def dim(self) -> int:
        return self.mu.size

    def is_stable(self) -> bool:
        return bool(np.min(np.linalg.eigvals(self.k_drift).real) > 0.0)


@dataclass(frozen=True)
class NaturalDrift:
    """Velocity ``(a_eta, a_lambda)`` of the natural parameters."""

    a_eta: np.ndarray
    a_lambda: np.ndarray

    def __post_init__(self):
        a_lambda = np.asarray(self.a_lambda, dtype=float)
        if np.max(np.abs(a_lambda - a_lambda.T), initial=0.0) > 1e-12 * max(1.0, np.abs(a_lambda).max()):
            raise ValueError("a_lambda must be symmetric")
        object.__setattr__(self, "a_eta", np.asarray(self.a_eta, dtype=float))
        object.__setattr__(self, "a_lambda", a_lambda)


def _check_dim(theta: GaussianNatural, d: int):
    if theta.dim != d:
        raise DimensionError(f"theta has dimension {theta.dim}, model has {d}")


# --- discrete-time GPR / Kalman in natural form -----------------------------

def gpr_predict(theta: GaussianNatural, ss: LtiStateSpace) -> GaussianNatural:
    """Prediction step: push ``N(m, S)`` through ``A`` and add ``Q``, in natural form."""
    _check_dim(theta, ss.state_dim)
    mom = to_moments(theta)
    m_pred = ss.a_ss @ mom.m
    s_pred = ss.a_ss @ mom.sigma @ ss.a_ss.T + ss.q_noise
    s_pred = 0.5 * (s_pred + s_pred.T)
    lam = spd_inverse(s_pred)
    return GaussianNatural(eta=lam @ m_pred, lam=lam)


def gpr_update(theta: GaussianNatural, ss: LtiStateSpace, y) -> GaussianNatural:
    """Conditioning on ``y``: natural parameters add ``H^T R^-1 y`` and ``H^T R^-1 H``."""
    _check_dim(theta, ss.state_dim)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != (ss.obs_dim,):
        raise DimensionError(f"y has shape {y.shape}, expected ({ss.obs_dim},)")
    rinv_h = np.linalg.solve(ss.r_noise, ss.h_obs)
    rinv_y = np.linalg.solve(ss.r_noise, y)
    info = ss.h_obs.T @ rinv_h
    lam = theta.lam + 0.5 * (info + info.T)
    return GaussianNatural(eta=theta.eta + ss.h_obs.T @ rinv_y, lam=lam)


def gpr_step(theta: GaussianNatural, ss: LtiStateSpace, y) -> GaussianNatural:
    return gpr_update(gpr_predict(theta, ss), ss, y)


def kalman_step_moments(mom: GaussianMoments, ss: LtiStateSpace, y) -> GaussianMoments:
    """Textbook covariance-form Kalman predict + update, used as a reference."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    m = ss.a_ss @ mom.m
    p = ss.a_ss @ mom.sigma @ ss.a_ss.T + ss.q_noise
    s = ss.h_obs @ p @ ss.h_obs.T + ss.r_noise
    gain = np.linalg.solve(s, ss.h_obs @ p).T
    m = m + gain @ (y - ss.h_obs @ m)
    # Joseph form keeps the covariance symmetric positive definite.
    ikh = np.eye(m.size) - gain @ ss.h_obs
    p = ikh @ p @ ikh.T + gain @ ss.r_noise @ gain.T
    return GaussianMoments(m=m, sigma=0.5 * (p + p.T))


# --- Ornstein-Uhlenbeck natural-parameter flow ------------------------------

def ou_drift(theta: GaussianNatural, ou: OUProcessSpec) -> NaturalDrift:
    """``a_eta = K^T eta + lam K mu - lam D eta``, ``a_lambda = K^T lam + lam K - lam D lam``."""
    _check_dim(theta, ou.dim)
    k, mu, dmat = ou.k_drift, ou.mu, ou.diffusion
    eta, lam = theta.eta, theta.lam
    a_eta = k.T @ eta + lam @ (k @ mu) - lam @ (dmat @ eta)
    lin = k.T @ lam + lam @ k
    quad = lam @ dmat @ lam
    a_lambda = 0.5 * (lin + lin.T) - 0.5 * (quad + quad.T)
    return NaturalDrift(a_eta=a_eta, a_lambda=a_lambda)


def ou_b(theta: GaussianNatural, ou: OUProcessSpec) -> float:
    """Constant term ``b(theta) = -<dual_params(theta), a(theta)>``."""
    drift = ou_drift(theta, ou)
    return -pairing(drift.a_eta, drift.a_lambda, dual_params(theta))


def ou_generator_ratio(theta: GaussianNatural, ou: OUProcessSpec, u) -> float:
    """``(L* p_theta)(u) / p_theta(u)`` for the OU Fokker-Planck operator.

    Assembled term by term from ``-div b - b . grad l + tr(D hess l)/2 +
    grad l^T D grad l / 2`` with ``l = log p_theta``, ``b(u) = K (mu - u)``.
    """
    _check_dim(theta, ou.dim)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (ou.dim,):
        raise DimensionError(f"u has shape {u.shape}, expected ({ou.dim},)")
    k, dmat = ou.k_drift, ou.diffusion
    grad_l = theta.eta - theta.lam @ u
    hess_l = -theta.lam
    b_u = k @ (ou.mu - u)
    div_b = -np.trace(k)
    return float(-div_b - b_u @ grad_l + 0.5 * np.trace(dmat @ hess_l)
                 + 0.5 * grad_l @ dmat @ grad_l)


def affine_generator_value(theta: GaussianNatural, ou: OUProcessSpec, u) -> float:
    """``a(theta) . T(u) + b(theta)``, the affine form the generator ratio must equal."""
    drift = ou_drift(theta, ou)
    return pairing(drift.a_eta, drift.a_lambda, sufficient_stats(u)) + ou_b(theta, ou)


def pack_natural(theta: GaussianNatural) -> np.ndarray:
    """Flatten ``(eta, upper triangle of lam)`` into one state vector."""
    iu = np.triu_indices(theta.dim)
    return np.concatenate([theta.eta, theta.lam[iu]])


def unpack_natural(state: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray]:
    iu = np.triu_indices(d)
    eta = state[:d].copy()
    lam = np.zeros((d, d))
    lam[iu] = state[d:]
    lam = lam + np.triu(lam, 1).T
    return eta, lam


def natural_dim(d: int) -> int:
    return d + d * (d + 1) // 2


def ou_flow_natural(theta0: GaussianNatural, ou: OUProcessSpec, t: float, steps: int,
                    return_path: bool = False):
    """Integrate ``theta' = a(theta)`` with RK4 over ``[0, t]``.

    The precision is carried on its upper triangle only. A Cholesky gate
    after every step raises ``ConeExitError`` if it stops being SPD. With
    ``return_path`` the list of ``steps + 1`` visited parameters is returned.
    """
    _check_dim(theta0, ou.dim)
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return [theta0] if return_path else theta0
    d = ou.dim
    k, mu, dmat = ou.k_drift, ou.mu, ou.diffusion
    kmu = k @ mu
    iu = np.triu_indices(d)

    def field(state):
        eta, lam = unpack_natural(state, d)
        a_eta = k.T @ eta + lam @ kmu - lam @ (dmat @ eta)
        lin = k.T @ lam + lam @ k
        a_lam = 0.5 * (lin + lin.T) - lam @ dmat @ lam
        return np.concatenate([a_eta, a_lam[iu]])

    def gate(state, time):
        _, lam = unpack_natural(state, d)
        try:
            np.linalg.cholesky(lam)
        except np.linalg.LinAlgError:
            raise ConeExitError(f"precision left the SPD cone at t={time:.6g}", time=time) from None

    out = rk4_integrate(field, pack_natural(theta0), t, steps, check=gate, return_path=return_path)
    if return_path:
        return [GaussianNatural(*unpack_natural(s, d)) for s in out]
    return GaussianNatural(*unpack_natural(out, d))


def ou_flow_exact(mom0: GaussianMoments, ou: OUProcessSpec, t: float,
                  panels: int | None = None) -> GaussianMoments:
    """Closed-form OU moments at time ``t``.

    ``m(t) = mu + e^{-Kt}(m0 - mu)`` and
    ``S(t) = e^{-Kt} S0 e^{-K^T t} + int_0^t e^{-Ks} D e^{-K^T s} ds``; the
    integral uses composite Gauss-Legendre with panel count growing with
    ``t |K|``.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if mom0.dim != ou.dim:
        raise DimensionError("moment and OU dimensions differ")
    if t == 0:
        return mom0
    k, dmat = ou.k_drift, ou.diffusion
    decay = mat_exp(-k * t)
    m = ou.mu + decay @ (mom0.m - ou.mu)
    if panels is None:
        panels = max(4, int(math.ceil(4.0 * t * max(1.0, np.linalg.norm(k, 2)))))

    def integrand(s):
        e = mat_exp(-k * s)
        return e @ dmat @ e.T

    sigma = decay @ mom0.sigma @ decay.T + integrate_quadrature(integrand, 0.0, t, panels)
    return GaussianMoments(m=m, sigma=0.5 * (sigma + sigma.T))


def ou_stationary(ou: OUProcessSpec) -> GaussianNatural:
    """Stationary law in natural form: precision ``X^-1`` with ``K X + X K^T = D``, mean ``mu``."""
    x = solve_lyapunov(ou.k_drift, ou.diffusion)
    lam = spd_inverse(x)
    return GaussianNatural(eta=lam @ ou.mu, lam=lam)


def natural_distance(a: GaussianNatural, b: GaussianNatural) -> float:
    """Max-abs difference over ``eta`` and ``lam`` entries."""
    return float(max(np.max(np.abs(a.eta - b.eta)), np.max(np.abs(a.lam - b.lam))))

