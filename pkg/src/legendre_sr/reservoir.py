"""Symplectic reservoirs from input-driven quadratic Hamiltonians.

A reservoir is the exact zero-order-hold discretization of a linear
Hamiltonian system ``x' = A x + B u`` with ``A`` in ``sp(2n)``:
``W = expm(A dt)`` and ``W_in = dt * phi1(A dt) @ B``. Two families are
built: the general quadratic ``H = x^T M x / 2 - x^T C u`` and the
linear-in-momentum ``H = p^T S q + q^T L q / 2 - q^T Cq u - p^T Cp u``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import DimensionError, NotGraphPreservingError
from .numerics import check_spd, integrate_quadrature, mat_exp, phi1
from .symp import (AffineSymplecticMap, canonical_j, decompose_graph_preserving,
                   is_hamiltonian_matrix, is_symplectic, reconstruction_error,
                   transported_graph)


@dataclass(frozen=True)
class QuadraticHamiltonianSpec:
    m_energy: np.ndarray
    c_couple: np.ndarray
    dt: float = 1.0

    def __post_init__(self):
        m = check_spd(self.m_energy, "m_energy")
        if m.shape[0] % 2:
            raise DimensionError("m_energy must be 2n x 2n")
        c = np.asarray(self.c_couple, dtype=float)
        if c.ndim == 1:
            c = c[:, None]
        if c.shape[0] != m.shape[0]:
            raise DimensionError(f"c_couple has {c.shape[0]} rows, expected {m.shape[0]}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "m_energy", m)
        object.__setattr__(self, "c_couple", c)
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def n(self) -> int:
        return self.m_energy.shape[0] // 2

    @property
    def input_dim(self) -> int:
        return self.c_couple.shape[1]


@dataclass(frozen=True)
class LinearPHamiltonianSpec:
    s_mat: np.ndarray
    l_mat: np.ndarray
    cq: np.ndarray
    cp: np.ndarray
    dt: float = 1.0
    require_spd: bool = False

    def __post_init__(self):
        s = np.atleast_2d(np.asarray(self.s_mat, dtype=float))
        lmat = np.atleast_2d(np.asarray(self.l_mat, dtype=float))
        n = s.shape[0]
        if s.shape != (n, n) or lmat.shape != (n, n):
            raise DimensionError("s_mat and l_mat must both be n x n")
        if np.linalg.norm(lmat - lmat.T) > 1e-12 * max(1.0, np.linalg.norm(lmat)):
            raise TypeError("l_mat must be symmetric")
        if self.require_spd:
            check_spd(lmat, "l_mat")
        cq = np.asarray(self.cq, dtype=float)
        cp = np.asarray(self.cp, dtype=float)
        cq = cq[:, None] if cq.ndim == 1 else cq
        cp = cp[:, None] if cp.ndim == 1 else cp
        if cq.shape[0] != n or cp.shape != cq.shape:
            raise DimensionError(f"cq {cq.shape} and cp {cp.shape} must both be {n} x m")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        for name, val in (("s_mat", s), ("l_mat", lmat), ("cq", cq), ("cp", cp)):
            object.__setattr__(self, name, val)
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def n(self) -> int:
        return self.s_mat.shape[0]

    @property
    def input_dim(self) -> int:
        return self.cq.shape[1]

    def generator(self) -> tuple[np.ndarray, np.ndarray]:
        """Block system ``A = [[S, 0], [-L, -S^T]]``, ``B = [[-Cp], [Cq]]``."""
        n = self.n
        a = np.block([[self.s_mat, np.zeros((n, n))], [-self.l_mat, -self.s_mat.T]])
        b = np.vstack([-self.cp, self.cq])
        return a, b


Spec = Union[QuadraticHamiltonianSpec, LinearPHamiltonianSpec]


@dataclass(frozen=True)
class SymplecticReservoir:
    """Linear update ``x -> W x + W_in u`` together with its generator."""

    w: np.ndarray
    w_in: np.ndarray
    a_gen: np.ndarray
    provenance: Spec = field(compare=False)

    def __post_init__(self):
        ok, res = is_symplectic(self.w, 1e-9 * np.sqrt(self.w.shape[0]))
        if not ok:
            raise ValueError(f"W is not symplectic (residual {res:.3e})")
        ok, res = is_hamiltonian_matrix(self.a_gen, 1e-9 * max(1.0, np.linalg.norm(self.a_gen)))
        if not ok:
            raise ValueError(f"generator is not Hamiltonian (residual {res:.3e})")

    @property
    def n(self) -> int:
        return self.w.shape[0] // 2

    @property
    def input_dim(self) -> int:
        return self.w_in.shape[1]

    def affine_map(self, u) -> AffineSymplecticMap:
        """The one-step update for a fixed input as an affine symplectic map."""
        return AffineSymplecticMap(self.w, self.w_in @ np.atleast_1d(np.asarray(u, dtype=float)))


@dataclass(frozen=True)
class ReservoirTrajectory:
    states: np.ndarray
    inputs: np.ndarray

    def __post_init__(self):
        if len(self.states) != len(self.inputs) + 1:
            raise DimensionError("need exactly one more state than inputs")


def _discretize(a: np.ndarray, b: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    w = mat_exp(a * dt)
    w_in = dt * phi1(a * dt) @ b
    return w, w_in


def build_quadratic(spec: QuadraticHamiltonianSpec) -> SymplecticReservoir:
    j = canonical_j(spec.n)
    a = j @ spec.m_energy
    b = -j @ spec.c_couple
    w, w_in = _discretize(a, b, spec.dt)
    return SymplecticReservoir(w, w_in, a, spec)


def build_linear_p(spec: LinearPHamiltonianSpec) -> SymplecticReservoir:
    a, b = spec.generator()
    w, w_in = _discretize(a, b, spec.dt)
    return SymplecticReservoir(w, w_in, a, spec)


def build(spec: Spec) -> SymplecticReservoir:
    if isinstance(spec, QuadraticHamiltonianSpec):
        return build_quadratic(spec)
    return build_linear_p(spec)


def step(res: SymplecticReservoir, x, u) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if x.shape != (2 * res.n,):
        raise DimensionError(f"state has shape {x.shape}, expected ({2 * res.n},)")
    if u.shape != (res.input_dim,):
        raise DimensionError(f"input has shape {u.shape}, expected ({res.input_dim},)")
    return res.w @ x + res.w_in @ u


def run(res: SymplecticReservoir, x0, inputs: Sequence) -> ReservoirTrajectory:
    inputs = np.asarray(inputs, dtype=float).reshape(-1, res.input_dim)
    states = np.empty((len(inputs) + 1, 2 * res.n))
    states[0] = np.asarray(x0, dtype=float)
    for k, u in enumerate(inputs):
        states[k + 1] = step(res, states[k], u)
    return ReservoirTrajectory(states, inputs)


def energy(spec: QuadraticHamiltonianSpec, x) -> float:
    """Internal energy ``x^T M x / 2``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.m_energy.shape[0],):
        raise DimensionError(f"state has shape {x.shape}")
    return float(0.5 * x @ spec.m_energy @ x)


def hamiltonian_value(spec: Spec, x, u=None) -> float:
    """``H(x, u)`` for either spec family; ``u=None`` means the undriven value."""
    x = np.asarray(x, dtype=float)
    if isinstance(spec, QuadraticHamiltonianSpec):
        val = energy(spec, x)
        if u is not None:
            val -= float(x @ spec.c_couple @ np.atleast_1d(u))
        return val
    n = spec.n
    q, p = x[:n], x[n:]
    val = float(p @ spec.s_mat @ q + 0.5 * q @ spec.l_mat @ q)
    if u is not None:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        val -= float(q @ spec.cq @ u + p @ spec.cp @ u)
    return val


# --- linear-in-momentum normal form -------------------------------------------

def base_flow(spec: LinearPHamiltonianSpec, u_const, s: float, q) -> np.ndarray:
    """Time-``s`` flow of ``q' = S q - Cp u`` (any sign of ``s``)."""
    u_const = np.atleast_1d(np.asarray(u_const, dtype=float))
    shift = spec.s_mat * s
    return mat_exp(shift) @ np.asarray(q, dtype=float) - s * phi1(shift) @ (spec.cp @ u_const)


def chi_t_coefficients(spec: LinearPHamiltonianSpec, u_const, t: float,
                       panels: int = 16) -> tuple[np.ndarray, np.ndarray, float]:
    """Coefficients ``(H, g, c)`` with ``chi_t(q) = q^T H q / 2 + g^T q + c``.

    ``chi_t(q) = -int_0^t V(f_{tau - t}(q)) dtau`` where
    ``V(q) = q^T L q / 2 - q^T Cq u`` and ``f_s`` is the base flow. The base
    flow is affine, ``f_s(q) = E_s q + h_s``, so the integrand is quadratic
    in ``q`` and its coefficient matrices are integrated by quadrature.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    n = spec.n
    if t == 0:
        return np.zeros((n, n)), np.zeros(n), 0.0
    u_const = np.atleast_1d(np.asarray(u_const, dtype=float))
    force = spec.cq @ u_const
    drive = spec.cp @ u_const
    lmat = spec.l_mat

    def coeffs(tau):
        s = tau - t
        e = mat_exp(spec.s_mat * s)
        h = -s * phi1(spec.s_mat * s) @ drive
        packed = np.empty((n + 2, n))
        packed[:n] = e.T @ lmat @ e
        packed[n] = e.T @ (lmat @ h - force)
        packed[n + 1] = 0.5 * h @ lmat @ h - h @ force
        return packed

    total = integrate_quadrature(coeffs, 0.0, t, panels)
    hess = -total[:n]
    return 0.5 * (hess + hess.T), -total[n], -float(total[n + 1, 0])


def chi_t_value(spec: LinearPHamiltonianSpec, u_const, t: float, q, panels: int = 16) -> float:
    """``chi_t(q) = -int_0^t V(f_{tau - t}(q)) dtau`` under a constant input."""
    hess, lin, const = chi_t_coefficients(spec, u_const, t, panels)
    q = np.asarray(q, dtype=float)
    return float(0.5 * q @ hess @ q + lin @ q + const)


@dataclass
class MainTheoremReport:
    decomposed: bool
    reconstruction_error: float
    fiber_gradient_error: float
    transport_asymmetry: float
    base_condition: float
    message: str = ""

    def passed(self, recon_tol: float = 1e-8, grad_tol: float = 1e-5, sym_tol: float = 1e-9) -> bool:
        return (self.decomposed and self.reconstruction_error < recon_tol
                and self.fiber_gradient_error < grad_tol and self.transport_asymmetry < sym_tol)


def verify_main_theorem(spec: LinearPHamiltonianSpec, u_const, sample_count: int = 50, seed=0,
                        fd_step: float = 1e-3, panels: int = 16) -> MainTheoremReport:
    """Check that one SR update is a cotangent lift followed by ``d chi_dt``.

    On ``sample_count`` seeded points it measures: the gap between the
    update and its reconstructed normal form; the gap between the fiber
    translation ``X q + y`` and a central-difference gradient of ``chi_dt``
    (its coefficients integrated once along the backward base flow); and
    the relative asymmetry of the Hessian obtained by
    transporting a random quadratic potential's graph through the update.
    """
    res = build_linear_p(spec)
    amap = res.affine_map(u_const)
    n = spec.n
    try:
        decomp = decompose_graph_preserving(amap)
    except NotGraphPreservingError as exc:
        return MainTheoremReport(False, np.inf, np.inf, np.inf, np.inf, f"theorem violation: {exc}")
    rng = np.random.default_rng(seed)
    points = rng.uniform(-1.0, 1.0, size=(sample_count, 2 * n))
    recon = reconstruction_error(amap, decomp, points)

    hess, lin, const = chi_t_coefficients(spec, u_const, spec.dt, panels)

    def chi(q):
        return 0.5 * q @ hess @ q + lin @ q + const

    grad_err = 0.0
    for q in rng.uniform(-1.0, 1.0, size=(sample_count, n)):
        fd = np.empty(n)
        for k in range(n):
            e = np.zeros(n)
            e[k] = fd_step
            fd[k] = (chi(q + e) - chi(q - e)) / (2.0 * fd_step)
        grad_err = max(grad_err, float(np.max(np.abs(decomp.fiber_gradient(q) - fd))))

    asym = 0.0
    for _ in range(5):
        p = rng.standard_normal((n, n))
        p_new, _ = transported_graph(amap, 0.5 * (p + p.T), rng.standard_normal(n))
        asym = max(asym, float(np.linalg.norm(p_new - p_new.T) / max(1.0, np.linalg.norm(p_new))))
    return MainTheoremReport(True, recon, grad_err, asym, decomp.metadata["cond_f"])


# --- random instances ---------------------------------------------------------

def random_spd(dim: int, rng: np.random.Generator, floor: float = 0.5) -> np.ndarray:
    g = rng.standard_normal((dim, dim))
    return g @ g.T / dim + floor * np.eye(dim)


def random_quadratic_spec(n: int, m: int, rng: np.random.Generator, dt: float = 1.0) -> QuadraticHamiltonianSpec:
    return QuadraticHamiltonianSpec(random_spd(2 * n, rng), rng.standard_normal((2 * n, m)), dt)


def random_linear_p_spec(n: int, m: int, rng: np.random.Generator, dt: float = 1.0,
                         scale: float = 0.5) -> LinearPHamiltonianSpec:
    s = scale * rng.standard_normal((n, n)) / np.sqrt(n)
    lmat = random_spd(n, rng) * scale
    return LinearPHamiltonianSpec(s, lmat, rng.standard_normal((n, m)), rng.standard_normal((n, m)), dt)
