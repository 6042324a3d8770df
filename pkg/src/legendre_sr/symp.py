"""Linear symplectic algebra and transport of Lagrangian gradient graphs.

Phase space is ``R^n x R^n`` with coordinates ``(q, p)`` and the canonical
form ``J = [[0, I], [-I, 0]]``. A Legendre graph is ``{(q, grad psi(q))}``.
Affine maps ``x -> w x + v`` act on such graphs; the ones that keep every
graph a graph are exactly the compositions of an affine cotangent lift
``(q, p) -> (F q + d, F^-T p)`` with an exact fiber translation
``(q, p) -> (q, p + X q + y)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np
import scipy.linalg

from .errors import (DimensionError, InconsistentMapError, NotAGraphError,
                     NotGraphPreservingError)
from .numerics import as_square

GRAPH_COND_LIMIT = 1e12


class Check(NamedTuple):
    ok: bool
    residual: float


def canonical_j(n: int) -> np.ndarray:
    if n < 1:
        raise DimensionError("n must be >= 1")
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def _half_dim(a: np.ndarray) -> int:
    if a.shape[0] % 2:
        raise DimensionError(f"phase-space matrices need even dimension, got {a.shape[0]}")
    return a.shape[0] // 2


def is_symplectic(w, tol: float = 1e-9) -> Check:
    """Residual ``|w^T J w - J|_F`` and whether it is below ``tol``."""
    w = as_square(w, "w")
    j = canonical_j(_half_dim(w))
    res = float(np.linalg.norm(w.T @ j @ w - j))
    return Check(res < tol, res)


def is_hamiltonian_matrix(a, tol: float = 1e-12) -> Check:
    """Residual ``|a^T J + J a|_F``: membership of ``a`` in ``sp(2n)``."""
    a = as_square(a, "a")
    j = canonical_j(_half_dim(a))
    res = float(np.linalg.norm(a.T @ j + j @ a))
    return Check(res < tol, res)


def conformal_factor(w, tol: float = 1e-9) -> Optional[float]:
    """Constant ``c`` with ``w^T J w = c J``, or ``None`` when no such ``c`` fits.

    ``c`` is the Frobenius projection of ``w^T J w`` onto ``J``; the fit is
    accepted when the remaining residual is below ``tol`` (relative to
    ``|w^T J w|``).
    """
    w = as_square(w, "w")
    n = _half_dim(w)
    if np.linalg.matrix_rank(w) < 2 * n:
        raise np.linalg.LinAlgError("conformal factor is undefined for singular w")
    j = canonical_j(n)
    pulled = w.T @ j @ w
    c = float(np.sum(pulled * j) / np.sum(j * j))
    res = np.linalg.norm(pulled - c * j)
    if res > tol * max(1.0, np.linalg.norm(pulled)):
        return None
    return c


# --- Lagrangian frames ------------------------------------------------------

@dataclass(frozen=True)
class LagrangianFrame:
    """A ``2n x n`` basis of a candidate Lagrangian subspace."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim != 2 or b.shape[0] != 2 * b.shape[1]:
            raise DimensionError(f"frame basis must be 2n x n, got shape {b.shape}")
        object.__setattr__(self, "basis", b)

    @property
    def n(self) -> int:
        return self.basis.shape[1]


class FrameCheck(NamedTuple):
    ok: bool
    residual: float
    reason: str


def vertical_frame(n: int) -> LagrangianFrame:
    """The fiber direction ``{q = 0}``."""
    return LagrangianFrame(np.vstack([np.zeros((n, n)), np.eye(n)]))


def horizontal_frame(n: int) -> LagrangianFrame:
    """The zero section ``{p = 0}``."""
    return LagrangianFrame(np.vstack([np.eye(n), np.zeros((n, n))]))


def random_lagrangian_frame(n: int, seed) -> LagrangianFrame:
    """Graph frame ``[[I], [S]]`` with ``S`` a symmetrized uniform[-1, 1] matrix."""
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1.0, 1.0, size=(n, n))
    return LagrangianFrame(np.vstack([np.eye(n), 0.5 * (a + a.T)]))


def is_lagrangian_frame(frame: LagrangianFrame, tol: float = 1e-9) -> FrameCheck:
    """Isotropy residual ``|B^T J B|_F`` plus a column-pivoted QR rank test."""
    b = frame.basis
    n = frame.n
    res = float(np.linalg.norm(b.T @ canonical_j(n) @ b))
    _, r, _ = scipy.linalg.qr(b, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size < n or diag[-1] <= 1e-12 * max(diag[0], 1e-300):
        return FrameCheck(False, res, "rank deficient")
    if res >= tol:
        return FrameCheck(False, res, "not isotropic")
    return FrameCheck(True, res, "")


def map_frame(w, frame: LagrangianFrame) -> LagrangianFrame:
    return LagrangianFrame(np.asarray(w) @ frame.basis)


# --- quadratic potentials and affine maps ------------------------------------

@dataclass(frozen=True)
class QuadraticPotential:
    """``psi(q) = q^T P q / 2 + b^T q + c``; graph is ``p = P q + b``."""

    p_hess: np.ndarray
    b_lin: np.ndarray
    c_const: float = 0.0

    def __post_init__(self):
        p = np.atleast_2d(np.asarray(self.p_hess, dtype=float))
        b = np.atleast_1d(np.asarray(self.b_lin, dtype=float))
        if p.shape != (b.size, b.size):
            raise DimensionError(f"p_hess {p.shape} and b_lin {b.shape} disagree")
        if np.linalg.norm(p - p.T) > 1e-12 * max(1.0, np.linalg.norm(p)):
            raise ValueError("p_hess must be symmetric")
        object.__setattr__(self, "p_hess", p)
        object.__setattr__(self, "b_lin", b)
        object.__setattr__(self, "c_const", float(self.c_const))

    @property
    def n(self) -> int:
        return self.b_lin.size

    @property
    def is_convex(self) -> bool:
        return bool(np.min(np.linalg.eigvalsh(self.p_hess)) >= 0.0)

    def __call__(self, q) -> float:
        q = np.asarray(q, dtype=float)
        return float(0.5 * q @ self.p_hess @ q + self.b_lin @ q + self.c_const)

    def gradient(self, q) -> np.ndarray:
        return self.p_hess @ np.asarray(q, dtype=float) + self.b_lin


@dataclass(frozen=True)
class AffineSymplecticMap:
    """``x -> w x + v`` with ``w`` symplectic (relative residual below 1e-9)."""

    w: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        w = as_square(self.w, "w")
        n = _half_dim(w)
        v = np.atleast_1d(np.asarray(self.v, dtype=float))
        if v.shape != (2 * n,):
            raise DimensionError(f"v has shape {v.shape}, expected ({2 * n},)")
        j = canonical_j(n)
        rel = np.linalg.norm(w.T @ j @ w - j) / np.linalg.norm(j)
        if rel >= 1e-9:
            raise ValueError(f"w is not symplectic (relative residual {rel:.3e})")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "v", v)

    @property
    def n(self) -> int:
        return self.w.shape[0] // 2

    def blocks(self):
        n = self.n
        w = self.w
        return w[:n, :n], w[:n, n:], w[n:, :n], w[n:, n:]

    def __call__(self, x) -> np.ndarray:
        return self.w @ np.asarray(x, dtype=float) + self.v


def transported_graph(amap: AffineSymplecticMap, p_hess, b_lin) -> tuple[np.ndarray, np.ndarray]:
    """Raw ``(P', b')`` with ``amap({p = P q + b}) = {p' = P' q' + b'}``.

    No symmetrization is applied, so callers can measure how symmetric the
    transported Hessian comes out. Raises ``NotAGraphError`` when the image
    is not a graph over ``q'``.
    """
    w11, w12, w21, w22 = amap.blocks()
    n = amap.n
    vq, vp = amap.v[:n], amap.v[n:]
    p_hess = np.asarray(p_hess, dtype=float)
    b_lin = np.asarray(b_lin, dtype=float)
    g = w11 + w12 @ p_hess
    if np.linalg.cond(g) > GRAPH_COND_LIMIT:
        raise NotAGraphError("image of the graph is not transverse to the fibers "
                             f"(cond(W11 + W12 P) = {np.linalg.cond(g):.3e})")
    top = w21 + w22 @ p_hess
    p_new = np.linalg.solve(g.T, top.T).T
    b_new = w22 @ b_lin + vp - p_new @ (w12 @ b_lin + vq)
    return p_new, b_new


def transport_quadratic_graph(amap: AffineSymplecticMap, psi: QuadraticPotential) -> QuadraticPotential:
    """Potential whose gradient graph is the image of ``psi``'s graph under ``amap``.

    The constant term is carried over unchanged since graphs do not see it.
    """
    p_new, b_new = transported_graph(amap, psi.p_hess, psi.b_lin)
    asym = np.linalg.norm(p_new - p_new.T)
    if asym > 1e-9 * max(1.0, np.linalg.norm(p_new)):
        raise InconsistentMapError(f"transported Hessian is not symmetric ({asym:.3e})")
    return QuadraticPotential(0.5 * (p_new + p_new.T), b_new, psi.c_const)


# --- normal form ------------------------------------------------------------

@dataclass(frozen=True)
class GraphPreservingDecomposition:
    """Base map ``q -> F q + d`` and fiber translation by ``grad chi = X q + y``."""

    f_base: np.ndarray
    d_base: np.ndarray
    x_hess: np.ndarray
    y_lin: np.ndarray
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        f = as_square(self.f_base, "f_base")
        x = as_square(self.x_hess, "x_hess")
        n = f.shape[0]
        d = np.atleast_1d(np.asarray(self.d_base, dtype=float))
        y = np.atleast_1d(np.asarray(self.y_lin, dtype=float))
        if x.shape != (n, n) or d.shape != (n,) or y.shape != (n,):
            raise DimensionError("decomposition blocks disagree in size")
        if np.linalg.matrix_rank(f) < n:
            raise ValueError("f_base must be invertible")
        if np.linalg.norm(x - x.T) > 1e-9 * max(1.0, np.linalg.norm(x)):
            raise ValueError("x_hess must be symmetric")
        for name, val in (("f_base", f), ("d_base", d), ("x_hess", x), ("y_lin", y)):
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.f_base.shape[0]

    def apply(self, q, p) -> tuple[np.ndarray, np.ndarray]:
        """Fiber translation after cotangent lift, applied to ``(q, p)``."""
        q_new = self.f_base @ np.asarray(q, dtype=float) + self.d_base
        p_lift = np.linalg.solve(self.f_base.T, np.asarray(p, dtype=float))
        return q_new, p_lift + self.x_hess @ q_new + self.y_lin

    def fiber_gradient(self, q) -> np.ndarray:
        return self.x_hess @ np.asarray(q, dtype=float) + self.y_lin

    def to_map(self) -> AffineSymplecticMap:
        n = self.n
        f_inv_t = np.linalg.inv(self.f_base).T
        w = np.block([[self.f_base, np.zeros((n, n))],
                      [self.x_hess @ self.f_base, f_inv_t]])
        v = np.concatenate([self.d_base, self.x_hess @ self.d_base + self.y_lin])
        return AffineSymplecticMap(w, v)

    @classmethod
    def identity(cls, n: int) -> "GraphPreservingDecomposition":
        return cls(np.eye(n), np.zeros(n), np.zeros((n, n)), np.zeros(n))


def decompose_graph_preserving(amap: AffineSymplecticMap,
                               tol: Optional[float] = None) -> GraphPreservingDecomposition:
    """Split a block lower-triangular affine symplectic map into lift + fiber translation.

    ``tol`` bounds ``|W12|_F`` and defaults to ``1e-10 |w|_F``.
    """
    w11, w12, w21, _ = amap.blocks()
    n = amap.n
    if tol is None:
        tol = 1e-10 * np.linalg.norm(amap.w)
    if np.linalg.norm(w12) > tol:
        raise NotGraphPreservingError(
            f"upper-right block has norm {np.linalg.norm(w12):.3e} > {tol:.3e}; "
            "base coordinates of the image depend on p")
    f = w11
    d = amap.v[:n]
    x = np.linalg.solve(f.T, w21.T).T
    asym = np.linalg.norm(x - x.T)
    if asym > max(tol, 1e-9 * max(1.0, np.linalg.norm(x))):
        raise InconsistentMapError(f"fiber Hessian W21 W11^-1 is not symmetric ({asym:.3e})")
    x = 0.5 * (x + x.T)
    y = amap.v[n:] - x @ d
    return GraphPreservingDecomposition(f, d, x, y, metadata={"cond_f": float(np.linalg.cond(f))})


def reconstruction_error(amap: AffineSymplecticMap, decomp: GraphPreservingDecomposition,
                         points: np.ndarray) -> float:
    """Max-abs gap between ``amap`` and the decomposition over rows of ``points``."""
    n = amap.n
    worst = 0.0
    for x in np.atleast_2d(points):
        q_new, p_new = decomp.apply(x[:n], x[n:])
        worst = max(worst, float(np.max(np.abs(amap(x) - np.concatenate([q_new, p_new])))))
    return worst


def compose_potential(decomp: GraphPreservingDecomposition, psi: QuadraticPotential) -> QuadraticPotential:
    """``psi o f^-1 + chi`` with ``f(q) = F q + d`` and ``chi(q) = q^T X q / 2 + y^T q``.

    The constant term keeps ``psi.c_const``, matching ``transport_quadratic_graph``.
    """
    f_inv = np.linalg.inv(decomp.f_base)
    pulled = f_inv.T @ psi.p_hess @ f_inv
    p_new = pulled + decomp.x_hess
    b_new = f_inv.T @ psi.b_lin - pulled @ decomp.d_base + decomp.y_lin
    return QuadraticPotential(0.5 * (p_new + p_new.T), b_new, psi.c_const)


# --- sampled transport of non-quadratic graphs ------------------------------

@dataclass
class SampledTransportReport:
    max_asymmetry: float
    max_jacobian_norm: float
    count: int


def log_sum_exp_gradient(q) -> np.ndarray:
    """Gradient of ``log sum exp(q)`` (the softmax)."""
    q = np.asarray(q, dtype=float)
    e = np.exp(q - q.max())
    return e / e.sum()


def verify_sampled_graph_transport(amap: AffineSymplecticMap, grad_psi: Callable,
                                   sample_box, count: int = 50, seed=0,
                                   fd_step: float = 1e-4) -> SampledTransportReport:
    """Check that the image of ``{(q, grad_psi(q))}`` is again a gradient graph.

    For a map with ``W12 = 0`` the image momentum is a function of ``q'``
    alone; its central-difference Jacobian must be symmetric. Reports the
    largest absolute asymmetry over ``count`` uniform samples in
    ``sample_box = (lo, hi)``.
    """
    w11, w12, w21, w22 = amap.blocks()
    n = amap.n
    if np.linalg.norm(w12) > 1e-10 * np.linalg.norm(amap.w):
        raise NotGraphPreservingError("sampled transport needs W12 = 0")
    if np.linalg.cond(w11) > GRAPH_COND_LIMIT:
        raise np.linalg.LinAlgError("base map W11 is singular")
    vq, vp = amap.v[:n], amap.v[n:]
    lo, hi = (np.broadcast_to(np.asarray(b, dtype=float), (n,)) for b in sample_box)
    rng = np.random.default_rng(seed)

    def p_image(q_new):
        q = np.linalg.solve(w11, q_new - vq)
        return w21 @ q + w22 @ np.asarray(grad_psi(q), dtype=float) + vp

    worst = 0.0
    jac_norm = 0.0
    for _ in range(count):
        q_new = w11 @ rng.uniform(lo, hi) + vq
        jac = np.empty((n, n))
        for k in range(n):
            e = np.zeros(n)
            e[k] = fd_step
            jac[:, k] = (p_image(q_new + e) - p_image(q_new - e)) / (2.0 * fd_step)
        worst = max(worst, float(np.max(np.abs(jac - jac.T))))
        jac_norm = max(jac_norm, float(np.linalg.norm(jac)))
    return SampledTransportReport(worst, jac_norm, count)


def random_symplectic(n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Product of an upper shear, a lower shear and a cotangent lift."""
    f = np.eye(n) + scale * 0.3 * rng.standard_normal((n, n))
    while np.linalg.cond(f) > 1e3:
        f = np.eye(n) + scale * 0.3 * rng.standard_normal((n, n))
    s = rng.standard_normal((n, n)) * scale
    s = 0.5 * (s + s.T)
    t = rng.standard_normal((n, n)) * scale
    t = 0.5 * (t + t.T)
    lift = np.block([[f, np.zeros((n, n))], [np.zeros((n, n)), np.linalg.inv(f).T]])
    lower = np.block([[np.eye(n), np.zeros((n, n))], [s, np.eye(n)]])
    upper = np.block([[np.eye(n), t], [np.zeros((n, n)), np.eye(n)]])
    return upper @ lower @ lift


def random_graph_preserving(n: int, rng: np.random.Generator, scale: float = 1.0) -> AffineSymplecticMap:
    """Random affine map ``fiber translation o cotangent lift``."""
    f = np.eye(n) + scale * 0.3 * rng.standard_normal((n, n))
    while np.linalg.cond(f) > 1e3:
        f = np.eye(n) + scale * 0.3 * rng.standard_normal((n, n))
    x = rng.standard_normal((n, n)) * scale
    x = 0.5 * (x + x.T)
    decomp = GraphPreservingDecomposition(f, rng.standard_normal(n), x, rng.standard_normal(n))
    return decomp.to_map()
