"""Dense linear-algebra and integration kernels.

Everything here works on plain ``numpy`` float64 arrays. Matrices are
validated on entry (square, finite) and never mutated.
"""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, DivergenceError, NoUniqueSolutionError, NotSPDError

SPD_SYMMETRY_TOL = 1e-12

# Pade coefficients b_0..b_m and 1-norm thresholds for degrees 3, 5, 7, 9, 13
# (Higham 2005, "The scaling and squaring method for the matrix exponential
# revisited").
_PADE_COEFFS = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0, 960960.0,
         16380.0, 182.0, 1.0),
}
_PADE_THETA = {
    3: 1.495585217958292e-2,
    5: 2.539398330063230e-1,
    7: 9.504178996162932e-1,
    9: 2.097847961257068e0,
    13: 5.371920351148152e0,
}


def as_square(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite square float array or raise."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def symmetry_residual(a: np.ndarray) -> float:
    """Relative Frobenius asymmetry ``|a - a^T| / |a|`` (0 for the zero matrix)."""
    norm = np.linalg.norm(a)
    if norm == 0.0:
        return 0.0
    return float(np.linalg.norm(a - a.T) / norm)


def check_spd(a, name: str = "matrix", tol: float = SPD_SYMMETRY_TOL) -> np.ndarray:
    """Validate that ``a`` is symmetric positive definite and return it.

    Symmetry is checked in relative Frobenius norm against ``tol``; positive
    definiteness by attempting a Cholesky factorization.
    """
    a = as_square(a, name)
    if symmetry_residual(a) > tol:
        raise NotSPDError(f"{name} is not symmetric (relative asymmetry {symmetry_residual(a):.3e})")
    try:
        np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotSPDError(f"{name} is not positive definite") from exc
    return a


def is_spd(a, tol: float = SPD_SYMMETRY_TOL) -> bool:
    try:
        check_spd(a, tol=tol)
    except (NotSPDError, DimensionError, ValueError):
        return False
    return True


def logdet_spd(a: np.ndarray) -> float:
    """``log det a`` for SPD ``a`` via its Cholesky factor."""
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotSPDError("matrix is not positive definite") from exc
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


def spd_inverse(a: np.ndarray) -> np.ndarray:
    """Inverse of an SPD matrix, symmetrized."""
    inv = np.linalg.solve(a, np.eye(a.shape[0]))
    return 0.5 * (inv + inv.T)


def _pade(a: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    b = _PADE_COEFFS[m]
    ident = np.eye(a.shape[0])
    a2 = a @ a
    if m == 13:
        a4 = a2 @ a2
        a6 = a4 @ a2
        u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
                 + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
        v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
             + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident)
        return u, v
    powers = [ident, a2]
    while len(powers) <= m // 2:
        powers.append(powers[-1] @ a2)
    u = a @ sum(b[2 * k + 1] * powers[k] for k in range(m // 2 + 1))
    v = sum(b[2 * k] * powers[k] for k in range(m // 2 + 1))
    return u, v


def mat_exp(a) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a Pade approximant.

    Uses the lowest Pade degree in {3, 5, 7, 9} whose 1-norm threshold
    covers ``a``; otherwise scales ``a`` by ``2**-s`` so degree 13 applies
    and squares the result ``s`` times.
    """
    a = as_square(a)
    n = a.shape[0]
    if n == 0:
        return a.copy()
    norm1 = np.linalg.norm(a, 1)
    for m in (3, 5, 7, 9):
        if norm1 <= _PADE_THETA[m]:
            u, v = _pade(a, m)
            return np.linalg.solve(v - u, v + u)
    s = max(0, int(math.ceil(math.log2(norm1 / _PADE_THETA[13])))) if norm1 > 0 else 0
    u, v = _pade(a / 2.0**s, 13)
    r = np.linalg.solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    return r


def phi1(a) -> np.ndarray:
    """``phi_1(a) = sum_k a^k / (k+1)!``, so that ``a @ phi1(a) == expm(a) - I``.

    Read off the top-right block of ``expm([[a, I], [0, 0]])``; no inverse
    of ``a`` is formed, so singular ``a`` is fine.
    """
    a = as_square(a)
    n = a.shape[0]
    aug = np.zeros((2 * n, 2 * n))
    aug[:n, :n] = a
    aug[:n, n:] = np.eye(n)
    return mat_exp(aug)[:n, n:]


def solve_lyapunov(k, d) -> np.ndarray:
    """Solve ``k X + X k^T = d`` for ``X``.

    ``k`` must have spectrum in the open right half-plane, which makes the
    solution unique and (for SPD ``d``) SPD. Solved through the Kronecker
    system ``(k (x) I + I (x) k) vec(X) = vec(d)``; intended for small ``k``.
    """
    k = as_square(k, "k")
    d = check_spd(d, "d")
    n = k.shape[0]
    if d.shape != k.shape:
        raise DimensionError(f"k {k.shape} and d {d.shape} differ in shape")
    eig = np.linalg.eigvals(k)
    if np.min(eig.real) <= 0.0:
        raise NoUniqueSolutionError(
            f"k has an eigenvalue with non-positive real part ({np.min(eig.real):.3e}); "
            "Lyapunov solution not unique or not SPD")
    ident = np.eye(n)
    op = np.kron(k, ident) + np.kron(ident, k)
    x = np.linalg.solve(op, d.reshape(-1)).reshape(n, n)
    return 0.5 * (x + x.T)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(5)


def integrate_quadrature(f: Callable, lo: float, hi: float, panels: int = 1):
    """Composite 5-point Gauss-Legendre rule for ``int_lo^hi f(s) ds``.

    ``f`` may return a scalar or an array; the result has the same shape.
    """
    if panels < 1:
        raise ValueError("panels must be >= 1")
    edges = np.linspace(lo, hi, panels + 1)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        for node, weight in zip(_GL_NODES, _GL_WEIGHTS):
            total = total + (half * weight) * np.asarray(f(mid + half * node), dtype=float)
    if np.ndim(total) == 0:
        return float(total)
    return total


def rk4_integrate(field: Callable[[np.ndarray], np.ndarray], state0, t_end: float,
                  steps: int, check: Optional[Callable[[np.ndarray, float], None]] = None,
                  return_path: bool = False):
    """Classical fixed-step RK4 for the autonomous IVP ``x' = field(x)`` on ``[0, t_end]``.

    ``check(state, t)`` is called after every step and may raise to abort.
    With ``return_path=True`` returns the ``(steps + 1, dim)`` array of states.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    x = np.array(state0, dtype=float)
    h = t_end / steps
    path = [x.copy()] if return_path else None
    for i in range(steps):
        k1 = field(x)
        k2 = field(x + 0.5 * h * k1)
        k3 = field(x + 0.5 * h * k2)
        k4 = field(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = (i + 1) * h
        if not np.all(np.isfinite(x)):
            raise DivergenceError(f"non-finite state at step {i + 1} (t={t:.6g})", step=i + 1, time=t)
        if check is not None:
            check(x, t)
        if return_path:
            path.append(x.copy())
    if return_path:
        return np.array(path)
    return x
