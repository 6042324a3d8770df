"""Linear ridge readout trained on reservoir states."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionError, SingularSystemError


@dataclass(frozen=True)
class RidgeReadout:
    weights: np.ndarray
    intercept: np.ndarray
    reg: float = 0.0

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.weights, dtype=float))
        b = np.atleast_1d(np.asarray(self.intercept, dtype=float))
        if b.shape != (w.shape[0],):
            raise DimensionError(f"intercept {b.shape} does not match weights {w.shape}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ValueError("readout has non-finite entries")
        if self.reg < 0:
            raise ValueError("reg must be non-negative")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "intercept", b)


def _as_rows(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise DimensionError(f"{name} must be a sequence of vectors")
    return a


def fit(states, targets, reg: float = 0.0) -> RidgeReadout:
    """Ridge regression with an unpenalized intercept.

    States and targets are centered, then ``(X^T X + reg I) W^T = X^T Y`` is
    solved by Cholesky. With ``reg = 0`` a rank-deficient design raises
    ``SingularSystemError``.
    """
    x = _as_rows(states, "states")
    y = _as_rows(targets, "targets")
    if len(x) != len(y):
        raise DimensionError(f"{len(x)} states but {len(y)} targets")
    if reg < 0:
        raise ValueError("reg must be non-negative")
    x_mean = x.mean(axis=0)
    y_mean = y.mean(axis=0)
    xc = x - x_mean
    yc = y - y_mean
    gram = xc.T @ xc + reg * np.eye(x.shape[1])
    scale = max(np.abs(np.diag(gram)).max(initial=0.0), np.finfo(float).tiny)
    try:
        chol = scipy.linalg.cho_factor(gram)
    except np.linalg.LinAlgError:
        chol = None
    if chol is None or np.min(np.abs(np.diag(chol[0]))) ** 2 <= 1e-12 * scale:
        raise SingularSystemError("design matrix is rank deficient; use reg > 0")
    w = scipy.linalg.cho_solve(chol, xc.T @ yc).T
    return RidgeReadout(w, y_mean - w @ x_mean, reg)


def predict(r: RidgeReadout, x) -> np.ndarray:
    """``weights @ x + intercept``; ``x`` may be one state or a stack of rows."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != r.weights.shape[1]:
        raise DimensionError(f"state length {x.shape[-1]}, readout expects {r.weights.shape[1]}")
    return x @ r.weights.T + r.intercept


def objective(r: RidgeReadout, states, targets) -> float:
    x = _as_rows(states, "states")
    y = _as_rows(targets, "targets")
    resid = predict(r, x) - y
    return float(np.sum(resid ** 2) + r.reg * np.sum(r.weights ** 2))


def nrmse(predictions, targets):
    """RMSE over population standard deviation of the targets.

    1-D inputs give a float; 2-D inputs give one value per column.
    """
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(targets, dtype=float)
    if p.shape != t.shape:
        raise DimensionError(f"predictions {p.shape} vs targets {t.shape}")
    if len(t) < 2:
        raise ValueError("need at least two samples")
    std = t.std(axis=0)
    if np.any(std <= 0.0):
        raise ValueError("target variance is zero")
    out = np.sqrt(np.mean((p - t) ** 2, axis=0)) / std
    return float(out) if np.ndim(out) == 0 else out
