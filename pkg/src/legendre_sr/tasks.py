"""Experiment harness: data generation and row assembly for the CLI tasks.

Each ``*_rows`` function returns ``(header, rows)`` ready for CSV output.
All randomness comes from :mod:`legendre_sr.rng` streams keyed by the
config seed.
"""

from __future__ import annotations

import numpy as np

from . import rng as rng_mod
from .config import ExperimentConfig, GprSection, ReservoirSection
from .errors import ConeExitError, ConfigError, DimensionError, NotSPDError
from .expfam import (GaussianMoments, GaussianNatural, dual_gradient_residual, potential,
                     to_moments, to_natural)
from .legdyn import LtiStateSpace, OUProcessSpec, gpr_step, ou_flow_exact, ou_flow_natural
from .readout import fit, nrmse, predict
from .reservoir import (LinearPHamiltonianSpec, QuadraticHamiltonianSpec, build, hamiltonian_value,
                        random_linear_p_spec, random_quadratic_spec, run)


def _flat_names(prefix: str, d: int, cols: int | None = None) -> list[str]:
    if cols is None:
        return [f"{prefix}_{i}" for i in range(d)]
    return [f"{prefix}_{i}_{j}" for i in range(d) for j in range(cols)]


def _spec_error(exc: Exception, section: str) -> ConfigError:
    return ConfigError(f"{section}: {exc}")


def state_space_from(sec: GprSection) -> tuple[LtiStateSpace, GaussianNatural]:
    try:
        ss = LtiStateSpace(sec.a, sec.q, sec.h, sec.r)
        d = ss.state_dim
        m0 = np.zeros(d) if sec.m0 is None else sec.m0
        sigma0 = np.eye(d) if sec.sigma0 is None else sec.sigma0
        prior = to_natural(GaussianMoments(m0, sigma0))
        if len(sec.x0) != d:
            raise DimensionError(f"x0 has length {len(sec.x0)}, expected {d}")
    except (DimensionError, NotSPDError, ValueError) as exc:
        raise _spec_error(exc, "gpr") from None
    return ss, prior


def simulate_lti(ss: LtiStateSpace, x0, steps: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Sample ``U_k = A U_{k-1} + xi_k`` and ``y_k = H U_k + eps_k`` for ``k = 1..steps``.

    Process noise and observation noise use separate streams.
    """
    xi = rng_mod.gaussian(rng_mod.stream(seed, "process_noise"), ss.q_noise, steps)
    eps = rng_mod.gaussian(rng_mod.stream(seed, "observation_noise"), ss.r_noise, steps)
    x = np.asarray(x0, dtype=float)
    states = np.empty((steps, ss.state_dim))
    obs = np.empty((steps, ss.obs_dim))
    for k in range(steps):
        x = ss.a_ss @ x + xi[k]
        states[k] = x
        obs[k] = ss.h_obs @ x + eps[k]
    return states, obs


def kalman_natural_path(ss: LtiStateSpace, prior: GaussianNatural, obs: np.ndarray) -> list[GaussianNatural]:
    out = []
    theta = prior
    for y in obs:
        theta = gpr_step(theta, ss, y)
        out.append(theta)
    return out


def gpr_track_rows(cfg: ExperimentConfig):
    ss, prior = state_space_from(cfg.gpr)
    d, r = ss.state_dim, ss.obs_dim
    states, obs = simulate_lti(ss, cfg.gpr.x0, cfg.gpr.steps, cfg.seed)
    header = (["k"] + _flat_names("x_true", d) + _flat_names("y", r) + _flat_names("eta", d)
              + _flat_names("lambda", d, d) + _flat_names("m", d) + _flat_names("sigma", d, d)
              + ["psi", "dual_grad_residual"])
    rows = []
    for k, theta in enumerate(kalman_natural_path(ss, prior, obs), start=1):
        mom = to_moments(theta)
        rows.append([k, *states[k - 1], *obs[k - 1], *theta.eta, *theta.lam.ravel(), *mom.m,
                     *mom.sigma.ravel(), potential(theta), dual_gradient_residual(theta)])
    return header, rows


def ou_spec_from(cfg: ExperimentConfig) -> tuple[OUProcessSpec, GaussianMoments]:
    sec = cfg.ou
    try:
        ou = OUProcessSpec(sec.k, sec.mu, sec.diffusion)
        mom0 = GaussianMoments(sec.m0, sec.sigma0)
        if mom0.dim != ou.dim:
            raise DimensionError("m0 and OU dimensions differ")
    except (DimensionError, NotSPDError, ValueError) as exc:
        raise _spec_error(exc, "ou") from None
    return ou, mom0


def ou_flow_rows(cfg: ExperimentConfig):
    """One row per RK4 step: natural flow, exact flow (natural coordinates), discrepancy.

    A cone exit ends the table with a diagnostic row.
    """
    ou, mom0 = ou_spec_from(cfg)
    d = ou.dim
    theta0 = to_natural(mom0)
    horizon, steps = cfg.ou.horizon, cfg.ou.steps
    header = (["t"] + _flat_names("eta", d) + _flat_names("lambda", d, d)
              + _flat_names("eta_exact", d) + _flat_names("lambda_exact", d, d)
              + ["discrepancy", "status"])
    if horizon == 0:
        times = [0.0]
        path = [theta0]
        status = None
    else:
        times = [horizon * i / steps for i in range(steps + 1)]
        status = None
        try:
            path = ou_flow_natural(theta0, ou, horizon, steps, return_path=True)
        except ConeExitError as exc:
            path = []
            status = f"cone_exit t={exc.time:.6g}"
    rows = []
    for t, theta in zip(times, path):
        exact = to_natural(ou_flow_exact(mom0, ou, t))
        gap = max(np.max(np.abs(theta.eta - exact.eta)), np.max(np.abs(theta.lam - exact.lam)))
        rows.append([t, *theta.eta, *theta.lam.ravel(), *exact.eta, *exact.lam.ravel(), gap, "ok"])
    if status is not None:
        rows.append([float("nan")] * (len(header) - 1) + [status])
    return header, rows


def reservoir_spec_from(sec: ReservoirSection, kind: str, seed: int):
    gen = rng_mod.stream(seed, "reservoir")
    try:
        if kind == "quadratic":
            if sec.m_energy is not None:
                c = sec.c_couple if sec.c_couple is not None else np.zeros((len(sec.m_energy), sec.m))
                return QuadraticHamiltonianSpec(sec.m_energy, c, sec.dt)
            return random_quadratic_spec(sec.n, sec.m, gen, sec.dt)
        if sec.s is not None:
            n = len(sec.s)
            zeros = np.zeros((n, sec.m))
            return LinearPHamiltonianSpec(
                sec.s, sec.l if sec.l is not None else np.zeros((n, n)),
                sec.cq if sec.cq is not None else zeros, sec.cp if sec.cp is not None else zeros, sec.dt)
        return random_linear_p_spec(sec.n, sec.m, gen, sec.dt, sec.scale)
    except (DimensionError, NotSPDError, ValueError, TypeError) as exc:
        raise _spec_error(exc, "reservoir") from None


def sr_rows(cfg: ExperimentConfig, kind: str):
    """Drive a reservoir with configured or seeded Gaussian inputs; one row per state."""
    spec = reservoir_spec_from(cfg.reservoir, kind, cfg.seed)
    res = build(spec)
    m, n2 = res.input_dim, 2 * res.n
    sec = cfg.inputs
    if sec.values is not None:
        inputs = np.asarray(sec.values, dtype=float).reshape(len(sec.values), -1)
        if inputs.shape[1] != m:
            raise ConfigError(f"inputs.values: rows must have length {m}")
    else:
        inputs = sec.scale * rng_mod.box_muller(rng_mod.stream(cfg.seed, "inputs"), (sec.steps, m))
    if sec.x0 is not None:
        if len(sec.x0) != n2:
            raise ConfigError(f"inputs.x0: expected length {n2}")
        x0 = np.asarray(sec.x0, dtype=float)
    else:
        x0 = rng_mod.box_muller(rng_mod.stream(cfg.seed, "inputs", trial=1), (n2,))
    traj = run(res, x0, inputs)
    header = ["k"] + _flat_names("u", m) + _flat_names("x", n2) + ["hamiltonian"]
    rows = []
    for k, x in enumerate(traj.states):
        u = traj.inputs[k - 1] if k > 0 else np.full(m, np.nan)
        rows.append([k, *u, *x, hamiltonian_value(spec, x)])
    return header, rows


def windowed_states(res, inputs: np.ndarray, window: int) -> np.ndarray:
    """Reservoir state after driving from rest with the last ``window`` inputs, per time."""
    out = np.empty((len(inputs), 2 * res.n))
    for k in range(len(inputs)):
        x = np.zeros(2 * res.n)
        for u in inputs[max(0, k - window + 1):k + 1]:
            x = res.w @ x + res.w_in @ u
        out[k] = x
    return out


def readout_task(cfg: ExperimentConfig):
    """Fit a ridge readout from SR states to Kalman natural parameters.

    Returns ``(header, rows, passed)`` with one row per regularization value;
    ``passed`` means every fitted readout beats the persistence baseline on
    mean test NRMSE. Targets that are constant after washout (the converged
    precision) are listed in ``excluded_constant`` and not fitted.
    """
    sec = cfg.readout
    ss, prior = state_space_from(cfg.gpr)
    _, obs = simulate_lti(ss, cfg.gpr.x0, sec.steps, cfg.seed)
    path = kalman_natural_path(ss, prior, obs)
    targets = np.array([np.concatenate([t.eta, t.lam.ravel()]) for t in path])
    d = ss.state_dim
    names = _flat_names("eta", d) + _flat_names("lambda", d, d)

    res_sec = cfg.reservoir
    if res_sec.m != ss.obs_dim and res_sec.s is None:
        res_sec = ReservoirSection(**{**res_sec.__dict__, "m": ss.obs_dim})
    spec = reservoir_spec_from(res_sec, "linear_p", cfg.seed)
    res = build(spec)
    if res.input_dim != ss.obs_dim:
        raise ConfigError("reservoir: input dimension must equal the observation dimension")
    feats = windowed_states(res, obs, sec.window) if sec.window < sec.steps else run(res, np.zeros(2 * res.n), obs).states[1:]

    split = sec.washout + int(sec.train_fraction * (sec.steps - sec.washout))
    if split - sec.washout < 2 or sec.steps - split < 2:
        raise ConfigError("readout: train and test segments need at least two samples each")
    seg = targets[sec.washout:]
    spread = seg.std(axis=0)
    varying = spread > 1e-9 * np.maximum(1.0, np.abs(seg).max(axis=0))
    if not np.any(varying):
        raise ValueError("all targets have zero variance")
    y = targets[:, varying]
    kept = [nm for nm, v in zip(names, varying) if v]

    baseline = np.atleast_1d(nrmse(y[split - 1:-1], y[split:]))
    regs = sec.reg if isinstance(sec.reg, list) else [sec.reg]
    excluded = ";".join(nm for nm, v in zip(names, varying) if not v)
    header = (["reg", "nrmse_sr", "nrmse_persistence"] + [f"nrmse_sr_{nm}" for nm in kept]
              + [f"nrmse_persistence_{nm}" for nm in kept] + ["excluded_constant", "status"])
    rows = []
    passed = True
    for reg in regs:
        readout = fit(feats[sec.washout:split], y[sec.washout:split], reg)
        score = np.atleast_1d(nrmse(predict(readout, feats[split:]), y[split:]))
        beats = bool(score.mean() < baseline.mean())
        passed &= beats
        rows.append([reg, float(score.mean()), float(baseline.mean()), *score, *baseline, excluded,
                     "ok" if beats else "baseline_not_beaten"])
    return header, rows, passed
