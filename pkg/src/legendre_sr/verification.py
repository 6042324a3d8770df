"""Property suites over seeded random instances.

Each check returns the worst residual it saw; ``run_suite`` compares it
against a tolerance (strictly: pass iff ``residual < tolerance``) and
collects a :class:`VerificationReport`. Negative controls report 0 when
the expected failure is detected and 1 otherwise.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import expfam, legdyn, reservoir, symp
from .errors import NotAGraphError, NotGraphPreservingError
from .rng import stream


@dataclass
class CheckResult:
    residual: float
    tolerance: float
    passed: bool
    runtime: float

    def as_dict(self) -> dict:
        return {"residual": self.residual, "tolerance": self.tolerance, "pass": self.passed,
                "runtime": self.runtime}


@dataclass
class VerificationReport:
    checks: dict = field(default_factory=dict)

    @property
    def overall_pass(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def as_dict(self) -> dict:
        return {"checks": {k: v.as_dict() for k, v in self.checks.items()},
                "overall_pass": self.overall_pass}


# --- random instance helpers ------------------------------------------------

def random_natural(d: int, rng: np.random.Generator) -> expfam.GaussianNatural:
    return expfam.GaussianNatural(rng.standard_normal(d), reservoir.random_spd(d, rng))


def random_state_space(d: int, r: int, rng: np.random.Generator) -> legdyn.LtiStateSpace:
    a = rng.standard_normal((d, d))
    a *= 0.95 / max(1.0, np.max(np.abs(np.linalg.eigvals(a))))
    return legdyn.LtiStateSpace(a, reservoir.random_spd(d, rng, 0.2) * 0.5, rng.standard_normal((r, d)),
                                reservoir.random_spd(r, rng, 0.2))


def random_ou(d: int, rng: np.random.Generator) -> legdyn.OUProcessSpec:
    g = rng.standard_normal((d, d))
    k = reservoir.random_spd(d, rng, 0.5) + 0.3 * (g - g.T)
    return legdyn.OUProcessSpec(k, rng.standard_normal(d), reservoir.random_spd(d, rng, 0.3))


def _rel(a, b) -> float:
    return float(np.linalg.norm(a - b) / max(1.0, np.linalg.norm(b)))


# --- checks -----------------------------------------------------------------

def check_symplecticity(seed: int, count: int = 50) -> float:
    """Worst ``|W^T J W - J|_F / |J|_F`` over both builder families."""
    rng = stream(seed, "checks", 1)
    worst = 0.0
    for i in range(count):
        n = 1 + i % 8
        for spec in (reservoir.random_quadratic_spec(n, 2, rng),
                     reservoir.random_linear_p_spec(n, 2, rng)):
            w = reservoir.build(spec).w
            _, res = symp.is_symplectic(w)
            worst = max(worst, res / np.sqrt(2 * n))
    return worst


def check_generator_membership(seed: int, count: int = 100) -> float:
    rng = stream(seed, "checks", 2)
    worst = 0.0
    for i in range(count):
        n = 1 + i % 8
        j = symp.canonical_j(n)
        m = reservoir.random_spd(2 * n, rng)
        worst = max(worst, symp.is_hamiltonian_matrix(j @ m).residual)
        a, _ = reservoir.random_linear_p_spec(n, 1, rng).generator()
        worst = max(worst, symp.is_hamiltonian_matrix(a).residual)
    return worst


def check_energy_conservation(seed: int, count: int = 10, steps: int = 1000) -> float:
    rng = stream(seed, "checks", 3)
    worst = 0.0
    for i in range(count):
        spec = reservoir.random_quadratic_spec(1 + i % 4, 1, rng)
        res = reservoir.build_quadratic(spec)
        traj = reservoir.run(res, rng.standard_normal(2 * spec.n), np.zeros((steps, 1)))
        e0 = reservoir.energy(spec, traj.states[0])
        drift = max(abs(reservoir.energy(spec, x) - e0) for x in traj.states)
        worst = max(worst, drift / abs(e0))
    return worst


def _kalman_runs(seed: int, runs: int, steps: int):
    rng = stream(seed, "checks", 4)
    for i in range(runs):
        d = 1 + i % 4
        r = 1 + i % 2
        ss = random_state_space(d, r, rng)
        mom = expfam.GaussianMoments(rng.standard_normal(d), reservoir.random_spd(d, rng))
        ys = rng.standard_normal((steps, r))
        yield ss, mom, ys


def check_kalman_equivalence(seed: int, runs: int = 100, steps: int = 100) -> float:
    """Worst relative gap between natural-form and covariance-form filters."""
    worst = 0.0
    for ss, mom, ys in _kalman_runs(seed, runs, steps):
        theta = expfam.to_natural(mom)
        for y in ys:
            theta = legdyn.gpr_step(theta, ss, y)
            mom = legdyn.kalman_step_moments(mom, ss, y)
            ref = expfam.to_natural(mom)
            worst = max(worst, _rel(theta.eta, ref.eta), _rel(theta.lam, ref.lam))
    return worst


def check_strong_legendre(seed: int, runs: int = 100, steps: int = 100) -> float:
    """Worst gap between ``dual_params`` and the FD gradient of the potential along GPR runs."""
    worst = 0.0
    for ss, mom, ys in _kalman_runs(seed, runs, steps):
        theta = expfam.to_natural(mom)
        for y in ys:
            theta = legdyn.gpr_step(theta, ss, y)
            worst = max(worst, expfam.dual_gradient_residual(theta))
    return worst


def check_generator_identity(seed: int, thetas: int = 20, points: int = 100) -> float:
    rng = stream(seed, "checks", 5)
    worst = 0.0
    for i in range(thetas):
        d = 1 + i % 3
        ou = random_ou(d, rng)
        theta = random_natural(d, rng)
        for u in rng.standard_normal((points, d)) * 2.0:
            gap = legdyn.ou_generator_ratio(theta, ou, u) - legdyn.affine_generator_value(theta, ou, u)
            worst = max(worst, abs(gap))
    return worst


def check_stationary_drift(seed: int, count: int = 20) -> float:
    rng = stream(seed, "checks", 6)
    worst = 0.0
    for i in range(count):
        ou = random_ou(1 + i % 3, rng)
        drift = legdyn.ou_drift(legdyn.ou_stationary(ou), ou)
        worst = max(worst, float(np.sqrt(np.sum(drift.a_eta ** 2) + np.sum(drift.a_lambda ** 2))))
    return worst


def check_generator_zero_mean(seed: int, count: int = 20, nodes: int = 64) -> float:
    """``E_theta[L* p / p]`` by Gauss-Hermite quadrature in one dimension."""
    rng = stream(seed, "checks", 7)
    x, w = np.polynomial.hermite.hermgauss(nodes)
    worst = 0.0
    for _ in range(count):
        ou = random_ou(1, rng)
        theta = random_natural(1, rng)
        mom = expfam.to_moments(theta)
        scale = np.sqrt(2.0 * mom.sigma[0, 0])
        vals = [legdyn.ou_generator_ratio(theta, ou, [mom.m[0] + scale * xi]) for xi in x]
        worst = max(worst, abs(float(np.dot(w, vals)) / np.sqrt(np.pi)))
    return worst


def check_ou_semigroup(seed: int, count: int = 20, steps: int = 200) -> float:
    rng = stream(seed, "checks", 8)
    worst = 0.0
    for i in range(count):
        d = 1 + i % 3
        ou = random_ou(d, rng)
        mom0 = expfam.GaussianMoments(rng.standard_normal(d), reservoir.random_spd(d, rng))
        t = float(rng.uniform(0.1, 2.0))
        flow = legdyn.ou_flow_natural(expfam.to_natural(mom0), ou, t, steps)
        exact = expfam.to_natural(legdyn.ou_flow_exact(mom0, ou, t))
        worst = max(worst, legdyn.natural_distance(flow, exact))
    return worst


def _normal_form_reports(seed: int, count: int):
    rng = stream(seed, "checks", 9)
    for i in range(count):
        spec = reservoir.random_linear_p_spec(1 + i % 4, 1 + i % 2, rng)
        yield reservoir.verify_main_theorem(spec, rng.standard_normal(spec.input_dim), 50,
                                            seed=int(rng.integers(2**31)))


def check_normal_form(seed: int, count: int = 20) -> dict:
    """Worst reconstruction, fiber-gradient and transported-Hessian-asymmetry errors."""
    out = {"reconstruction": 0.0, "fiber_gradient": 0.0, "transport_symmetry": 0.0}
    for rep in _normal_form_reports(seed, count):
        if not rep.decomposed:
            return {k: float("inf") for k in out}
        out["reconstruction"] = max(out["reconstruction"], rep.reconstruction_error)
        out["fiber_gradient"] = max(out["fiber_gradient"], rep.fiber_gradient_error)
        out["transport_symmetry"] = max(out["transport_symmetry"], rep.transport_asymmetry)
    return out


def check_decomposition_roundtrip(seed: int, count: int = 100, points: int = 50) -> float:
    rng = stream(seed, "checks", 10)
    worst = 0.0
    for i in range(count):
        amap = symp.random_graph_preserving(1 + i % 4, rng)
        decomp = symp.decompose_graph_preserving(amap)
        pts = rng.uniform(-1.0, 1.0, size=(points, 2 * amap.n))
        worst = max(worst, symp.reconstruction_error(amap, decomp, pts))
    return worst


def check_sampled_graph_transport(seed: int, count: int = 10) -> float:
    rng = stream(seed, "checks", 11)
    worst = 0.0
    for _ in range(count):
        amap = symp.random_graph_preserving(2, rng, scale=0.5)
        rep = symp.verify_sampled_graph_transport(amap, symp.log_sum_exp_gradient, (-2.0, 2.0), 20,
                                                  seed=int(rng.integers(2**31)), fd_step=1e-4)
        worst = max(worst, rep.max_asymmetry)
    return worst


def check_negative_controls(seed: int) -> dict:
    j = symp.canonical_j(1)
    jmap = symp.AffineSymplecticMap(j, np.zeros(2))
    out = {}
    try:
        symp.decompose_graph_preserving(jmap)
        out["j_not_decomposable"] = 1.0
    except NotGraphPreservingError:
        out["j_not_decomposable"] = 0.0
    try:
        symp.transport_quadratic_graph(jmap, symp.QuadraticPotential(np.zeros((1, 1)), np.zeros(1)))
        out["j_zero_potential_not_graph"] = 1.0
    except NotAGraphError:
        out["j_zero_potential_not_graph"] = 0.0
    rng = stream(seed, "checks", 12)
    diag = np.diag(rng.uniform(1.5, 3.0, size=2))
    c = symp.conformal_factor(diag)
    out["diagonal_conformal_factor"] = abs(c - np.linalg.det(diag)) if c is not None and c != 1.0 else 1.0
    return out


def check_frame_preservation(seed: int, maps: int = 50, frames: int = 50) -> float:
    rng = stream(seed, "checks", 13)
    worst = 0.0
    for i in range(maps):
        n = 1 + i % 5
        w = symp.random_symplectic(n, rng)
        for _ in range(frames):
            frame = symp.random_lagrangian_frame(n, int(rng.integers(2**31)))
            chk = symp.is_lagrangian_frame(symp.map_frame(w, frame), tol=np.inf)
            if chk.reason:
                return float("inf")
            worst = max(worst, chk.residual)
    return worst


def check_readout_smoke(seed: int) -> float:
    """Ratio of SR readout NRMSE to the persistence baseline (worst over regs); < 1 passes."""
    from .config import ExperimentConfig
    from .tasks import readout_task

    _, rows, _ = readout_task(ExperimentConfig(task="readout-task", seed=seed))
    ratios = [row[1] / row[2] for row in rows]
    return float(max(ratios))


DEFAULT_TOLERANCES = {
    "symplecticity": 1e-9,
    "generator_membership": 1e-12,
    "energy_conservation": 1e-9,
    "kalman_equivalence": 1e-10,
    "strong_legendre": 1e-5,
    "generator_identity": 1e-10,
    "stationary_drift": 1e-10,
    "generator_zero_mean": 1e-8,
    "ou_semigroup": 1e-6,
    "normal_form.reconstruction": 1e-8,
    "normal_form.fiber_gradient": 1e-5,
    "normal_form.transport_symmetry": 1e-9,
    "decomposition_roundtrip": 1e-9,
    "sampled_graph_transport": 1e-5,
    "negative_controls.j_not_decomposable": 0.5,
    "negative_controls.j_zero_potential_not_graph": 0.5,
    "negative_controls.diagonal_conformal_factor": 1e-12,
    "frame_preservation": 1e-9,
    "readout_smoke": 1.0,
}

SUITE: dict[str, Callable] = {
    "symplecticity": check_symplecticity,
    "generator_membership": check_generator_membership,
    "energy_conservation": check_energy_conservation,
    "kalman_equivalence": check_kalman_equivalence,
    "strong_legendre": check_strong_legendre,
    "generator_identity": check_generator_identity,
    "stationary_drift": check_stationary_drift,
    "generator_zero_mean": check_generator_zero_mean,
    "ou_semigroup": check_ou_semigroup,
    "normal_form": check_normal_form,
    "decomposition_roundtrip": check_decomposition_roundtrip,
    "sampled_graph_transport": check_sampled_graph_transport,
    "negative_controls": check_negative_controls,
    "frame_preservation": check_frame_preservation,
    "readout_smoke": check_readout_smoke,
}


def run_suite(seed: int = 42, tolerances: dict | None = None, global_tol: float | None = None,
              only: list[str] | None = None) -> VerificationReport:
    """Run the named checks (all by default) and compare against tolerances.

    ``global_tol`` replaces every tolerance; ``tolerances`` overrides by name
    (a bare suite name also applies to its sub-checks).
    """
    tolerances = tolerances or {}
    report = VerificationReport()
    for name, check in SUITE.items():
        if only is not None and name not in only:
            continue
        start = time.perf_counter()
        value = check(seed)
        elapsed = time.perf_counter() - start
        items = value.items() if isinstance(value, dict) else [(None, value)]
        for sub, residual in items:
            key = name if sub is None else f"{name}.{sub}"
            if global_tol is not None:
                tol = global_tol
            else:
                tol = tolerances.get(key, tolerances.get(name, DEFAULT_TOLERANCES[key]))
            report.checks[key] = CheckResult(float(residual), float(tol), bool(residual < tol), elapsed)
    return report

