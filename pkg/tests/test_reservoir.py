import numpy as np
import pytest
import scipy.integrate
from hypothesis import given, strategies as st

from legendre_sr.numerics import mat_exp
from legendre_sr.reservoir import (LinearPHamiltonianSpec, QuadraticHamiltonianSpec, base_flow, build,
                                   build_linear_p, build_quadratic, chi_t_value, energy, hamiltonian_value,
                                   random_linear_p_spec, random_quadratic_spec, run, step,
                                   verify_main_theorem)
from legendre_sr.symp import (decompose_graph_preserving, is_hamiltonian_matrix, is_symplectic,
                              transport_quadratic_graph, QuadraticPotential)

seeds = st.integers(0, 2**32 - 1)
ROT = QuadraticHamiltonianSpec(np.eye(2), np.zeros((2, 1)), np.pi / 2)


def nilpotent(t, l=1.0, cq=0.0, cp=0.0):
    return LinearPHamiltonianSpec([[0.0]], [[l]], [[cq]], [[cp]], t)


class TestBuilders:
    def test_rotation(self):
        res = build_quadratic(ROT)
        np.testing.assert_allclose(res.w, [[0, 1], [-1, 0]], atol=1e-15)
        assert np.abs(res.w_in).max() == 0.0

    def test_small_dt(self, rng):
        spec = QuadraticHamiltonianSpec(np.diag([2.0, 1.0]), [[1.0], [0.5]], 1e-8)
        res = build_quadratic(spec)
        assert np.abs(res.w - np.eye(2)).max() < 1e-7 and np.abs(res.w_in).max() < 1e-7

    def test_nilpotent(self):
        res = build_linear_p(nilpotent(2.5))
        np.testing.assert_allclose(res.w, [[1, 0], [-2.5, 1]], atol=1e-15)

    def test_input_matrix_against_quadrature(self, rng):
        spec = random_quadratic_spec(2, 2, rng, dt=0.7)
        res = build(spec)
        ref = scipy.integrate.quad_vec(lambda s: mat_exp(res.a_gen * s), 0.0, 0.7, epsabs=1e-13)[0]
        b = -np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]]) @ spec.c_couple
        np.testing.assert_allclose(res.w_in, ref @ b, atol=1e-11)

    def test_asymmetric_l(self):
        with pytest.raises(TypeError):
            LinearPHamiltonianSpec(np.eye(2), [[1.0, 1.0], [0.0, 1.0]], np.zeros((2, 1)), np.zeros((2, 1)))

    @given(seeds, st.integers(1, 8))
    def test_properties(self, seed, n):
        rng = np.random.default_rng(seed)
        for spec in (random_quadratic_spec(n, 2, rng), random_linear_p_spec(n, 2, rng)):
            res = build(spec)
            assert is_symplectic(res.w).ok
            assert is_hamiltonian_matrix(res.a_gen, 1e-12).ok
        assert np.linalg.norm(res.w[:n, n:]) < 1e-10
        a = res.a_gen * spec.dt
        np.testing.assert_allclose(mat_exp(a) @ mat_exp(a), mat_exp(2 * a), atol=1e-10)

    @given(seeds)
    def test_driven_map_stays_legendre(self, seed):
        rng = np.random.default_rng(seed)
        spec = random_linear_p_spec(3, 2, rng)
        amap = build(spec).affine_map(rng.standard_normal(2))
        p = rng.standard_normal((3, 3))
        out = transport_quadratic_graph(amap, QuadraticPotential(p + p.T, rng.standard_normal(3)))
        assert out.n == 3
        decompose_graph_preserving(amap)


class TestEvolution:
    def test_step_rotation(self):
        np.testing.assert_allclose(step(build(ROT), [1.0, 0.0], [0.0]), [0.0, -1.0], atol=1e-15)

    def test_step_origin(self, rng):
        res = build(random_linear_p_spec(2, 1, rng))
        assert np.all(step(res, np.zeros(4), [0.0]) == 0.0)

    def test_run_empty(self):
        traj = run(build(ROT), [1.0, 2.0], np.zeros((0, 1)))
        np.testing.assert_array_equal(traj.states, [[1.0, 2.0]])

    def test_energy(self):
        assert energy(ROT, [0.0, 0.0]) == 0.0
        assert energy(ROT, [1.0, 0.0]) == 0.5

    def test_energy_conserved_undriven(self, rng):
        spec = random_quadratic_spec(3, 1, rng)
        traj = run(build(spec), rng.standard_normal(6), np.zeros((1000, 1)))
        e = [energy(spec, x) for x in traj.states]
        assert np.max(np.abs(np.array(e) - e[0])) / e[0] < 1e-9

    def test_hamiltonian_value_linear_p(self):
        spec = LinearPHamiltonianSpec([[2.0]], [[3.0]], [[1.0]], [[0.5]])
        # p S q + q L q / 2 - q Cq u - p Cp u at q=1, p=2, u=1
        assert hamiltonian_value(spec, [1.0, 2.0], [1.0]) == pytest.approx(4 + 1.5 - 1 - 1)


class TestChi:
    def test_closed_form(self):
        assert chi_t_value(nilpotent(1.0), [0.0], 1.0, [2.0]) == pytest.approx(-2.0, abs=1e-13)

    def test_zero_time(self, rng):
        spec = random_linear_p_spec(2, 1, rng)
        assert chi_t_value(spec, [1.0], 0.0, [0.3, 0.4]) == 0.0

    def test_zero_potential(self, rng):
        spec = LinearPHamiltonianSpec(rng.standard_normal((2, 2)), np.zeros((2, 2)), np.zeros((2, 1)),
                                      rng.standard_normal((2, 1)))
        assert chi_t_value(spec, [1.3], 0.8, [0.3, -0.4]) == 0.0

    def test_against_adaptive_quadrature(self, rng):
        spec = random_linear_p_spec(3, 2, rng)
        u, q, t = rng.standard_normal(2), rng.standard_normal(3), 0.9

        def potential(tau):
            x = base_flow(spec, u, tau - t, q)
            return 0.5 * x @ spec.l_mat @ x - x @ spec.cq @ u

        ref = -scipy.integrate.quad(potential, 0.0, t, epsabs=1e-13, epsrel=1e-13)[0]
        assert chi_t_value(spec, u, t, q) == pytest.approx(ref, abs=1e-11)

    def test_base_flow_inverse(self, rng):
        spec = random_linear_p_spec(3, 1, rng)
        q = rng.standard_normal(3)
        back = base_flow(spec, [0.7], -0.5, base_flow(spec, [0.7], 0.5, q))
        np.testing.assert_allclose(back, q, atol=1e-13)


class TestMainTheorem:
    def test_nilpotent_case(self):
        rep = verify_main_theorem(nilpotent(1.0), [0.0], 20)
        assert rep.passed()
        dec = decompose_graph_preserving(build(nilpotent(1.0)).affine_map([0.0]))
        assert dec.x_hess[0, 0] == pytest.approx(-1.0)

    def test_zero_potential_is_pure_lift(self, rng):
        spec = LinearPHamiltonianSpec(rng.standard_normal((2, 2)), np.zeros((2, 2)), np.zeros((2, 1)),
                                      np.zeros((2, 1)))
        dec = decompose_graph_preserving(build(spec).affine_map([0.0]))
        assert np.abs(dec.x_hess).max() < 1e-12 and np.abs(dec.y_lin).max() < 1e-12

    @given(seeds, st.integers(1, 4), st.integers(1, 2))
    def test_random(self, seed, n, m):
        rng = np.random.default_rng(seed)
        spec = random_linear_p_spec(n, m, rng, dt=float(rng.uniform(0.2, 1.5)))
        rep = verify_main_theorem(spec, rng.standard_normal(m), 20, seed=seed)
        assert rep.passed(), rep
