import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from legendre_sr.errors import DimensionError, DivergenceError, NoUniqueSolutionError
from legendre_sr.numerics import (check_spd, integrate_quadrature, mat_exp, phi1, rk4_integrate,
                                  solve_lyapunov)
from legendre_sr.errors import NotSPDError


def taylor_exp(a, terms=60):
    out = np.eye(len(a))
    term = np.eye(len(a))
    for k in range(1, terms):
        term = term @ a / k
        out = out + term
    return out


small_mats = st.integers(1, 5).flatmap(
    lambda n: arrays(np.float64, (n, n), elements=st.floats(-1.0, 1.0)))


class TestMatExp:
    def test_zero(self):
        np.testing.assert_array_equal(mat_exp(np.zeros((2, 2))), np.eye(2))

    def test_rotation_against_taylor(self):
        a = np.array([[0, np.pi / 2], [-np.pi / 2, 0]])
        ref = taylor_exp(a)
        np.testing.assert_allclose(ref, [[0, 1], [-1, 0]], atol=1e-13)
        np.testing.assert_allclose(mat_exp(a), ref, atol=1e-12)

    def test_diagonal(self):
        np.testing.assert_allclose(mat_exp(np.diag([1.0, -1.0])), np.diag([math.e, 1 / math.e]),
                                   atol=1e-13)

    def test_non_square(self):
        with pytest.raises(DimensionError):
            mat_exp(np.zeros((2, 3)))

    def test_large_norm_matches_scipy(self, rng):
        a = rng.standard_normal((6, 6)) * 4
        ref = scipy.linalg.expm(a)
        assert np.linalg.norm(mat_exp(a) - ref) / np.linalg.norm(ref) < 1e-12

    def test_inverse_property(self, rng):
        for _ in range(100):
            n = rng.integers(1, 7)
            a = rng.standard_normal((n, n))
            a *= rng.uniform(0, 5) / np.linalg.norm(a, 2)
            assert np.linalg.norm(mat_exp(a) @ mat_exp(-a) - np.eye(n)) < 1e-9

    @given(small_mats)
    def test_flow_composition(self, a):
        np.testing.assert_allclose(mat_exp(a) @ mat_exp(a), mat_exp(2 * a), atol=1e-10, rtol=1e-10)


class TestPhi1:
    def test_zero(self):
        np.testing.assert_allclose(phi1(np.zeros((3, 3))), np.eye(3), atol=1e-15)

    def test_scalar(self):
        assert phi1(np.array([[1.0]]))[0, 0] == pytest.approx(math.e - 1, abs=1e-14)

    def test_identity_with_exp(self, rng):
        for _ in range(100):
            n = rng.integers(1, 6)
            a = rng.standard_normal((n, n))
            assert np.linalg.norm(a @ phi1(a) - (mat_exp(a) - np.eye(n))) < 1e-10

    def test_singular_argument(self):
        # nilpotent: phi1 = I + a/2
        a = np.array([[0.0, 1.0], [0.0, 0.0]])
        np.testing.assert_allclose(phi1(a), np.eye(2) + a / 2, atol=1e-15)


class TestLyapunov:
    def test_scalar(self):
        assert solve_lyapunov([[1.0]], [[2.0]])[0, 0] == pytest.approx(1.0, abs=1e-14)

    def test_identity(self):
        np.testing.assert_allclose(solve_lyapunov(np.eye(2), np.eye(2)), 0.5 * np.eye(2), atol=1e-14)

    def test_zero_eigenvalue(self):
        with pytest.raises(NoUniqueSolutionError):
            solve_lyapunov(np.diag([1.0, 0.0]), np.eye(2))

    def test_residual_and_scipy(self, rng):
        for _ in range(20):
            n = rng.integers(1, 6)
            g = rng.standard_normal((n, n))
            k = g @ g.T + 0.5 * np.eye(n) + (g - g.T)
            h = rng.standard_normal((n, n))
            d = h @ h.T + np.eye(n)
            x = solve_lyapunov(k, d)
            assert np.linalg.norm(k @ x + x @ k.T - d) / np.linalg.norm(d) < 1e-10
            np.testing.assert_allclose(x, scipy.linalg.solve_continuous_lyapunov(k, d), atol=1e-10)


class TestQuadrature:
    def test_constant(self):
        assert integrate_quadrature(lambda s: 1.0, 0.0, 1.0, 1) == pytest.approx(1.0, abs=1e-15)

    def test_square(self):
        assert integrate_quadrature(lambda s: s * s, 0.0, 1.0, 4) == pytest.approx(1 / 3, abs=1e-12)

    def test_exp(self):
        assert integrate_quadrature(math.exp, 0.0, 1.0, 8) == pytest.approx(math.e - 1, abs=1e-10)

    def test_array_valued(self):
        val = integrate_quadrature(lambda s: np.array([s, s ** 2]), 0.0, 2.0, 2)
        np.testing.assert_allclose(val, [2.0, 8 / 3], atol=1e-13)

    @given(st.floats(-3, 3), st.floats(-3, 3))
    def test_degree_nine_exact(self, lo, hi):
        f = lambda s: s ** 9 - 2 * s ** 4
        exact = (hi ** 10 - lo ** 10) / 10 - 2 * (hi ** 5 - lo ** 5) / 5
        assert integrate_quadrature(f, lo, hi, 1) == pytest.approx(exact, abs=1e-9)


class TestRk4:
    def test_zero_field(self):
        x0 = np.array([1.0, -2.0])
        np.testing.assert_array_equal(rk4_integrate(lambda x: np.zeros_like(x), x0, 3.0, 7), x0)

    def test_decay(self):
        out = rk4_integrate(lambda x: -x, np.array([1.0]), 1.0, 100)
        assert out[0] == pytest.approx(math.exp(-1), abs=1e-8)

    def test_unit_speed(self):
        assert rk4_integrate(lambda x: np.ones_like(x), np.array([0.0]), 2.0, 5)[0] == 2.0

    def test_fourth_order(self, rng):
        a = rng.standard_normal((3, 3))
        x0 = rng.standard_normal(3)
        exact = scipy.linalg.expm(a) @ x0
        errs = [np.linalg.norm(rk4_integrate(lambda x: a @ x, x0, 1.0, s) - exact) for s in (20, 40)]
        assert errs[0] / errs[1] >= 15

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_nan_reports_step(self):
        with pytest.raises(DivergenceError) as info:
            rk4_integrate(lambda x: x ** 2, np.array([1.0]), 10.0, 50)
        assert info.value.step is not None


class TestSpd:
    def test_rejects_asymmetric(self):
        with pytest.raises(NotSPDError):
            check_spd([[1.0, 0.5], [0.0, 1.0]])

    def test_rejects_indefinite(self):
        with pytest.raises(NotSPDError):
            check_spd(np.diag([1.0, -1.0]))
