import math

import numpy as np
import pytest
import scipy.special as sc
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from momentsys import special
from momentsys.errors import DomainError


def direct_theta(q, z, nmax=60):
    n = np.arange(-nmax, nmax + 1)
    return complex(np.sum(q ** (-n * (n - 1) / 2.0) * complex(z) ** n))


def q_factorial_product(q, p):
    out = 1.0
    for k in range(1, p + 1):
        out *= (q**k - 1) / (q - 1)
    return out


class TestLnGamma:
    def test_trivial_values(self):
        assert_allclose(special.ln_gamma(1.0), 0.0, atol=1e-14)
        assert_allclose(special.ln_gamma(5.0), math.log(24.0), rtol=1e-14)

    def test_half(self):
        assert_allclose(special.ln_gamma(0.5 + 0j), math.log(math.sqrt(math.pi)), rtol=1e-12)

    @given(st.floats(0.05, 60), st.floats(-40, 40))
    def test_matches_scipy(self, x, y):
        z = complex(x, y)
        got = complex(special.ln_gamma(z))
        ref = complex(sc.loggamma(z))
        assert abs(got.real - ref.real) <= 1e-11 * max(1.0, abs(ref))
        # imaginary parts may differ by the branch of log, compare exp(i*.)
        assert abs(np.exp(1j * got.imag) - np.exp(1j * ref.imag)) <= 1e-10 * max(1.0, abs(ref))

    def test_reflection_region(self):
        for z in (-0.5, -2.5 + 0.3j, 0.1 - 3j):
            assert_allclose(np.exp(special.ln_gamma(z)), sc.gamma(z), rtol=1e-11)

    def test_pole(self):
        with pytest.raises(DomainError):
            special.ln_gamma(-3.0)

    def test_recurrence_random(self):
        rng = np.random.default_rng(1)
        z = rng.uniform(0.5, 10, 100) + 1j * rng.uniform(-5, 5, 100)
        lhs = np.exp(special.ln_gamma(z + 1))
        rhs = z * np.exp(special.ln_gamma(z))
        assert_allclose(lhs, rhs, rtol=1e-10)

    def test_vectorized_shape(self):
        out = special.ln_gamma(np.array([[1.0, 2.0], [3.0, 4.0]]))
        assert np.shape(out) == (2, 2)


class TestQGamma:
    @pytest.mark.parametrize("q,z,expected", [(2, 4, 21.0), (2, 1, 1.0), (3, 3, 4.0)])
    def test_examples(self, q, z, expected):
        assert_allclose(special.q_gamma(q, z), expected, rtol=1e-12)

    @pytest.mark.parametrize("q", [1.5, 2.0, 3.0])
    def test_integer_values_are_q_factorials(self, q):
        for p in range(21):
            assert_allclose(special.q_gamma(q, p + 1), q_factorial_product(q, p), rtol=1e-10)

    @pytest.mark.parametrize("q", [1.5, 2.0, 3.0])
    def test_ratio_is_bracket(self, q):
        for mu in range(2, 11):
            got = special.q_gamma(q, mu) / special.q_gamma(q, mu - 1)
            assert_allclose(got, special.q_bracket(q, mu), rtol=1e-10)

    @given(st.floats(1.2, 4.0), st.floats(0.3, 8.0), st.floats(-2, 2))
    def test_functional_equation(self, q, x, y):
        # Gamma_q(z+1) = [z]_q Gamma_q(z) with [z]_q = (q^z - 1)/(q - 1)
        z = complex(x, y)
        lhs = special.q_gamma(q, z + 1)
        rhs = (q**z - 1) / (q - 1) * special.q_gamma(q, z)
        assert_allclose(lhs, rhs, rtol=1e-10)

    def test_rejects_bad_q(self):
        with pytest.raises(DomainError):
            special.q_gamma(1.0, 2.0)


class TestQBracket:
    def test_examples(self):
        assert_allclose(special.q_bracket(2, 3), 3.0)
        assert_allclose(special.q_bracket(2.7, 1), 0.0, atol=1e-15)
        assert_allclose(special.q_bracket(3, 2), 1.0)

    def test_matches_gamma_quotient(self):
        assert_allclose(special.q_bracket(2, 3), special.q_gamma(2, 3) / special.q_gamma(2, 2), rtol=1e-12)


class TestTheta:
    def test_value_q2(self):
        assert_allclose(special.theta_q(2, 1), direct_theta(2, 1), rtol=1e-13)
        assert_allclose(special.theta_q(2, 1).real, 3.28326, rtol=1e-5)

    def test_value_q4(self):
        # direct summation: 2 * (1 + 1/4 + 1/64 + ...) = 2.531740...
        assert_allclose(special.theta_q(4, 1), direct_theta(4, 1), rtol=1e-13)
        assert_allclose(special.theta_q(4, 1).real, 2.5317401, rtol=1e-7)

    def test_functional_point(self):
        assert_allclose(special.theta_q(2, 2 * 0.7), 2 * 0.7 * special.theta_q(2, 0.7), rtol=1e-12)

    def test_functional_annulus(self):
        rng = np.random.default_rng(2)
        r = 10 ** rng.uniform(-1, 1, 50)
        z = r * np.exp(1j * rng.uniform(-np.pi, np.pi, 50))
        for q in (1.5, 2.0, 4.0):
            lhs = special.theta_q(q, q * z)
            rhs = q * z * special.theta_q(q, z)
            assert_allclose(lhs, rhs, rtol=1e-10)

    @given(st.floats(1.3, 5), st.floats(0.1, 10), st.floats(-3.1, 3.1))
    def test_against_direct_sum(self, q, r, phi):
        z = r * np.exp(1j * phi)
        n = np.arange(-120, 121)
        # cancellation near the zeros -q^k: measure against the sum of |terms|
        scale = float(np.sum(q ** (-n * (n - 1) / 2.0) * r**n))
        assert abs(special.theta_q(q, z) - direct_theta(q, z, 120)) <= 1e-13 * scale


class TestQLog:
    @given(st.floats(1.5, 4), st.floats(0.2, 5), st.floats(0.2, 3.0))
    def test_shift(self, q, r, phi):
        z = r * np.exp(1j * phi)
        assert_allclose(special.q_log(q, q * z), special.q_log(q, z) + 1, rtol=1e-8, atol=1e-8)
