import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from momentsys.errors import BranchCutError, DimensionMismatch, DomainError
from momentsys.moments import MomentSequence, eval_m
from momentsys.series import (
    GeneralizedSeries,
    LogPowerSolution,
    cauchy_product,
    classical_derivative_logpower,
    evaluate,
    integer_nu_consistency,
    moment_derivative,
)

F = MomentSequence.factorial()
C = MomentSequence.catalan()
QF2 = MomentSequence.q_factorial(2)
GR2 = MomentSequence.gamma_ratio(2)
BUILTINS = [F, C, QF2, GR2, MomentSequence.gevrey(0.5)]

coef = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


def test_construction_rules():
    with pytest.raises(DimensionMismatch):
        GeneralizedSeries(0, [])
    with pytest.raises(DomainError):
        GeneralizedSeries(0, [np.inf])
    s = GeneralizedSeries(1.5, [[1, 2], [3, 4]])
    assert s.N == 1 and s.shape == (2,)
    assert_allclose(s.exponents(), [1.5, 2.5])


def test_addition_realigns_integer_offsets():
    a = GeneralizedSeries(1.0, [1.0, 2.0, 3.0])
    b = GeneralizedSeries(2.0, [10.0, 20.0])
    s = a + b
    assert s.nu == 1.0
    assert_allclose(s.coeffs, [1, 12, 23])
    with pytest.raises(DomainError):
        a + GeneralizedSeries(1.5, [1.0])


def test_json_round_trip():
    s = GeneralizedSeries(0.5 + 1j, [[1 + 2j, 3], [0, -1j]])
    back = GeneralizedSeries.from_json(s.to_json())
    assert back.nu == s.nu
    assert_allclose(back.coeffs, s.coeffs)
    lp = LogPowerSolution(2.5, {0: [1, 2], 2: [0.5]})
    assert LogPowerSolution.from_json(lp.to_json()) == LogPowerSolution(2.5, {0: [1, 2], 2: [0.5]})


def test_derivative_power_rule():
    d = moment_derivative(GeneralizedSeries.monomial(2.5), F)
    assert_allclose(d.nu, 1.5)
    assert_allclose(d.coeffs, [2.5])


@pytest.mark.parametrize("seq", BUILTINS, ids=str)
def test_derivative_fixes_truncated_e_series(seq):
    N = 12
    c = 1.0 / np.asarray(eval_m(seq, np.arange(N + 1, dtype=float)))
    d = moment_derivative(GeneralizedSeries(0, c), seq)
    assert d.N == N - 1
    assert_allclose(d.coeffs, c[:N], rtol=1e-12)


def test_derivative_q_factorial_square():
    # Jackson quotient of z^2 for q = 2 is (1 + q) z
    d = moment_derivative(GeneralizedSeries.monomial(2.0), QF2)
    assert_allclose(d.nu, 1.0)
    assert_allclose(d.coeffs, [3.0], rtol=1e-14)


def test_derivative_domain():
    with pytest.raises(DomainError):
        moment_derivative(GeneralizedSeries.monomial(0.5), F)


@given(st.sampled_from(BUILTINS), st.floats(1.0, 4.0), st.lists(coef, min_size=1, max_size=6),
       st.lists(coef, min_size=1, max_size=6), coef, coef)
def test_derivative_linear_and_lowers_exponent(seq, nu, ca, cb, alpha, beta):
    n = min(len(ca), len(cb))
    f = GeneralizedSeries(nu, ca[:n])
    g = GeneralizedSeries(nu, cb[:n])
    lhs = moment_derivative(alpha * f + beta * g, seq)
    rhs = alpha * moment_derivative(f, seq) + beta * moment_derivative(g, seq)
    assert lhs.nu == f.nu - 1
    assert_allclose(lhs.coeffs, rhs.coeffs, rtol=1e-12, atol=1e-12 * (1 + np.max(np.abs(lhs.coeffs))))


@pytest.mark.parametrize(
    "seq,nu,coeffs",
    [(F, 3, [1.0]), (C, 2, [1.0, 1.0, 1.0]), (QF2, 1, [1.0, 5.0])],
    ids=["factorial", "catalan", "qfactorial"],
)
def test_integer_nu_examples(seq, nu, coeffs):
    assert integer_nu_consistency(GeneralizedSeries(nu, coeffs), seq)


@given(st.sampled_from(BUILTINS), st.integers(1, 5), st.lists(st.floats(-5, 5), min_size=1, max_size=8))
def test_integer_nu_consistency_random(seq, nu, coeffs):
    assert integer_nu_consistency(GeneralizedSeries(nu, coeffs), seq, rtol=1e-10)


def test_integer_nu_rejects_fractional():
    with pytest.raises(DomainError):
        integer_nu_consistency(GeneralizedSeries(1.5, [1.0]), F)


def test_cauchy_identity():
    y = GeneralizedSeries(0.7, np.arange(8.0).reshape(4, 2))
    h = GeneralizedSeries(0, [np.eye(2)] + [np.zeros((2, 2))] * 3)
    assert_allclose(cauchy_product(h, y).coeffs, y.coeffs)


def test_cauchy_scalar_polynomial():
    out = cauchy_product(GeneralizedSeries(0, [1.0, 1.0, 0.0]), GeneralizedSeries(0.3, [1.0, 1.0, 0.0]))
    assert out.nu == 0.3
    assert_allclose(out.coeffs, [1, 2, 1])


def test_cauchy_shape_errors():
    with pytest.raises(DomainError):
        cauchy_product(GeneralizedSeries(1, [1.0]), GeneralizedSeries(0, [1.0]))
    with pytest.raises(DimensionMismatch):
        cauchy_product(GeneralizedSeries(0, [np.eye(2)]), GeneralizedSeries(0, [[1.0, 2.0, 3.0]]))


@given(st.integers(0, 2**31 - 1), coef)
def test_cauchy_bilinear(seed, c):
    rng = np.random.default_rng(seed)
    N = 5
    h1 = GeneralizedSeries(0, rng.normal(size=(N + 1, 2, 2)))
    h2 = GeneralizedSeries(0, rng.normal(size=(N + 1, 2, 2)))
    y1 = GeneralizedSeries(0.5, rng.normal(size=(N + 1, 2)))
    y2 = GeneralizedSeries(0.5, rng.normal(size=(N + 1, 2)))
    scale = 1 + abs(c)
    assert_allclose(cauchy_product(c * h1, y1).coeffs, c * cauchy_product(h1, y1).coeffs, atol=1e-12 * scale * 50)
    assert_allclose(cauchy_product(h1, c * y1).coeffs, c * cauchy_product(h1, y1).coeffs, atol=1e-12 * scale * 50)
    assert_allclose(
        cauchy_product(h1 + h2, y1 + y2).coeffs,
        (cauchy_product(h1, y1) + cauchy_product(h1, y2) + cauchy_product(h2, y1) + cauchy_product(h2, y2)).coeffs,
        atol=1e-11,
    )


def test_evaluate_examples():
    assert_allclose(evaluate(GeneralizedSeries.monomial(2), 3), 9)
    assert_allclose(evaluate(LogPowerSolution(1, {1: [1]}), math.e), math.e, rtol=1e-15)
    assert_allclose(evaluate(GeneralizedSeries.monomial(0.5), 4), 2)


def test_evaluate_branch_cut():
    with pytest.raises(BranchCutError):
        evaluate(GeneralizedSeries.monomial(0.5), -1.0)
    with pytest.raises(BranchCutError):
        evaluate(LogPowerSolution(1, {1: [1]}), -2.0)
    assert_allclose(evaluate(GeneralizedSeries.monomial(2), -2.0), 4.0)


def test_evaluate_array_and_vector():
    s = GeneralizedSeries(1.0, [[1.0, 0.0], [0.0, 1.0]])
    out = evaluate(s, np.array([1.0, 2.0, 3.0]))
    assert out.shape == (3, 2)
    assert_allclose(out[1], [2.0, 4.0])


def test_logpower_algebra():
    a = LogPowerSolution(2, {0: [1], 1: [2]})
    b = LogPowerSolution(2, {1: [-2]})
    assert (a + b) == LogPowerSolution.power(2)
    assert (a - a).is_zero()
    assert a.K == 1
    with pytest.raises(DomainError):
        a + LogPowerSolution.power(3)


def test_classical_derivative_examples():
    mu = Fraction(5, 2)
    H1 = LogPowerSolution.power(mu)
    H2 = LogPowerSolution(mu, {1: [1]})
    H3 = LogPowerSolution(mu, {2: [Fraction(1, 2)]})
    assert classical_derivative_logpower(H1) == H1 * mu
    assert classical_derivative_logpower(H2) == H2 * mu + H1
    assert classical_derivative_logpower(H3) == H3 * mu + H2


@given(st.floats(0.5, 3), st.integers(0, 3), st.floats(0.2, 3), st.floats(-2, 2))
def test_classical_derivative_numeric(mu, k, r, phi):
    f = LogPowerSolution(mu, {k: [1.0, 0.5]})
    z = r * cmath.exp(1j * phi)
    h = 1e-6 * abs(z)
    num = z * (evaluate(f, z + h) - evaluate(f, z - h)) / (2 * h)
    assert_allclose(evaluate(classical_derivative_logpower(f), z), num, rtol=1e-6, atol=1e-6)


@given(st.floats(1.0, 6.0), st.lists(st.floats(-3, 3), min_size=1, max_size=5))
def test_factorial_derivative_matches_classical(mu, coeffs):
    # z d/dz (z^mu poly) versus z * (moment derivative) on pure powers
    f = GeneralizedSeries(mu, coeffs)
    d = moment_derivative(f, F).times_z()
    lp = classical_derivative_logpower(LogPowerSolution(mu, {0: coeffs}))
    poly = np.zeros(len(coeffs), dtype=complex)
    if not lp.is_zero():
        poly[: len(lp.terms[0])] = lp.terms[0]
    assert_allclose(d.coeffs, poly, rtol=1e-12, atol=1e-12)
