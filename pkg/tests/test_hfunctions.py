import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from momentsys import special
from momentsys.errors import DomainError, H3Unavailable, PoleProximity, TelescopeDivergence
from momentsys.hfunctions import (
    ClassicalH3,
    QH3,
    classical_H,
    provider_for,
    q_chain_defect,
    q_H_functions,
    q_log_checked,
    solve_additive_telescoping,
    theta_quotient,
)
from momentsys.moments import MomentSequence
from momentsys.series import LogPowerSolution, classical_derivative_logpower
from momentsys.structure import default_spiral_points


def test_classical_examples():
    assert classical_H(0, 2.5) == LogPowerSolution.power(2.5)
    assert classical_H(1, 2.5) == LogPowerSolution(2.5, {1: [1]})
    with pytest.raises(DomainError):
        classical_H(-1, 1)


@given(st.integers(1, 6), st.fractions(Fraction(1), Fraction(9), max_denominator=7))
def test_classical_chain_exact(p, mu):
    Hp, Hp1 = classical_H(p - 1, mu), classical_H(p, mu)
    assert classical_derivative_logpower(Hp1) == Hp1 * mu + Hp


def test_classical_provider():
    prov = provider_for(MomentSequence.factorial())
    assert isinstance(prov, ClassicalH3)
    assert prov.functions(2, 3) == [classical_H(0, 2), classical_H(1, 2), classical_H(2, 2)]
    assert prov.tilde() == LogPowerSolution(0, {1: [1]})
    assert provider_for(MomentSequence.catalan()) is None


def test_q_functions_shapes():
    Hs = q_H_functions(2.0, 1, 0)
    assert len(Hs) == 1
    assert_allclose(Hs[0](0.3 + 0.4j), 0.3 + 0.4j)
    assert len(q_H_functions(2.0, 2, 3)) == 4
    with pytest.raises(DomainError):
        q_H_functions(2.0, 1.5, 1)
    with pytest.raises(H3Unavailable):
        QH3(2.0).functions(2.5, 2)
    with pytest.raises(H3Unavailable):
        QH3(2.0).tilde()


@pytest.mark.parametrize("q,mu", [(2.0, 1), (2.0, 3), (1.5, 2), (3.0, 1)])
def test_q_chain_relation(q, mu):
    Hs = q_H_functions(q, mu, 4)
    pts = default_spiral_points(50, seed=1)
    for prev, H in zip(Hs, Hs[1:]):
        for z in pts:
            assert q_chain_defect(H, prev, z) <= 1e-8 * max(abs(H(z)), 1.0)


def test_q_eigenvalue_is_ratio():
    H = q_H_functions(2.0, 3, 1)[1]
    assert_allclose(H.eigenvalue, 7.0)
    assert_allclose(H.c, 1 + (2.0 - 1) * H.eigenvalue)


def test_multiplier_closed_form_matches_theta_quotient():
    for q, mu in [(2.0, 1), (2.0, 2), (3.0, 3)]:
        H = q_H_functions(q, mu, 1)[1]
        for z in default_spiral_points(10, seed=2):
            assert_allclose(H.multiplier(z), theta_quotient(q, H.c, z), rtol=1e-10)


@given(st.floats(1.5, 3.0), st.floats(0.5, 4.0), st.floats(0.2, 6.0))
def test_theta_quotient_multiplicative(q, cre, phi):
    c = cre * np.exp(0.3j)
    z = np.exp(1j * phi)
    assert_allclose(theta_quotient(q, c, q * z), c * theta_quotient(q, c, z), rtol=1e-9)


def test_q_log_pole_guard():
    with pytest.raises(PoleProximity):
        q_log_checked(2.0, 4.0)
    assert np.isfinite(q_log_checked(2.0, 3.0))


def test_theta_zero_guard():
    with pytest.raises(PoleProximity):
        theta_quotient(2.0, 1.0, -2.0)


def test_telescoping_decaying_and_divergent():
    q = 2.0
    R = lambda w: 1.0 / w  # noqa: E731
    z = 0.7 + 0.2j
    u = solve_additive_telescoping(R, q, z)
    uq = solve_additive_telescoping(R, q, q * z)
    assert_allclose(uq, u + R(z), rtol=1e-12)
    with pytest.raises(TelescopeDivergence):
        solve_additive_telescoping(lambda w: 1.0, q, z, max_steps=200)


def test_additive_equation_of_chain():
    # u = H_2 / M solves u(qz) = u(z) + (q-1) H_1(z) / M(qz) on spiral points
    q, mu = 2.0, 2
    H1, H2 = q_H_functions(q, mu, 1)
    for z in default_spiral_points(20, seed=3):
        u = lambda w: H2(w) / H2.multiplier(w)  # noqa: E731
        rhs = u(z) + (q - 1) * H1(z) / H2.multiplier(q * z)
        assert abs(u(q * z) - rhs) <= 1e-8 * max(abs(rhs), 1.0)
