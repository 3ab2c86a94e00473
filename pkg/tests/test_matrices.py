import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from momentsys import matrices as mx
from momentsys.errors import DimensionMismatch, HintRejected, SingularMatrix


def rand_complex(rng, n, m=None):
    m = n if m is None else m
    return rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))


def test_as_matrix_validation():
    with pytest.raises(DimensionMismatch):
        mx.as_matrix([[1, 2, 3], [4, 5, 6]])
    with pytest.raises((DimensionMismatch, ValueError)):
        mx.as_matrix([[np.nan]])


def test_one_norm_examples():
    assert mx.one_norm(np.eye(2)) == 1.0
    assert_allclose(mx.one_norm([[1, -2], [3j, 0]]), 4.0)
    assert_allclose(mx.one_norm([[1, -1], [0, 1]]), 2.0)


def test_one_norm_submultiplicative():
    rng = np.random.default_rng(3)
    for _ in range(200):
        n = rng.integers(1, 7)
        M, N = rand_complex(rng, n), rand_complex(rng, n)
        assert mx.one_norm(M @ N) <= mx.one_norm(M) * mx.one_norm(N) * (1 + 1e-12)


def test_inverse_examples():
    d = 1.7
    assert_allclose(mx.inverse([[d, -1], [0, d]]), [[1 / d, 1 / d**2], [0, 1 / d]], rtol=1e-14)
    assert_allclose(mx.inverse(np.eye(3)), np.eye(3))
    with pytest.raises(SingularMatrix):
        mx.inverse([[1, 1], [1, 1]])


def test_inverse_involution():
    rng = np.random.default_rng(4)
    for _ in range(50):
        n = rng.integers(1, 7)
        M = rand_complex(rng, n) + 3 * n * np.eye(n)
        assert_allclose(mx.inverse(mx.inverse(M)), M, atol=1e-9 * mx.one_norm(M))


def test_solve_and_det():
    M = np.array([[2.0, 1.0], [1.0, 3.0]])
    assert_allclose(mx.solve(M, [3.0, 4.0]), np.linalg.solve(M, [3.0, 4.0]))
    assert_allclose(mx.det(M), 5.0)


def test_eigen_examples():
    sd = mx.eigen(np.diag([1.0, 3.0]))
    assert_allclose(sorted(np.real(sd.eigenvalues)), [1, 3])
    sd = mx.eigen([[0, 1], [-2, 3]])
    assert_allclose(sorted(np.real(sd.eigenvalues)), [1, 2], rtol=1e-12)
    for v, lam in zip(sd.eigenvectors, sd.vector_eigenvalues):
        expected = np.array([1, 1]) if abs(lam - 1) < 1e-9 else np.array([1, 2])
        assert abs(np.linalg.det(np.column_stack([v, expected]))) < 1e-9 * np.linalg.norm(v)


def test_eigen_defective():
    sd = mx.eigen([[2.5, 1], [0, 2.5]])
    assert_allclose(sd.eigenvalues, [2.5, 2.5])
    assert len(sd.eigenvectors) == 1
    v = sd.eigenvectors[0]
    assert abs(v[1]) < 1e-12 * abs(v[0])


def test_eigen_trace_det_and_residuals():
    rng = np.random.default_rng(5)
    for _ in range(50):
        n = rng.integers(1, 7)
        M = rand_complex(rng, n)
        sd = mx.eigen(M)
        ev = np.asarray(sd.eigenvalues)
        assert_allclose(ev.sum(), np.trace(M), rtol=1e-8, atol=1e-8 * mx.one_norm(M))
        assert_allclose(np.prod(ev), np.linalg.det(M), rtol=1e-8)
        for v, lam in zip(sd.eigenvectors, sd.vector_eigenvalues):
            res = mx.one_norm((M @ v - lam * v)[:, None])
            assert res <= 1e-9 * (1 + mx.one_norm(M)) * mx.one_norm(v[:, None])


def test_in_spectrum():
    B = np.diag([1.0, 3.0])
    assert mx.in_spectrum(3.0, B)
    assert not mx.in_spectrum(2.0, B)


def test_jordan_examples():
    jd = mx.jordan([[0, 1], [-2, 3]])
    assert_allclose(np.diag(jd.J).real, [1, 2], rtol=1e-12)
    P = jd.P
    assert_allclose(P @ jd.J @ np.linalg.inv(P), [[0, 1], [-2, 3]], atol=1e-12)
    jd = mx.jordan([[2.0, 1.0], [0.0, 2.0]])
    assert_allclose(jd.P, np.eye(2))
    assert jd.block_sizes == (2,)
    jd = mx.jordan(np.diag([5.0, 5.0, 5.0]))
    assert_allclose(jd.J, np.diag([5.0, 5.0, 5.0]))
    assert jd.block_sizes == (1, 1, 1)


def test_jordan_non_normal_defective():
    # similar to a Jordan block but not in Jordan form
    S = np.array([[1.0, 2.0], [0.5, 3.0]])
    M = S @ np.array([[1.5, 1.0], [0.0, 1.5]]) @ np.linalg.inv(S)
    jd = mx.jordan(M)
    assert jd.block_sizes == (2,)
    assert_allclose(jd.P @ jd.J @ np.linalg.inv(jd.P), M, atol=1e-8 * (1 + mx.one_norm(M)))


def test_jordan_reconstruction_random():
    rng = np.random.default_rng(6)
    for _ in range(30):
        n = rng.integers(1, 6)
        M = rand_complex(rng, n)
        jd = mx.jordan(M)
        assert_allclose(jd.P @ jd.J @ np.linalg.inv(jd.P), M, atol=1e-8 * (1 + mx.one_norm(M)))


def test_jordan_hint():
    M = np.diag([1.0, 2.0, 2.0]) + np.diag([0.0, 1.0], 1)
    J = mx.jordan_matrix((1, 2), (1.0, 2.0))
    hint = mx.JordanDecomposition(np.eye(3), J, (1, 2), (1.0, 2.0))
    out = mx.jordan(M, hint)
    assert_allclose(out.J, J)
    bad = mx.JordanDecomposition(np.eye(3), mx.jordan_matrix((1, 2), (1.0, 3.0)), (1, 2), (1.0, 3.0))
    with pytest.raises(HintRejected):
        mx.jordan(M, bad)


def test_commute_examples():
    B = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert mx.commute(np.eye(2), B)
    assert not mx.commute([[0, 1], [0, 0]], [[1, 0], [0, 2]])
    assert mx.commute(B, B)


@given(st.integers(1, 5), st.integers(0, 2**31 - 1))
def test_polynomials_commute(n, seed):
    rng = np.random.default_rng(seed)
    B = rand_complex(rng, n)
    A = 0.3 * B @ B - 2 * B + 1.5 * np.eye(n)
    assert mx.commute(A, B)
