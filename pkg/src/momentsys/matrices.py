r"""Small dense complex matrices: norms, inverses, spectra and Jordan data.

Matrices are plain ``numpy`` arrays of dtype ``complex``. Every function
accepts nested lists as well and validates squareness and finiteness.

The spectral tolerance used for eigenvalue membership and Jordan checks is

.. math:: \varepsilon_{spec}(M) = 10^{-9}\,(1 + \|M\|_1).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    ConvergenceError,
    DimensionMismatch,
    DomainError,
    HintRejected,
    IllConditioned,
    SingularMatrix,
)

SPEC_REL_TOL = 1e-9
PIVOT_REL_TOL = 1e-13
CLUSTER_REL_TOL = 1e-6
COMMUTE_REL_TOL = 1e-12
MAX_DIM = 64


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Validate and convert to a square finite complex array."""
    arr = np.array(M, dtype=complex)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise DimensionMismatch(f"{name} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite entries")
    return arr


def one_norm(M) -> float:
    """Induced 1-norm: the largest column sum of moduli.

    Vectors are treated as single columns, so this is also the vector 1-norm.
    """
    arr = np.asarray(M, dtype=complex)
    if arr.ndim <= 1:
        return float(np.sum(np.abs(arr)))
    return float(np.max(np.sum(np.abs(arr), axis=0)))


def batched_one_norm(stack) -> np.ndarray:
    """``one_norm`` of each matrix in a ``(k, n, n)`` stack."""
    return np.max(np.sum(np.abs(np.asarray(stack)), axis=-2), axis=-1)


def spec_tol(M) -> float:
    return SPEC_REL_TOL * (1.0 + one_norm(M))


def _lu_factor(arr):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        return scipy.linalg.lu_factor(arr, check_finite=False)


def _lu(M):
    arr = as_matrix(M)
    norm = one_norm(arr)
    lu, piv = _lu_factor(arr)
    pivots = np.abs(np.diag(lu))
    if norm == 0 or np.min(pivots) < PIVOT_REL_TOL * norm:
        raise SingularMatrix("matrix is numerically singular")
    return arr, lu, piv


def inverse(M) -> np.ndarray:
    """Inverse by LU with partial pivoting.

    Raises
    ------
    SingularMatrix
        If some pivot has modulus below ``1e-13 * one_norm(M)``.
    """
    arr, lu, piv = _lu(M)
    return scipy.linalg.lu_solve((lu, piv), np.eye(arr.shape[0], dtype=complex), check_finite=False)


def solve(M, rhs) -> np.ndarray:
    _, lu, piv = _lu(M)
    return scipy.linalg.lu_solve((lu, piv), np.asarray(rhs, dtype=complex), check_finite=False)


def det(M) -> complex:
    """Determinant from the LU factors (zero for numerically singular input)."""
    arr = as_matrix(M)
    lu, piv = _lu_factor(arr)
    sign = (-1) ** int(np.sum(piv != np.arange(arr.shape[0])))
    return complex(sign * np.prod(np.diag(lu)))


def commute(A, B) -> bool:
    """True iff ``||AB - BA||_1 <= 1e-12 (1 + ||A||_1 ||B||_1)``."""
    a, b = as_matrix(A, "A"), as_matrix(B, "B")
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")
    return one_norm(a @ b - b @ a) <= COMMUTE_REL_TOL * (1.0 + one_norm(a) * one_norm(b))


# ---------------------------------------------------------------------------
# spectra
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralData:
    """Eigenvalues with multiplicity, plus a basis of each eigenspace.

    ``eigenvectors[i]`` belongs to ``vector_eigenvalues[i]`` and has residual
    ``residuals[i] = ||M v - lambda v||_1 / ||v||_1``.
    """

    eigenvalues: tuple[complex, ...]
    eigenvectors: tuple[np.ndarray, ...]
    vector_eigenvalues: tuple[complex, ...]
    residuals: tuple[float, ...]

    def distinct(self) -> list[complex]:
        out: list[complex] = []
        for lam in self.vector_eigenvalues:
            if not any(lam == mu for mu in out):
                out.append(lam)
        return out


def _sort_key(z):
    return (round(z.real, 9), round(z.imag, 9))


def _cluster(values, tol):
    clusters: list[list[complex]] = []
    for v in sorted(values, key=_sort_key):
        for c in clusters:
            if abs(np.mean(c) - v) <= tol:
                c.append(v)
                break
        else:
            clusters.append([v])
    return clusters


def _normalize(v):
    k = int(np.argmax(np.abs(v) > 1e-8 * np.max(np.abs(v))))
    return v / v[k]


def null_space(M, tol) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical null space of ``M``."""
    _, s, vh = np.linalg.svd(M)
    rank = int(np.sum(s > tol))
    return vh[rank:].conj().T


def eigen(M) -> SpectralData:
    """Eigenvalues and eigenvectors of a square matrix (``n <= 64``).

    Eigenvalues closer than ``1e-6 (1 + ||M||_1)`` are merged into one cluster,
    represented by its mean; eigenvectors span the null space of
    ``M - lambda I`` for each cluster. Each vector is scaled so its first
    significant entry is 1.
    """
    arr = as_matrix(M)
    n = arr.shape[0]
    if n > MAX_DIM:
        raise DomainError(f"n = {n} exceeds {MAX_DIM}")
    try:
        vals = np.linalg.eigvals(arr)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(str(exc)) from exc
    norm = one_norm(arr)
    clusters = _cluster([complex(v) for v in vals], CLUSTER_REL_TOL * (1.0 + norm))
    eigenvalues, vectors, vlams, residuals = [], [], [], []
    eye = np.eye(n)
    for c in clusters:
        lam = complex(np.mean(c))
        if abs(lam.imag) <= 1e-14 * (1.0 + norm):
            lam = complex(lam.real, 0.0)
        if abs(lam.real) <= 1e-14 * (1.0 + norm):
            lam = complex(0.0, lam.imag)
        eigenvalues.extend([lam] * len(c))
        shifted = arr - lam * eye
        basis = null_space(shifted, 1e-8 * (1.0 + norm))
        if basis.shape[1] == 0:
            # fall back to the smallest singular direction
            basis = np.linalg.svd(shifted)[2][-1:].conj().T
        if basis.shape[1] > 1:
            # reduced echelon form gives reproducible, unit-like vectors
            basis = _echelon_basis(basis)
        for j in range(basis.shape[1]):
            v = _normalize(basis[:, j])
            vectors.append(v)
            vlams.append(lam)
            residuals.append(one_norm(arr @ v - lam * v) / one_norm(v))
    return SpectralData(tuple(eigenvalues), tuple(vectors), tuple(vlams), tuple(residuals))


def _echelon_basis(basis):
    # column space of ``basis`` in reduced column-echelon form
    t = basis.T.copy()
    rows, cols = t.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        k = r + int(np.argmax(np.abs(t[r:, c])))
        if abs(t[k, c]) < 1e-10:
            continue
        t[[r, k]] = t[[k, r]]
        t[r] = t[r] / t[r, c]
        for i in range(rows):
            if i != r:
                t[i] = t[i] - t[i, c] * t[r]
        r += 1
    return t[:r].T


def in_spectrum(value, M, tol: float | None = None) -> bool:
    """Whether ``value`` is within ``tol`` (default ``spec_tol(M)``) of an eigenvalue."""
    arr = as_matrix(M)
    tol = spec_tol(arr) if tol is None else tol
    # clustered values: a defective eigenvalue splits by ~sqrt(eps) in eigvals
    vals = np.array(eigen(arr).eigenvalues)
    return bool(np.min(np.abs(vals - complex(value))) <= tol)


# ---------------------------------------------------------------------------
# Jordan structure
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JordanDecomposition:
    """``M = P J P^{-1}`` with ``J`` block diagonal."""

    P: np.ndarray
    J: np.ndarray
    block_sizes: tuple[int, ...]
    block_eigenvalues: tuple[complex, ...]

    @property
    def block_offsets(self) -> list[int]:
        return list(np.cumsum((0,) + tuple(self.block_sizes))[:-1])


def jordan_matrix(block_sizes, block_eigenvalues) -> np.ndarray:
    n = int(sum(block_sizes))
    J = np.zeros((n, n), dtype=complex)
    k = 0
    for size, lam in zip(block_sizes, block_eigenvalues):
        for i in range(size):
            J[k + i, k + i] = lam
            if i + 1 < size:
                J[k + i, k + i + 1] = 1.0
        k += size
    return J


def _read_jordan_form(M):
    """Block data if ``M`` is exactly in Jordan form, else ``None``."""
    n = M.shape[0]
    if np.any(np.tril(M, -1) != 0) or np.any(np.triu(M, 2) != 0):
        return None
    sup = np.diag(M, 1)
    if np.any((sup != 0) & (sup != 1)):
        return None
    sizes, lams = [], []
    start = 0
    for i in range(n):
        if i == n - 1 or sup[i] == 0:
            block = np.diag(M)[start : i + 1]
            if np.any(block != block[0]):
                return None
            sizes.append(i + 1 - start)
            lams.append(complex(block[0]))
            start = i + 1
    return tuple(sizes), tuple(lams)


def _check_decomposition(M, P, J, tol_scale=1.0):
    tol = tol_scale * spec_tol(M) * one_norm(P)
    return one_norm(M @ P - P @ J) <= tol


def jordan(M, hint: JordanDecomposition | None = None) -> JordanDecomposition:
    """Jordan decomposition for ``n <= 2``, separated spectra, or a verified hint.

    Raises
    ------
    HintRejected
        The hint's ``J`` is not in Jordan form, ``P`` is singular, or
        ``||MP - PJ||_1`` exceeds ``eps_spec ||P||_1``.
    IllConditioned
        Eigenvalues cluster (``n > 2``) and no hint was given.
    """
    arr = as_matrix(M)
    n = arr.shape[0]
    if hint is not None:
        P = as_matrix(hint.P, "P")
        J = as_matrix(hint.J, "J")
        if P.shape != arr.shape or J.shape != arr.shape:
            raise HintRejected("hint has the wrong dimension")
        read = _read_jordan_form(J)
        if read is None or sum(hint.block_sizes) != n:
            raise HintRejected("hint J is not a Jordan matrix")
        if not np.allclose(J, jordan_matrix(hint.block_sizes, hint.block_eigenvalues), rtol=0, atol=0):
            raise HintRejected("hint J disagrees with its declared blocks")
        try:
            inverse(P)
        except SingularMatrix as exc:
            raise HintRejected("hint P is singular") from exc
        if not _check_decomposition(arr, P, J):
            raise HintRejected("||MP - PJ|| exceeds tolerance")
        return JordanDecomposition(P, J, tuple(hint.block_sizes), tuple(complex(v) for v in hint.block_eigenvalues))

    read = _read_jordan_form(arr)
    if read is not None:
        return JordanDecomposition(np.eye(n, dtype=complex), arr.copy(), read[0], read[1])

    sd = eigen(arr)
    distinct = sd.distinct()
    if len(distinct) == n:
        P = np.column_stack(sd.eigenvectors)
        J = np.diag(np.array(sd.vector_eigenvalues))
        return JordanDecomposition(P, J, (1,) * n, tuple(sd.vector_eigenvalues))

    if len(distinct) == 1 and len(sd.eigenvectors) == n:
        lam = distinct[0]
        P = np.column_stack(sd.eigenvectors)
        return JordanDecomposition(P, lam * np.eye(n, dtype=complex), (1,) * n, (lam,) * n)

    if n == 2:
        lam = distinct[0]
        N = arr - lam * np.eye(2)
        j = int(np.argmax(np.sum(np.abs(N), axis=0)))
        w = np.zeros(2, dtype=complex)
        w[j] = 1.0
        P = np.column_stack([N @ w, w])
        J = jordan_matrix((2,), (lam,))
        return JordanDecomposition(P, J, (2,), (lam,))

    raise IllConditioned("clustered eigenvalues; supply a Jordan hint")
