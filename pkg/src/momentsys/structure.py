r"""Structural transforms and the generalized matrix power :math:`z_m^B`.

Jordan reduction
    With :math:`B = PJP^{-1}` and :math:`\tilde A = P^{-1}AP`, :math:`Y`
    solves :math:`z\partial_m Y = (zA+B)Y` iff :math:`P^{-1}Y` solves
    :math:`z\partial_m y = (z\tilde A + J)y`.

Change of variable
    For commuting :math:`A, B` and any :math:`\lambda`, :math:`y = h\tilde y`
    with :math:`\tilde y` a solution for :math:`A - \lambda I`. With
    :math:`r_k = r(k+\mu)`,
    :math:`\hat s_0 = I`,
    :math:`\hat s_k = \prod_{i=0}^{k-1}(r_{k-i}I - B)^{-1}(A-\lambda I)` and

    .. math::

        (r_p - r_0)\,h_p = \sum_{j=0}^{p-1} h_j\bigl(\lambda\hat s_{p-j-1}
        - (r_p - r_{p-j})\,\hat s_{p-j}\bigr), \qquad h_0 = I.

    For the factorial sequence :math:`h = e^{\lambda z} I`.

Generalized matrix power
    Columns solving :math:`z\partial_m y = By`. A diagonalizable ``B`` gives
    monomial columns :math:`v_j z^{\mu_j}` with :math:`r(\mu_j) = b_j`. A
    Jordan block of size ``k`` with eigenvalue :math:`r(\mu)` contributes
    :math:`C_1 = (z^\mu, 0, \dots)^T` and
    :math:`C_j = (H_j, H_{j-1}, \dots, H_1, 0, \dots)^T`, mapped back by
    ``P``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import matrices
from .errors import (
    DomainError,
    H3Unavailable,
    IllConditioned,
    NoExponentFound,
    NonCommuting,
    Resonant,
)
from .hfunctions import QHFunction, provider_for
from .matrices import JordanDecomposition, as_matrix, one_norm
from .moments import DEFAULT_REGION, MomentSequence, ratio, solve_ratio_equation
from .series import (
    GeneralizedSeries,
    LogPowerSolution,
    classical_derivative_logpower,
    complex_to_json,
    evaluate,
)
from .solver import DEFAULT_PMAX, check_h1

DET_REL_TOL = 1e-9


def jordan_reduce_system(A, B, hint: JordanDecomposition | None = None):
    """``(A_tilde, J, P)`` with ``B = P J P^{-1}`` and ``A_tilde = P^{-1} A P``.

    Raises
    ------
    IllConditioned
        If ``det(A_tilde)`` drifts from ``det(A)`` beyond ``1e-9 (1 + |det A|)``.
    """
    A = as_matrix(A, "A")
    jd = matrices.jordan(B, hint)
    At = matrices.inverse(jd.P) @ A @ jd.P
    dA, dAt = matrices.det(A), matrices.det(At)
    if abs(dAt - dA) > DET_REL_TOL * (1.0 + abs(dA)) * max(1.0, np.linalg.cond(jd.P)):
        raise IllConditioned("similarity transform lost accuracy (determinants disagree)")
    return At, jd.J, jd.P


@dataclass(frozen=True)
class ChangeOfVariable:
    """``h`` (matrix series, ``h_0 = I``) and the products ``s_hat[k]``."""

    lam: complex
    mu: complex
    h: GeneralizedSeries
    s_hat: tuple[np.ndarray, ...]


def change_of_variable(A, B, seq: MomentSequence, mu, lam, N: int, p_max: int = DEFAULT_PMAX) -> ChangeOfVariable:
    """Coefficients ``h_0..h_N`` turning solutions for ``A - lam I`` into solutions for ``A``.

    Raises
    ------
    NonCommuting
        If ``A`` and ``B`` do not commute.
    Resonant
        If the non-resonance scan fails for ``(B, seq, mu)``.
    """
    A, B = as_matrix(A, "A"), as_matrix(B, "B")
    if not matrices.commute(A, B):
        raise NonCommuting("change of variable needs AB = BA")
    mu, lam = complex(mu), complex(lam)
    v = check_h1(B, seq, mu, p_max)
    if not v.holds:
        raise Resonant(f"non-resonance fails for mu = {mu}: resonances {v.resonances[:10]}")
    n = A.shape[0]
    eye = np.eye(n, dtype=complex)
    r = np.asarray(ratio(seq, mu + np.arange(N + 1)), dtype=complex).reshape(-1)
    shifted = A - lam * eye
    s_hat = [eye]
    for k in range(1, N + 1):
        s_hat.append(matrices.inverse(r[k] * eye - B) @ shifted @ s_hat[-1])
    h = [eye]
    for p in range(1, N + 1):
        acc = np.zeros((n, n), dtype=complex)
        for j in range(p):
            acc += h[j] @ (lam * s_hat[p - j - 1] - (r[p] - r[p - j]) * s_hat[p - j])
        h.append(acc / (r[p] - r[0]))
    return ChangeOfVariable(lam, mu, GeneralizedSeries(0.0, np.array(h)), tuple(s_hat))


# ---------------------------------------------------------------------------
# columns of z_m^B
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MonomialColumn:
    """``s0 z^mu``."""

    s0: np.ndarray
    mu: complex

    def evaluate(self, z):
        return np.asarray(evaluate(GeneralizedSeries(self.mu, [self.s0]), z))

    def as_series(self) -> GeneralizedSeries:
        return GeneralizedSeries(self.mu, [self.s0])

    def to_json(self) -> dict:
        return {
            "type": "monomial",
            "mu": [self.mu.real, self.mu.imag],
            "s0": complex_to_json(self.s0),
        }


@dataclass(frozen=True)
class LogPowerColumn:
    """Entries are exact log-power expressions."""

    entries: tuple[LogPowerSolution, ...]

    def evaluate(self, z):
        return np.array([e.evaluate(z) for e in self.entries])

    def z_derivative(self) -> "LogPowerColumn":
        return LogPowerColumn(tuple(classical_derivative_logpower(e) for e in self.entries))

    def to_json(self) -> dict:
        return {"type": "logpower", "entries": [e.to_json() for e in self.entries]}


@dataclass(frozen=True)
class QThetaColumn:
    """Entry ``i`` is ``sum_k weights[i, k] H_{k+1}(z)`` for the q H-functions ``H``."""

    functions: tuple[QHFunction, ...]
    weights: np.ndarray

    def evaluate(self, z):
        vals = np.array([H(z) for H in self.functions])
        return self.weights @ vals

    def to_json(self) -> dict:
        H = self.functions[0]
        return {
            "type": "qtheta",
            "q": H.q,
            "c": H.c,
            "mu": H.mu,
            "truncation": len(self.functions),
            "weights": complex_to_json(self.weights),
        }


def _combine_logpower(P, block_entries):
    # (P @ column) with exact handling of the structural zeros and ones
    n = P.shape[0]
    mu = next(e.mu for e in block_entries if e is not None)
    out = []
    for i in range(n):
        acc = LogPowerSolution.zero(mu)
        for k, e in enumerate(block_entries):
            if e is None or P[i, k] == 0:
                continue
            w = P[i, k]
            acc = acc + (e if w == 1 else e.scale(_simplify(w)))
        out.append(acc)
    return tuple(out)


def _simplify(w):
    w = complex(w)
    if w.imag == 0:
        return int(w.real) if w.real == int(w.real) else w.real
    return w


@dataclass(frozen=True)
class SymbolicSolutionMatrix:
    """The ``n`` columns of ``z_m^B`` plus the Jordan data they were built from."""

    columns: tuple
    jordan: JordanDecomposition | None = None
    exponents: tuple[complex, ...] = ()
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n(self) -> int:
        return len(self.columns)

    def evaluate(self, z) -> np.ndarray:
        return np.column_stack([np.asarray(c.evaluate(z)) for c in self.columns])

    def to_json(self) -> dict:
        out = {
            "columns": [c.to_json() for c in self.columns],
            "exponents": [[m.real, m.imag] for m in self.exponents],
        }
        if self.jordan is not None:
            out["block_sizes"] = list(self.jordan.block_sizes)
            out["P"] = complex_to_json(self.jordan.P)
            out["J"] = complex_to_json(self.jordan.J)
        return out


def _first_exponent(seq, b, region):
    roots = solve_ratio_equation(seq, b, region)
    if not roots:
        raise NoExponentFound(f"no mu with r(mu) = {b} in region {tuple(region)}")
    return roots[0]


def zmb_diagonalizable(B, seq: MomentSequence, region=DEFAULT_REGION, p_max: int = DEFAULT_PMAX) -> SymbolicSolutionMatrix:
    """Monomial columns ``v_j z^{mu_j}`` for a diagonalizable ``B``.

    Raises
    ------
    IllConditioned
        If ``B`` is not diagonalizable.
    NoExponentFound
        If an eigenvalue has no exponent in ``region``.
    Resonant
        If the non-resonance scan fails for some ``mu_j``.
    """
    B = as_matrix(B, "B")
    jd = matrices.jordan(B)
    if any(s != 1 for s in jd.block_sizes):
        raise IllConditioned("B is not diagonalizable; use zmb_general")
    cols, mus = [], []
    cache: dict[complex, complex] = {}
    for j, b in enumerate(jd.block_eigenvalues):
        if b not in cache:
            mu = _first_exponent(seq, b, region)
            v = check_h1(B, seq, mu, p_max)
            if not v.holds:
                raise Resonant(f"mu = {mu}: resonant at p = {v.resonances[:10]}")
            cache[b] = mu
        mu = cache[b]
        cols.append(MonomialColumn(jd.P[:, j].copy(), mu))
        mus.append(mu)
    return SymbolicSolutionMatrix(tuple(cols), jd, tuple(mus), {"kind": "diagonalizable"})


def _cross_block_check(seq, blocks, p_max):
    # eigenvalue of one block never equals r(mu_other + p), p >= 1
    for i, (lam_i, _mu_i, _s) in enumerate(blocks):
        for j, (_lam_j, mu_j, _t) in enumerate(blocks):
            if i == j:
                continue
            rs = np.asarray(seq.raw_ratio(mu_j + np.arange(1, p_max + 1)), dtype=complex)
            with np.errstate(invalid="ignore"):
                hit = np.nonzero(np.isfinite(rs) & (np.abs(rs - lam_i) <= 1e-9 * (1.0 + abs(lam_i))))[0]
            if hit.size:
                raise Resonant(f"block eigenvalue {lam_i} equals r(mu + {int(hit[0]) + 1}) of another block")


def zmb_general(
    B,
    seq: MomentSequence,
    region=DEFAULT_REGION,
    h3_provider="auto",
    hint: JordanDecomposition | None = None,
    p_max: int = DEFAULT_PMAX,
    exponents: Sequence[complex] | None = None,
) -> SymbolicSolutionMatrix:
    """``z_m^B`` for any ``B`` with computable Jordan data.

    Blocks of size one give monomial columns. Larger blocks need H-functions
    from ``h3_provider`` (by default chosen from the sequence): exact
    log-power columns for the factorial sequence, theta-based columns for
    the q-factorial sequence. ``exponents`` (one per Jordan block) skips the
    root search.

    Raises
    ------
    H3Unavailable
        A nontrivial block is present and no provider exists.
    NoExponentFound, Resonant
        As in :func:`zmb_diagonalizable`, with the cross-block check.
    """
    B = as_matrix(B, "B")
    jd = matrices.jordan(B, hint)
    if all(s == 1 for s in jd.block_sizes) and hint is None and exponents is None:
        return zmb_diagonalizable(B, seq, region, p_max)
    provider = provider_for(seq) if h3_provider == "auto" else h3_provider
    blocks = []
    if exponents is not None and len(exponents) != len(jd.block_sizes):
        raise DomainError("exponents needs one entry per Jordan block")
    for k, (size, lam) in enumerate(zip(jd.block_sizes, jd.block_eigenvalues)):
        if exponents is None:
            mu = _first_exponent(seq, lam, region)
        else:
            mu = complex(exponents[k])
            if abs(complex(ratio(seq, mu)) - lam) > matrices.SPEC_REL_TOL * (1.0 + abs(lam)):
                raise NoExponentFound(f"r({mu}) does not equal the block eigenvalue {lam}")
        blocks.append((lam, mu, size))
    _cross_block_check(seq, blocks, p_max)
    n = B.shape[0]
    cols, mus = [], []
    offset = 0
    for lam, mu, size in blocks:
        if size == 1:
            cols.append(MonomialColumn(jd.P[:, offset].copy(), mu))
            mus.append(mu)
            offset += 1
            continue
        if provider is None:
            raise H3Unavailable(f"no H-functions available for sequence {seq.descriptor}")
        H = provider.functions(mu, size)
        for j in range(1, size + 1):
            if provider.kind == "logpower":
                entries = [None] * n
                for i in range(n):
                    entries[i] = LogPowerSolution.zero(mu)
                for i in range(j):
                    entries[offset + i] = H[j - 1 - i]
                cols.append(LogPowerColumn(_combine_logpower(jd.P, entries)))
            else:
                weights = np.zeros((n, size), dtype=complex)
                for i in range(j):
                    weights[offset + i, j - 1 - i] = 1.0
                cols.append(QThetaColumn(tuple(H), jd.P @ weights))
            mus.append(mu)
        offset += size
    return SymbolicSolutionMatrix(tuple(cols), jd, tuple(mus), {"kind": "general"})


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------


def _logpower_matvec(B, entries):
    n = B.shape[0]
    mu = entries[0].mu
    out = []
    for i in range(n):
        acc = LogPowerSolution.zero(mu)
        for k in range(n):
            if B[i, k] == 0 or entries[k].is_zero():
                continue
            acc = acc + (entries[k] if B[i, k] == 1 else entries[k].scale(_simplify(B[i, k])))
        out.append(acc)
    return out


def _logpower_gap(a: LogPowerSolution, b: LogPowerSolution) -> float:
    d = a - b
    return max((abs(complex(c)) for p in d.terms.values() for c in p), default=0.0)


def column_defect(column, B, seq: MomentSequence | None = None, sample_points: Sequence[complex] | None = None) -> float:
    r"""How far a column is from solving :math:`z\partial_m y = By`.

    * monomial: ``||r(mu) s0 - B s0||_1 / ||s0||_1`` (exact one-term series);
    * log-power (factorial sequence): the largest coefficient of
      ``z y' - B y``, zero for an exact identity;
    * q-theta: the largest ``|y(qz) - y(z) - (q-1) B y(z)|`` relative to
      ``max(|y(z)|, 1)`` over ``sample_points``.
    """
    B = as_matrix(B, "B")
    if isinstance(column, MonomialColumn):
        if seq is None:
            raise DomainError("a monomial column needs the moment sequence")
        r = complex(ratio(seq, column.mu))
        return one_norm(r * column.s0 - B @ column.s0) / one_norm(column.s0)
    if isinstance(column, LogPowerColumn):
        lhs = column.z_derivative().entries
        rhs = _logpower_matvec(B, list(column.entries))
        return max(_logpower_gap(a, b) for a, b in zip(lhs, rhs))
    if isinstance(column, QThetaColumn):
        q = column.functions[0].q
        pts = sample_points if sample_points is not None else default_spiral_points()
        worst = 0.0
        for z in pts:
            y = column.evaluate(z)
            gap = column.evaluate(q * z) - y - (q - 1.0) * (B @ y)
            worst = max(worst, float(np.max(np.abs(gap))) / max(float(np.max(np.abs(y))), 1.0))
        return worst
    raise TypeError(f"unknown column type {type(column).__name__}")


def default_spiral_points(count: int = 20, seed: int = 0) -> np.ndarray:
    """Points in ``0.1 <= |z| <= 10`` kept away from the positive real axis."""
    rng = np.random.default_rng(seed)
    rad = np.exp(rng.uniform(np.log(0.1), np.log(10.0), count))
    ang = rng.uniform(0.1, 2 * np.pi - 0.1, count)
    return rad * np.exp(1j * ang)


# ---------------------------------------------------------------------------
# planar systems
# ---------------------------------------------------------------------------


def _planar_A(A):
    A = as_matrix(A, "A")
    if A.shape != (2, 2):
        raise DomainError("planar operations need a 2x2 matrix A")
    return A


def _ratio_steps(seq, mu, N):
    return np.asarray(ratio(seq, complex(mu) + np.arange(N + 1)), dtype=complex).reshape(-1)


def _is_zero(x, scale) -> bool:
    return abs(x) <= DET_REL_TOL * (1.0 + scale)


def planar_diagonal_closed_form(a, b, c, d, seq: MomentSequence, mu1, mu2, N: int):
    r"""Closed-form ``(f_p, g_p)``, ``p = 0..N``, for ``B = diag(r(mu1), r(mu2))`` and ``det A = 0``.

    With :math:`\delta_i = r(\mu_1+i) - r(\mu_1)`, :math:`\beta = r(\mu_1) - r(\mu_2)`,
    :math:`\lambda = a + d \ne 0` and :math:`\alpha = a\beta/\lambda`,

    .. math::

        f_p = \frac{a\lambda^{p-1}\prod_{i=1}^{p-1}(\delta_i+\alpha)}
                   {\prod_{i=1}^{p}\delta_i\prod_{i=1}^{p-1}(\delta_i+\beta)},\qquad
        g_p = \frac{c\lambda^{p-1}\prod_{i=1}^{p-1}(\delta_i+\alpha)}
                   {\prod_{i=1}^{p-1}\delta_i\prod_{i=1}^{p}(\delta_i+\beta)}.

    The ``f_p`` form is the product over ``i = 0..p-1`` with the
    :math:`i = 0` factors :math:`\alpha/\beta = a/\lambda` cancelled, which
    keeps it finite at :math:`\beta = 0`. For :math:`\lambda = 0`

    .. math::

        f_p = \frac{a^p\beta^{p-1}}{\prod_{i=1}^{p}\delta_i\prod_{i=1}^{p-1}(\delta_i+\beta)},\qquad
        g_p = \frac{c\,a^{p-1}\beta^{p-1}}{\prod_{i=1}^{p-1}\delta_i\prod_{i=1}^{p}(\delta_i+\beta)}.

    Only ``det A = 0`` is used; ``b`` enters through it.
    """
    a, b, c, d = (complex(x) for x in (a, b, c, d))
    r = _ratio_steps(seq, mu1, N)
    r2 = complex(ratio(seq, mu2))
    delta = r - r[0]
    beta = r[0] - r2
    lam = a + d
    scale = abs(a) + abs(b) + abs(c) + abs(d)
    f = np.zeros(N + 1, dtype=complex)
    g = np.zeros(N + 1, dtype=complex)
    f[0] = 1.0
    if _is_zero(lam, scale):
        for p in range(1, N + 1):
            f[p] = a**p * beta ** (p - 1) / (np.prod(delta[1 : p + 1]) * np.prod(delta[1:p] + beta))
            g[p] = c * a ** (p - 1) * beta ** (p - 1) / (np.prod(delta[1:p]) * np.prod(delta[1 : p + 1] + beta))
        return f, g
    alpha = a * beta / lam
    for p in range(1, N + 1):
        num = lam ** (p - 1) * np.prod(delta[1:p] + alpha)
        f[p] = a * num / (np.prod(delta[1 : p + 1]) * np.prod(delta[1:p] + beta))
        g[p] = c * num / (np.prod(delta[1:p]) * np.prod(delta[1 : p + 1] + beta))
    return f, g


@dataclass(frozen=True)
class PlanarDiagonalResult:
    """Two Floquet solutions with exponents ``mu1`` and ``mu2``.

    ``meta`` holds ``a, b, c, d, lambda, beta, alpha`` and, when
    ``det A = 0``, the closed-form coefficients and their largest relative
    gap to the recursion.
    """

    solutions: tuple
    meta: dict = field(default_factory=dict, compare=False)


def _relative_gap(x, y) -> float:
    return float(np.max(np.abs(x - y)) / max(float(np.max(np.abs(y))), 1e-300))


def planar_diagonal(A, seq: MomentSequence, mu1, mu2, N: int, p_max: int = DEFAULT_PMAX) -> PlanarDiagonalResult:
    """Floquet solutions of the planar system with ``B = diag(r(mu1), r(mu2))``.

    The coefficients always come from the recursion. When ``det A = 0`` the
    closed forms of :func:`planar_diagonal_closed_form` are evaluated as a
    cross-check for both solutions (the second by swapping the coordinates).

    Raises
    ------
    DomainError
        If ``Re(mu1) < 1`` or ``Re(mu2) < 1``.
    Resonant
        If ``r(mu_k) = r(p + mu_j)`` for some ``p`` in ``1..p_max``.
    """
    from .solver import ProblemSpec, floquet_coefficients

    A = _planar_A(A)
    mu1, mu2 = complex(mu1), complex(mu2)
    r1, r2 = complex(ratio(seq, mu1)), complex(ratio(seq, mu2))
    B = np.diag([r1, r2])
    for mu in (mu1, mu2):
        v = check_h1(B, seq, mu, p_max)
        if not v.holds:
            raise Resonant(f"mu = {mu}: r(mu + p) meets spec(B) at p = {v.resonances[:10]}")
    spec = ProblemSpec(A, B, seq, N=N, p_max=p_max)
    y1 = floquet_coefficients(spec, mu1, [1.0, 0.0])
    y2 = floquet_coefficients(spec, mu2, [0.0, 1.0])
    a, b, c, d = A[0, 0], A[0, 1], A[1, 0], A[1, 1]
    lam = a + d
    beta = r1 - r2
    meta = {
        "a": a, "b": b, "c": c, "d": d,
        "lambda": lam,
        "beta": beta,
        "alpha": a * beta / lam if lam != 0 else None,
        "closed_form": None,
    }
    scale = float(np.sum(np.abs(A)))
    if _is_zero(a * d - b * c, scale * scale):
        f1, g1 = planar_diagonal_closed_form(a, b, c, d, seq, mu1, mu2, N)
        g2, f2 = planar_diagonal_closed_form(d, c, b, a, seq, mu2, mu1, N)
        cf1, cf2 = np.column_stack([f1, g1]), np.column_stack([f2, g2])
        meta["closed_form"] = {
            "first": cf1,
            "second": cf2,
            "gap": max(_relative_gap(cf1, y1.coeffs), _relative_gap(cf2, y2.coeffs)),
        }
    return PlanarDiagonalResult((y1, y2), meta)


def planar_jordan_closed_form(a, b, c, d, seq: MomentSequence, mu, N: int, corrected: bool = False):
    r"""Closed-form ``(f_p, g_p)`` for ``B = [[r(mu), 1], [0, r(mu)]]`` and ``det A = 0``.

    With :math:`\delta_i = r(\mu+i) - r(\mu)`, :math:`\lambda = a + d` and
    :math:`\Pi_p = \prod_{i=1}^p \delta_i`, the published forms are
    :math:`f_1 = a/\delta_1`, :math:`g_1 = c/\delta_1` and, for ``p >= 2``,

    .. math::

        f_p = \frac{1}{\Pi_p}\prod_{i=2}^{p}\Bigl(\lambda + \frac{c}{\delta_i}\Bigr),\qquad
        g_p = \frac{c}{\Pi_p}\Bigl(\sum_{l=0}^{p-3} d^l
              \prod_{i=2}^{p-1-l}\Bigl(\lambda + \frac{c}{\delta_i}\Bigr) + d^{p-2}\lambda\Bigr).

    They agree with the recursion when ``c = 0``, which is the only
    ``det A = 0`` case where ``A`` commutes with ``B`` (then ``A`` is
    nilpotent and both sides vanish for ``p >= 1``). ``corrected=True``
    returns forms valid for every ``det A = 0``. Writing ``A = u w^T`` gives
    :math:`w^T(\delta_i I - N)^{-1}u = (\lambda + c/\delta_i)/\delta_i`, hence

    .. math::

        f_p = \Bigl(a + \frac{c}{\delta_p}\Bigr)\frac{1}{\Pi_p}
              \prod_{i=1}^{p-1}\Bigl(\lambda + \frac{c}{\delta_i}\Bigr),\qquad
        g_p = \frac{c}{\Pi_p}\prod_{i=1}^{p-1}\Bigl(\lambda + \frac{c}{\delta_i}\Bigr).
    """
    a, b, c, d = (complex(x) for x in (a, b, c, d))
    r = _ratio_steps(seq, mu, N)
    delta = r - r[0]
    lam = a + d
    f = np.zeros(N + 1, dtype=complex)
    g = np.zeros(N + 1, dtype=complex)
    f[0] = 1.0
    if N == 0:
        return f, g
    Pi = np.cumprod(np.concatenate([[1.0], delta[1:]]))
    fac = np.ones(N + 1, dtype=complex)
    fac[1:] = lam + c / delta[1:]
    if corrected:
        for p in range(1, N + 1):
            common = np.prod(fac[1:p]) / Pi[p]
            f[p] = (a + c / delta[p]) * common
            g[p] = c * common
        return f, g
    f[1] = a / delta[1]
    g[1] = c / delta[1]
    for p in range(2, N + 1):
        f[p] = np.prod(fac[2 : p + 1]) / Pi[p]
        tail = sum(d**l * np.prod(fac[2 : p - l]) for l in range(p - 2))
        g[p] = c * (tail + d ** (p - 2) * lam) / Pi[p]
    return f, g


@dataclass(frozen=True)
class JordanSecondSolution:
    r"""``y_2 = sum s_{p,1} z^{p+mu} + Htilde(z) sum s_{p,2} z^{p+mu}``.

    ``regular`` holds the ``s_{p,1}`` (``s_{0,1} = (0, 1)``) and ``log_part``
    the ``s_{p,2}`` (``s_{0,2} = (1, 0)``, the first solution). They obey
    :math:`(r(p+\mu)I - B)s_{p,1} = A s_{p-1,1} - s_{p,2}`, which makes
    ``y_2`` a solution whenever :math:`z\partial_m(\tilde H u) = u + \tilde H z\partial_m u`.
    For the factorial sequence :math:`\tilde H = \log z`.
    """

    mu: complex
    regular: GeneralizedSeries
    log_part: GeneralizedSeries
    tilde: LogPowerSolution | None

    def evaluate(self, z):
        if self.tilde is None:
            raise H3Unavailable("no multiplier function for this sequence")
        return np.asarray(evaluate(self.regular, z)) + np.asarray(self.tilde.evaluate(z)) * np.asarray(
            evaluate(self.log_part, z)
        )

    def residual(self, A, B, seq: MomentSequence) -> float:
        """Normalized residual of the coupled recursion over ``p = 0..N``."""
        A, B = as_matrix(A, "A"), as_matrix(B, "B")
        u, v = self.log_part.coeffs, self.regular.coeffs
        r = _ratio_steps(seq, self.mu, v.shape[0] - 1)
        worst = 0.0
        for p in range(v.shape[0]):
            prev = A @ v[p - 1] if p else 0.0
            gap = r[p] * v[p] - B @ v[p] - prev + u[p]
            worst = max(worst, one_norm(gap))
        scale = (1.0 + one_norm(A) + one_norm(B)) * max(float(np.max(np.sum(np.abs(v), axis=1))), 1e-300)
        return worst / scale

    def to_json(self) -> dict:
        return {
            "type": "jordan_second",
            "mu": [self.mu.real, self.mu.imag],
            "regular": self.regular.to_json(),
            "log_part": self.log_part.to_json(),
            "tilde": None if self.tilde is None else self.tilde.to_json(),
        }


@dataclass(frozen=True)
class PlanarJordanResult:
    """First Floquet solution, the second-solution record and, for ``A = 0``, ``z_m^B``."""

    first: object
    second: JordanSecondSolution | None
    matrix: SymbolicSolutionMatrix | None
    meta: dict = field(default_factory=dict, compare=False)


def planar_jordan(
    A,
    seq: MomentSequence,
    mu,
    N: int,
    h3_provider="auto",
    p_max: int = DEFAULT_PMAX,
    want_second: bool = True,
) -> PlanarJordanResult:
    """Solutions of the planar system with ``B = [[r(mu), 1], [0, r(mu)]]``.

    The first solution comes from the recursion with ``s_0 = (1, 0)``; when
    ``det A = 0`` the published and corrected closed forms are attached to
    ``meta`` with their gaps to it. For ``A = 0`` the fundamental matrix
    ``[[z^mu, H_2], [0, z^mu]]`` is returned in ``matrix``. Otherwise the
    second solution needs a multiplier function from the provider; with
    ``want_second=False`` it is skipped instead.

    Raises
    ------
    Resonant
        If ``r(mu) = r(mu + p)`` for some ``p`` in ``1..p_max``.
    H3Unavailable
        If a second solution is required and the provider cannot supply it.
    """
    from .solver import ProblemSpec, floquet_coefficients

    A = _planar_A(A)
    mu = complex(mu)
    r0 = complex(ratio(seq, mu))
    B = np.array([[r0, 1.0], [0.0, r0]], dtype=complex)
    v = check_h1(B, seq, mu, p_max)
    if not v.holds:
        raise Resonant(f"mu = {mu}: r(mu + p) = r(mu) at p = {v.resonances[:10]}")
    spec = ProblemSpec(A, B, seq, N=N, p_max=p_max)
    first = floquet_coefficients(spec, mu, [1.0, 0.0])
    a, b, c, d = A[0, 0], A[0, 1], A[1, 0], A[1, 1]
    meta = {"a": a, "b": b, "c": c, "d": d, "lambda": a + d, "closed_form": None}
    scale = float(np.sum(np.abs(A)))
    if _is_zero(a * d - b * c, scale * scale):
        pub = np.column_stack(planar_jordan_closed_form(a, b, c, d, seq, mu, N))
        cor = np.column_stack(planar_jordan_closed_form(a, b, c, d, seq, mu, N, corrected=True))
        meta["closed_form"] = {
            "published": pub,
            "corrected": cor,
            "published_gap": _relative_gap(pub, first.coeffs),
            "corrected_gap": _relative_gap(cor, first.coeffs),
        }
    provider = provider_for(seq) if h3_provider == "auto" else h3_provider
    if not want_second:
        return PlanarJordanResult(first, None, None, meta)
    if not np.any(A):
        if provider is None:
            raise H3Unavailable(f"no H-functions available for sequence {seq.descriptor}")
        hint = JordanDecomposition(np.eye(2, dtype=complex), B, (2,), (r0,))
        mat = zmb_general(B, seq, DEFAULT_REGION, provider, hint, p_max, exponents=[mu])
        return PlanarJordanResult(first, None, mat, meta)
    if provider is None or not provider.supports_tilde:
        raise H3Unavailable(f"a second solution for {seq.descriptor} needs a multiplier function")
    u = first.coeffs
    rs = _ratio_steps(seq, mu, N)
    w = np.zeros_like(u)
    w[0] = [0.0, 1.0]
    eye = np.eye(2)
    for p in range(1, N + 1):
        w[p] = matrices.solve(rs[p] * eye - B, A @ w[p - 1] - u[p])
    second = JordanSecondSolution(mu, GeneralizedSeries(mu, w), first.series, provider.tilde())
    return PlanarJordanResult(first, second, None, meta)
