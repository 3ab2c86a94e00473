r"""Floquet solutions of :math:`z\,\partial_m y = (zA + B)\,y`.

A Floquet solution is a series :math:`y(z) = \sum_{p\ge0} s_p z^{p+\mu}`.
Matching powers of :math:`z` gives

.. math::

    B s_0 = r(\mu)\, s_0, \qquad
    \bigl(r(p+\mu) I - B\bigr) s_p = A s_{p-1}, \quad p \ge 1,

with :math:`r(z) = m(z)/m(z-1)`. The recursion is well posed when no
:math:`r(p+\mu)`, :math:`p \ge 1`, is an eigenvalue of :math:`B`, and the
series converges when the inverses :math:`(r(p+\mu)I-B)^{-1}` stay bounded,
since then :math:`\|s_p\| \le \|s_0\| (\|A\| C)^p`. Both conditions are
infinite; they are checked here for :math:`p = 1, \dots, P_{max}` only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import matrices
from .errors import BranchCutError, DimensionMismatch, DomainError, EigvecResidual, GrowthOverflow, SingularMatrix
from .matrices import as_matrix, one_norm
from .moments import DEFAULT_REGION, MomentSequence, SequenceKind, ratio, solve_ratio_equation
from .series import GeneralizedSeries, evaluate, moment_derivative

DEFAULT_PMAX = 10_000
DEFAULT_RES_TOL = 1e-10
GROWTH_LIMIT = 1e150
RANK_TOL = 1e-9
TAIL_WINDOW = 100


@dataclass(frozen=True)
class ProblemSpec:
    """The system ``z d_m y = (zA + B) y`` plus truncation and scan settings."""

    A: np.ndarray
    B: np.ndarray
    seq: MomentSequence
    N: int = 20
    p_max: int = DEFAULT_PMAX
    eps_spec: float | None = None
    eps_res: float = DEFAULT_RES_TOL

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        B = as_matrix(self.B, "B")
        if A.shape != B.shape:
            raise DimensionMismatch(f"A is {A.shape} but B is {B.shape}")
        if int(self.N) < 1:
            raise DomainError("truncation order N must be >= 1")
        if int(self.p_max) < 1:
            raise DomainError("p_max must be >= 1")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "p_max", int(self.p_max))

    @property
    def n(self) -> int:
        return self.B.shape[0]

    @property
    def spectral_tol(self) -> float:
        return matrices.spec_tol(self.B) if self.eps_spec is None else float(self.eps_spec)


# ---------------------------------------------------------------------------
# hypotheses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class H1Verdict:
    """Outcome of the non-resonance scan.

    ``holds`` requires ``r(mu + offset)`` to be an eigenvalue of ``B`` and no
    ``r(p + mu + offset)``, ``1 <= p <= checked_up_to``, to be one.
    """

    holds: bool
    mu: complex
    eigenvalue_ok: bool
    eigvec: np.ndarray | None
    resonances: tuple[int, ...]
    checked_up_to: int
    offset: int = 0


@dataclass(frozen=True)
class H2Verdict:
    """``bound_C = max_p ||(r(p+mu) I - B)^{-1}||_1`` over the scanned range."""

    bound_C: float
    argmax_p: int
    checked_up_to: int
    monotone_tail_flag: bool


@dataclass(frozen=True)
class Coro1Verdict:
    """Sufficient convergence test ``||B||_1 < |r(p+mu)|`` with bounded ``1/|r|``."""

    holds: bool
    margin: float
    sup_ratio_inverse: float
    checked_up_to: int
    note: str = ""


def _scan_length(seq: MomentSequence, mu: complex, p_max: int) -> int:
    if seq.kind is SequenceKind.TABLE:
        return max(0, min(p_max, len(seq.table) - 1 - int(round(mu.real))))
    return p_max


def _ratios(seq: MomentSequence, mu: complex, P: int) -> np.ndarray:
    """``r(mu + p)`` for ``p = 1..P``; values that overflow come back as ``inf``."""
    if P == 0:
        return np.zeros(0, dtype=complex)
    return np.asarray(seq.raw_ratio(mu + np.arange(1, P + 1)), dtype=complex)


def _distance_to_spectrum(values: np.ndarray, eigenvalues) -> np.ndarray:
    ev = np.asarray(eigenvalues, dtype=complex)
    with np.errstate(invalid="ignore"):
        d = np.min(np.abs(values[:, None] - ev[None, :]), axis=1)
    return np.where(np.isfinite(values), d, np.inf)


def check_h1(B, seq: MomentSequence, mu, p_max: int = DEFAULT_PMAX, eps: float | None = None) -> H1Verdict:
    """Check that ``r(mu)`` is an eigenvalue of ``B`` and ``r(p+mu)`` never is, ``1 <= p <= p_max``.

    Raises
    ------
    DomainError
        If ``Re(mu) < 1``; use :func:`check_h1_shifted` then.
    """
    mu = complex(mu)
    if mu.real < 1.0 - 1e-12:
        raise DomainError("check_h1 needs Re(mu) >= 1")
    B = as_matrix(B, "B")
    eps = matrices.spec_tol(B) if eps is None else eps
    sd = matrices.eigen(B)
    r0 = complex(ratio(seq, mu))
    d0 = np.abs(np.asarray(sd.eigenvalues) - r0)
    eigenvalue_ok = bool(np.min(d0) <= eps)
    eigvec = None
    if eigenvalue_ok:
        basis = matrices.null_space(B - r0 * np.eye(B.shape[0]), 1e-8 * (1.0 + one_norm(B)))
        if basis.shape[1]:
            eigvec = matrices._normalize(basis[:, 0])
        else:
            idx = [i for i, lam in enumerate(sd.vector_eigenvalues) if abs(lam - r0) <= eps]
            eigvec = sd.eigenvectors[idx[0]] if idx else None
    P = _scan_length(seq, mu, p_max)
    d = _distance_to_spectrum(_ratios(seq, mu, P), sd.eigenvalues)
    resonances = tuple(int(p) for p in np.nonzero(d <= eps)[0] + 1)
    return H1Verdict(eigenvalue_ok and not resonances, mu, eigenvalue_ok, eigvec, resonances, P)


def check_h1_shifted(B, seq: MomentSequence, mu, N_offset: int, p_max: int = DEFAULT_PMAX, eps=None) -> H1Verdict:
    """:func:`check_h1` with ``mu`` replaced by ``mu + N_offset``; allows ``Re(mu) < 1``."""
    mu = complex(mu)
    if N_offset < 0 or mu.real + N_offset < 1.0 - 1e-12:
        raise DomainError("need N_offset >= 0 and Re(mu) + N_offset >= 1")
    v = check_h1(B, seq, mu + N_offset, p_max, eps)
    return H1Verdict(v.holds, mu, v.eigenvalue_ok, v.eigvec, v.resonances, v.checked_up_to, int(N_offset))


def check_h2(B, seq: MomentSequence, mu, p_max: int = DEFAULT_PMAX, eps: float | None = None) -> H2Verdict:
    """Largest ``||(r(p+mu) I - B)^{-1}||_1`` for ``p = 1..p_max``.

    Overflowing ratios contribute 0 (the inverse tends to zero).
    ``monotone_tail_flag`` is set when the last 100 norms do not increase,
    which is evidence (not proof) that the supremum is finite.

    Raises
    ------
    SingularMatrix
        At a resonant ``p``; the message lists the offending indices.
    """
    mu = complex(mu)
    B = as_matrix(B, "B")
    n = B.shape[0]
    eps = matrices.spec_tol(B) if eps is None else eps
    P = _scan_length(seq, mu, p_max)
    r = _ratios(seq, mu, P)
    d = _distance_to_spectrum(r, matrices.eigen(B).eigenvalues)
    bad = np.nonzero(d <= eps)[0] + 1
    if bad.size:
        raise SingularMatrix(f"resonant at p = {bad.tolist()[:10]}")
    finite = np.isfinite(r)
    norms = np.zeros(P)
    if np.any(finite):
        stack = r[finite][:, None, None] * np.eye(n)[None] - B[None]
        norms[finite] = matrices.batched_one_norm(np.linalg.inv(stack))
    k = int(np.argmax(norms)) if P else 0
    tail = norms[-TAIL_WINDOW:]
    monotone = bool(np.all(np.diff(tail) <= 1e-12 * (1.0 + np.abs(tail[:-1])))) if tail.size > 1 else True
    return H2Verdict(float(norms[k]) if P else 0.0, k + 1, P, monotone)


def check_coro1(B, seq: MomentSequence, mu, p_max: int = DEFAULT_PMAX) -> Coro1Verdict:
    """Check ``||B||_1 < |r(p+mu)|`` for ``p = 1..p_max`` and boundedness of ``1/|r(p+mu)|``."""
    mu = complex(mu)
    B = as_matrix(B, "B")
    P = _scan_length(seq, mu, p_max)
    raw = _ratios(seq, mu, P)
    r = np.where(np.isfinite(raw), np.abs(raw), np.inf)
    nb = one_norm(B)
    with np.errstate(divide="ignore"):
        inv = np.where(r > 0, 1.0 / r, np.inf)
    margin = float(np.min(r) - nb) if P else float("inf")
    sup_inv = float(np.max(inv)) if P else 0.0
    note = ""
    if P > 2 * TAIL_WINDOW and np.all(np.isfinite(r[-TAIL_WINDOW:])):
        tail = r[-TAIL_WINDOW:]
        if np.max(tail) - np.min(tail) <= 1e-3 * np.max(tail):
            lim = float(tail[-1])
            note = f"ratio levels off near {lim:.6g}; ||B|| <= {lim:.6g} is then necessary"
    holds = bool(P > 0 and margin > 0 and np.isfinite(sup_inv))
    return Coro1Verdict(holds, margin, sup_inv, P, note)


@dataclass(frozen=True)
class HypothesisReport:
    h1: H1Verdict
    h2: H2Verdict | None
    coro1: Coro1Verdict
    shifted: int | None = None
    h2_error: str | None = None

    @property
    def ok(self) -> bool:
        return self.h1.holds


def hypothesis_report(spec: ProblemSpec, mu, N_offset: int = 0) -> HypothesisReport:
    """Run every check for one exponent; resonance shows up as ``h2 = None``."""
    mu = complex(mu)
    if N_offset:
        h1 = check_h1_shifted(spec.B, spec.seq, mu, N_offset, spec.p_max, spec.spectral_tol)
    else:
        h1 = check_h1(spec.B, spec.seq, mu, spec.p_max, spec.spectral_tol)
    eff = mu + N_offset
    try:
        h2, err = check_h2(spec.B, spec.seq, eff, spec.p_max, spec.spectral_tol), None
    except SingularMatrix as exc:
        h2, err = None, str(exc)
    coro = check_coro1(spec.B, spec.seq, eff, spec.p_max)
    return HypothesisReport(h1, h2, coro, N_offset if N_offset else None, err)


# ---------------------------------------------------------------------------
# Floquet series
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FloquetSolution:
    """``y(z) = sum_p s_p z^(p + mu)`` with growth diagnostics."""

    mu: complex
    series: GeneralizedSeries
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def s0(self) -> np.ndarray:
        return self.series.coeffs[0]

    @property
    def coeffs(self) -> np.ndarray:
        return self.series.coeffs

    def evaluate(self, z):
        return evaluate(self.series, z)


def _rate(norms: Sequence[float]) -> float:
    N = len(norms) - 1
    half = N // 2
    if N < 2 or norms[half] == 0:
        return 0.0
    return float((norms[N] / norms[half]) ** (1.0 / (N - half)))


def floquet_coefficients(spec: ProblemSpec, mu, s0) -> FloquetSolution:
    """Coefficients ``s_0..s_N`` of the Floquet solution with exponent ``mu``.

    Raises
    ------
    EigvecResidual
        If ``||B s0 - r(mu) s0||_1 > eps_spec ||s0||_1``.
    SingularMatrix
        If some ``r(p+mu) I - B`` is singular (resonance).
    GrowthOverflow
        If ``||s_p||_1`` exceeds ``1e150``.
    """
    mu = complex(mu)
    s0 = np.asarray(s0, dtype=complex).reshape(-1)
    if s0.shape != (spec.n,):
        raise DimensionMismatch(f"s0 must have length {spec.n}")
    if not np.any(s0):
        raise EigvecResidual("s0 is zero")
    r0 = complex(ratio(spec.seq, mu))
    res = one_norm(spec.B @ s0 - r0 * s0)
    if res > spec.spectral_tol * one_norm(s0):
        raise EigvecResidual(f"||B s0 - r(mu) s0||_1 = {res:.3e}")
    rs = np.asarray(ratio(spec.seq, mu + np.arange(1, spec.N + 1)), dtype=complex).reshape(-1)
    coeffs = np.zeros((spec.N + 1, spec.n), dtype=complex)
    coeffs[0] = s0
    eye = np.eye(spec.n)
    for p in range(1, spec.N + 1):
        try:
            coeffs[p] = matrices.solve(rs[p - 1] * eye - spec.B, spec.A @ coeffs[p - 1])
        except SingularMatrix as exc:
            raise SingularMatrix(f"resonance at p = {p}") from exc
        if one_norm(coeffs[p]) > GROWTH_LIMIT:
            raise GrowthOverflow(f"||s_{p}||_1 exceeds {GROWTH_LIMIT:g}; the series probably diverges")
    norms = [one_norm(c) for c in coeffs]
    diag = {"coeff_growth": norms, "geometric_rate_estimate": _rate(norms)}
    return FloquetSolution(mu, GeneralizedSeries(mu, coeffs), diag)


def floquet_basis(spec: ProblemSpec, region=DEFAULT_REGION) -> list[FloquetSolution]:
    """Floquet solutions with linearly independent leading vectors.

    For each eigenvalue ``b`` of ``B`` every root ``mu`` of ``r(mu) = b`` in
    ``region`` passing :func:`check_h1` is tried with each eigenvector of
    ``b``; a solution is kept when it raises the rank of the collected
    leading vectors (tolerance ``1e-9``).
    """
    sd = matrices.eigen(spec.B)
    found: list[FloquetSolution] = []
    lead = np.zeros((spec.n, 0), dtype=complex)
    for b in sd.distinct():
        vecs = [v for v, lam in zip(sd.eigenvectors, sd.vector_eigenvalues) if lam == b]
        for mu in solve_ratio_equation(spec.seq, b, region):
            if not check_h1(spec.B, spec.seq, mu, spec.p_max, spec.spectral_tol).holds:
                continue
            for v in vecs:
                trial = np.column_stack([lead, v / one_norm(v)])
                if np.linalg.matrix_rank(trial, tol=RANK_TOL) <= lead.shape[1]:
                    continue
                try:
                    sol = floquet_coefficients(spec, mu, v)
                except (SingularMatrix, GrowthOverflow, EigvecResidual):
                    continue
                found.append(sol)
                lead = trial
    return found


def residual(y, spec: ProblemSpec) -> float:
    r"""Normalized coefficient residual of ``z d_m y - (zA + B) y``.

    For ``y = sum s_p z^(p+mu)`` the coefficient of ``z^(p+mu)`` is
    ``r(p+mu) s_p - B s_p - A s_{p-1}``; the maximum 1-norm over
    ``p = 0..N`` is divided by ``(1 + ||A||_1 + ||B||_1) max_p ||s_p||_1``.
    Matrix-valued series (fundamental matrices) are accepted column-wise.
    """
    series = y.series if isinstance(y, FloquetSolution) else y
    if not isinstance(series, GeneralizedSeries):
        raise TypeError("residual expects a FloquetSolution or GeneralizedSeries")
    c = series.coeffs
    if c.ndim == 2:
        c = c[:, :, None]
    if c.shape[1] != spec.n:
        raise DimensionMismatch("series coefficients do not match the system size")
    r = np.asarray(ratio(spec.seq, series.exponents()), dtype=complex).reshape(-1, 1, 1)
    shifted = np.concatenate([np.zeros_like(c[:1]), c[:-1]])
    res = r * c - np.einsum("ij,pjk->pik", spec.B, c) - np.einsum("ij,pjk->pik", spec.A, shifted)
    scale = (1.0 + one_norm(spec.A) + one_norm(spec.B)) * max(
        max(float(np.max(np.sum(np.abs(ck), axis=0))) for ck in c), 1e-300
    )
    worst = max(float(np.max(np.sum(np.abs(rk), axis=0))) for rk in res)
    return worst / scale


# ---------------------------------------------------------------------------
# realizations of the moment derivative
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FractionalSolution:
    r"""``sum_p s_p z^((p + mu)/alpha)``.

    If the coefficients solve the system for ``m(z) = Gamma(1 + z/alpha)``,
    this series formally solves
    :math:`z^{1/\alpha} D^{1/\alpha} y = (z^{1/\alpha} A + B) y` with the
    Caputo-type derivative of order :math:`1/\alpha`.
    """

    mu: complex
    alpha: float
    coeffs: np.ndarray
    system: str

    @property
    def exponents(self) -> np.ndarray:
        return (self.mu + np.arange(self.coeffs.shape[0])) / self.alpha

    def evaluate(self, z):
        z = complex(z)
        if z.imag == 0 and z.real <= 0:
            raise BranchCutError("fractional powers need z off (-inf, 0]")
        lz = np.log(z)
        return np.tensordot(np.exp(self.exponents * lz), self.coeffs, axes=(0, 0))


def fractional_reparam(y: FloquetSolution, alpha: float) -> FractionalSolution:
    """Map exponents ``p + mu`` to ``(p + mu)/alpha``, keeping the coefficients."""
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    system = f"z^(1/{alpha:g}) D^(1/{alpha:g}) y = (z^(1/{alpha:g}) A + B) y"
    return FractionalSolution(complex(y.mu), float(alpha), np.array(y.coeffs), system)


def verify_jackson(y, q: float, sample_points) -> float:
    r"""Largest gap between the moment derivative for ``qfactorial:q`` and the Jackson quotient.

    .. math:: D_q y(z) = \frac{y(qz) - y(z)}{(q-1)z}
    """
    series = y.series if isinstance(y, FloquetSolution) else y
    seq = MomentSequence.q_factorial(q)
    d = moment_derivative(series, seq)
    worst = 0.0
    for z in np.atleast_1d(np.asarray(sample_points, dtype=complex)):
        z = complex(z)
        lhs = np.asarray(evaluate(d, z))
        rhs = (np.asarray(evaluate(series, q * z)) - np.asarray(evaluate(series, z))) / ((q - 1.0) * z)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst

