r"""Truncated generalized power series and log-power expressions.

A :class:`GeneralizedSeries` stores

.. math:: f(z) = \sum_{p=0}^{N} s_p\, z^{p+\nu},

with scalar, vector or matrix coefficients :math:`s_p` of one common shape.
The moment derivative acts termwise,

.. math:: \partial_m f = \sum_{p=0}^{N} s_p\, r(p+\nu)\, z^{p+\nu-1},
          \qquad r(z) = m(z)/m(z-1),

and for :math:`\nu = 0` it becomes the shift
:math:`\sum a_p z^p/m_p \mapsto \sum a_{p+1} z^p/m_p`.

A :class:`LogPowerSolution` is a finite sum
:math:`\sum_k c_k(z)\, z^\mu \log^k z` with polynomial :math:`c_k`. Its
coefficients may be ``fractions.Fraction`` so identities can be checked
exactly.
"""

from __future__ import annotations

import cmath
import numbers
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import BranchCutError, DimensionMismatch, DomainError
from .moments import MomentSequence, eval_m, ratio

INT_TOL = 1e-12


def _is_integer(x: complex, tol: float = INT_TOL) -> bool:
    x = complex(x)
    return abs(x.imag) <= tol and abs(x.real - round(x.real)) <= tol


@dataclass(frozen=True)
class GeneralizedSeries:
    """Immutable truncated series ``sum_{p=0}^{N} coeffs[p] z^(p + nu)``."""

    nu: complex
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim == 0 or c.shape[0] < 1:
            raise DimensionMismatch("a series needs at least one coefficient")
        if not np.all(np.isfinite(c)):
            raise DomainError("series coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "nu", complex(self.nu))

    @classmethod
    def monomial(cls, nu, value=1.0, N: int = 0) -> "GeneralizedSeries":
        v = np.asarray(value, dtype=complex)
        c = np.zeros((N + 1,) + v.shape, dtype=complex)
        c[0] = v
        return cls(nu, c)

    @property
    def N(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[1:]

    def exponents(self) -> np.ndarray:
        return self.nu + np.arange(self.N + 1)

    def truncate(self, N: int) -> "GeneralizedSeries":
        if N > self.N:
            raise DomainError(f"cannot extend truncation order {self.N} to {N}")
        return GeneralizedSeries(self.nu, self.coeffs[: N + 1])

    def realign(self, nu) -> "GeneralizedSeries":
        """Same series written with exponent offset ``nu = self.nu - k``, ``k >= 0`` an integer."""
        k = self.nu - complex(nu)
        if not _is_integer(k) or round(k.real) < 0:
            raise DomainError("re-alignment needs a nonnegative integer shift")
        k = int(round(k.real))
        pad = np.zeros((k,) + self.shape, dtype=complex)
        return GeneralizedSeries(complex(nu), np.concatenate([pad, self.coeffs]))

    def __add__(self, other: "GeneralizedSeries") -> "GeneralizedSeries":
        if not isinstance(other, GeneralizedSeries):
            return NotImplemented
        if self.shape != other.shape:
            raise DimensionMismatch(f"coefficient shapes {self.shape} and {other.shape}")
        d = self.nu - other.nu
        if not _is_integer(d):
            raise DomainError("exponents differ by a non-integer")
        lo = self if d.real <= 0 else other
        a, b = self.realign(lo.nu), other.realign(lo.nu)
        top = min(a.N, b.N)
        return GeneralizedSeries(lo.nu, a.coeffs[: top + 1] + b.coeffs[: top + 1])

    def __neg__(self):
        return self.scale(-1.0)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "GeneralizedSeries":
        return GeneralizedSeries(self.nu, complex(c) * self.coeffs)

    def __mul__(self, c):
        if isinstance(c, numbers.Number):
            return self.scale(c)
        return NotImplemented

    __rmul__ = __mul__

    def apply(self, M) -> "GeneralizedSeries":
        """Left-multiply every coefficient by the constant matrix ``M``."""
        M = np.asarray(M, dtype=complex)
        return GeneralizedSeries(self.nu, np.einsum("ij,pj...->pi...", M, self.coeffs))

    def times_z(self, k: int = 1) -> "GeneralizedSeries":
        return GeneralizedSeries(self.nu + k, self.coeffs)

    # serialization -----------------------------------------------------
    def to_json(self) -> dict:
        return {
            "nu": [self.nu.real, self.nu.imag],
            "coeffs": complex_to_json(self.coeffs),
            "log_terms": {},
        }

    @classmethod
    def from_json(cls, data: dict) -> "GeneralizedSeries":
        re, im = data["nu"]
        return cls(complex(re, im), complex_from_json(data["coeffs"]))


def complex_to_json(arr):
    """Nested lists with every complex entry written as ``[re, im]``."""
    a = np.asarray(arr, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def complex_from_json(data) -> np.ndarray:
    a = np.asarray(data, dtype=float)
    if a.shape[-1:] != (2,):
        raise DomainError("complex values must be [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


# ---------------------------------------------------------------------------
# moment derivative
# ---------------------------------------------------------------------------


def moment_derivative(f: GeneralizedSeries, seq: MomentSequence) -> GeneralizedSeries:
    """Termwise moment derivative.

    For ``Re(nu) >= 1`` each coefficient is multiplied by ``ratio(seq, p + nu)``
    and the offset drops to ``nu - 1``; the truncation order is kept. For
    ``nu = 0`` the constant term is annihilated and the result is the
    ``nu = 0`` series ``b_p = a_{p+1} r(p+1)`` of order ``N - 1``.

    Raises
    ------
    DomainError
        If ``Re(nu) < 1`` and ``nu`` is not zero.
    """
    nu = f.nu
    if nu.real >= 1.0 - INT_TOL:
        r = np.asarray(ratio(seq, f.exponents()), dtype=complex)
        r = r.reshape((-1,) + (1,) * len(f.shape))
        return GeneralizedSeries(nu - 1.0, f.coeffs * r)
    if _is_integer(nu) and round(nu.real) == 0:
        if f.N == 0:
            return GeneralizedSeries(0.0, np.zeros_like(f.coeffs))
        r = np.asarray(ratio(seq, np.arange(1, f.N + 1, dtype=float)), dtype=complex)
        r = r.reshape((-1,) + (1,) * len(f.shape))
        return GeneralizedSeries(0.0, f.coeffs[1:] * r)
    raise DomainError("moment derivative needs Re(nu) >= 1 or nu = 0")


def integer_nu_consistency(f: GeneralizedSeries, seq: MomentSequence, rtol: float = 1e-12) -> bool:
    """Compare the two definitions of the moment derivative for integer ``nu >= 1``.

    Path one rewrites ``f`` as an ordinary power series and applies the shift
    rule ``sum a_p z^p / m_p -> sum a_{p+1} z^p / m_p`` using values of ``m``.
    Path two applies the termwise ratio rule. They must agree coefficientwise.
    """
    if not _is_integer(f.nu) or round(f.nu.real) < 1:
        raise DomainError("integer_nu_consistency needs a positive integer nu")
    k = int(round(f.nu.real))
    c = f.realign(0.0).coeffs
    top = c.shape[0] - 1
    m = np.asarray(eval_m(seq, np.arange(top + 1, dtype=float)), dtype=complex)
    # a_p = c_p m_p ; result coefficient of z^p is a_{p+1}/m_p
    shape = (-1,) + (1,) * len(f.shape)
    via_shift = c[1:] * (m[1:] / m[:-1]).reshape(shape)
    direct = moment_derivative(f, seq).realign(0.0).coeffs
    n = min(via_shift.shape[0], direct.shape[0])
    a, b = via_shift[:n], direct[:n]
    if k - 1 > 0 and np.any(a[: k - 1] != 0):
        return False
    scale = np.maximum(np.abs(a), np.abs(b))
    return bool(np.all(np.abs(a - b) <= rtol * scale + 1e-300))


def cauchy_product(h: GeneralizedSeries, y: GeneralizedSeries) -> GeneralizedSeries:
    """Product of a matrix (or scalar) series ``h`` with ``nu = 0`` and a series ``y``.

    The result has offset ``y.nu``, coefficients ``sum_{j<=p} h_j y_{p-j}``
    and truncation order ``min(h.N, y.N)``.
    """
    if not _is_integer(h.nu) or round(h.nu.real) != 0:
        raise DomainError("cauchy_product expects h with nu = 0")
    N = min(h.N, y.N)
    H, Y = h.coeffs[: N + 1], y.coeffs[: N + 1]
    if h.shape == ():
        prod = lambda a, b: a * b  # noqa: E731
    else:
        if len(h.shape) != 2 or (y.shape and y.shape[0] != h.shape[1]):
            raise DimensionMismatch(f"cannot multiply shapes {h.shape} and {y.shape}")
        if y.shape == ():
            raise DimensionMismatch("matrix h needs a vector or matrix y")
        prod = lambda a, b: a @ b  # noqa: E731
    out = np.zeros((N + 1,) + (y.shape if h.shape == () else (h.shape[0],) + y.shape[1:]), dtype=complex)
    for p in range(N + 1):
        for j in range(p + 1):
            out[p] = out[p] + prod(H[j], Y[p - j])
    return GeneralizedSeries(y.nu, out)


# ---------------------------------------------------------------------------
# log-power expressions
# ---------------------------------------------------------------------------


def _clean(poly):
    poly = list(poly)
    while poly and poly[-1] == 0:
        poly.pop()
    return poly


def _poly_add(a, b):
    n = max(len(a), len(b))
    return [(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)]


@dataclass(frozen=True)
class LogPowerSolution:
    r"""Finite sum :math:`\sum_k c_k(z)\, z^\mu \log^k z`.

    ``terms[k]`` holds the coefficients of the polynomial :math:`c_k`
    (constant term first). Zero polynomials are dropped, so the highest key
    always carries a nonzero polynomial.
    """

    mu: complex | Fraction | int
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for k, poly in self.terms.items():
            k = int(k)
            if k < 0:
                raise DomainError("log powers are nonnegative")
            p = _clean(poly)
            if p:
                clean[k] = tuple(p)
        object.__setattr__(self, "terms", dict(sorted(clean.items())))

    @classmethod
    def power(cls, mu, coeff=1) -> "LogPowerSolution":
        return cls(mu, {0: [coeff]})

    @classmethod
    def zero(cls, mu) -> "LogPowerSolution":
        return cls(mu, {})

    @property
    def K(self) -> int:
        return max(self.terms) if self.terms else -1

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "LogPowerSolution") -> "LogPowerSolution":
        if not isinstance(other, LogPowerSolution):
            return NotImplemented
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if self.mu != other.mu:
            raise DomainError("log-power terms with different exponents")
        keys = set(self.terms) | set(other.terms)
        return LogPowerSolution(
            self.mu, {k: _poly_add(self.terms.get(k, ()), other.terms.get(k, ())) for k in keys}
        )

    def scale(self, c) -> "LogPowerSolution":
        return LogPowerSolution(self.mu, {k: [c * v for v in p] for k, p in self.terms.items()})

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, c):
        if isinstance(c, numbers.Number):
            return self.scale(c)
        return NotImplemented

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, LogPowerSolution):
            return NotImplemented
        if self.is_zero() and other.is_zero():
            return True
        return self.mu == other.mu and self.terms == other.terms

    def __hash__(self):
        return hash((self.mu, tuple(self.terms.items())))

    def evaluate(self, z):
        return evaluate(self, z)

    def to_json(self) -> dict:
        mu = complex(self.mu)
        return {
            "nu": [mu.real, mu.imag],
            "coeffs": [],
            "log_terms": {str(k): complex_to_json([complex(v) for v in p]) for k, p in self.terms.items()},
        }

    @classmethod
    def from_json(cls, data: dict) -> "LogPowerSolution":
        re, im = data["nu"]
        mu = complex(re, im)
        terms = {int(k): list(complex_from_json(v)) if len(v) else [] for k, v in data["log_terms"].items()}
        return cls(mu, terms)


def classical_derivative_logpower(f: LogPowerSolution) -> LogPowerSolution:
    r"""Exact :math:`z\,\tfrac{d}{dz}` of a log-power expression.

    Uses :math:`z\tfrac{d}{dz}\bigl(z^{i+\mu}\log^k z\bigr)
    = (i+\mu) z^{i+\mu}\log^k z + k\, z^{i+\mu}\log^{k-1} z`.
    """
    out: dict[int, list] = {}
    for k, poly in f.terms.items():
        out[k] = _poly_add(out.get(k, []), [(i + f.mu) * c for i, c in enumerate(poly)])
        if k > 0:
            out[k - 1] = _poly_add(out.get(k - 1, []), [k * c for c in poly])
    return LogPowerSolution(f.mu, out)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _check_branch(z, needs_cut: bool):
    z = complex(z)
    if needs_cut and z.imag == 0 and z.real <= 0:
        raise BranchCutError(f"z = {z} lies on the branch cut (-inf, 0]")
    return z


def evaluate(f, z):
    """Principal-branch value of a truncated series or log-power expression.

    Powers are ``z**c = exp(c log z)`` with the principal logarithm.
    Non-integer exponents and logarithms reject ``z`` on ``(-inf, 0]``.
    ``z`` may be an array; the result then has shape ``z.shape + f.shape``.
    """
    zarr = np.asarray(z, dtype=complex)
    if zarr.ndim > 0:
        vals = [evaluate(f, complex(w)) for w in zarr.ravel()]
        return np.asarray(vals).reshape(zarr.shape + np.shape(vals[0]))
    if isinstance(f, GeneralizedSeries):
        integral = _is_integer(f.nu) and f.nu.real >= 0
        z = _check_branch(z, not integral)
        if integral:
            lead = z ** int(round(f.nu.real))
        else:
            lead = cmath.exp(f.nu * cmath.log(z))
        powers = z ** np.arange(f.N + 1)
        body = np.tensordot(powers, f.coeffs, axes=(0, 0))
        out = lead * body
        return complex(out) if np.ndim(out) == 0 else out
    if isinstance(f, LogPowerSolution):
        if f.is_zero():
            return 0j
        mu = complex(f.mu)
        has_log = f.K > 0
        integral = _is_integer(mu) and mu.real >= 0
        z = _check_branch(z, has_log or not integral)
        lead = z ** int(round(mu.real)) if integral else cmath.exp(mu * cmath.log(z))
        lz = cmath.log(z) if has_log else 0.0
        total = 0j
        for k, poly in f.terms.items():
            pv = sum(complex(c) * z**i for i, c in enumerate(poly))
            total += pv * lz**k
        return lead * total
    raise TypeError(f"cannot evaluate {type(f).__name__}")
