r"""Complex special functions in double precision.

All functions accept a Python scalar or a numpy array and return the same
kind of object. Overflow and poles are raised, never returned as ``inf``.

The Jacobi theta function uses the convention

.. math::

    \Theta_q(z) = \sum_{n \in \mathbb{Z}} q^{-n(n-1)/2} z^n, \qquad q > 1,

which satisfies :math:`\Theta_q(qz) = qz\,\Theta_q(z)` and vanishes exactly on
:math:`\{-q^k : k \in \mathbb{Z}\}`.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, NumericOverflow, PoleError

#: Products and bilateral sums stop once the next factor/term is below this.
TAIL_TOL = 1e-16
#: Relative tail bound used for the theta series.
THETA_TAIL_TOL = 1e-16

_LANCZOS_G = 7.0
_LANCZOS_COEFFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG_PI = math.log(math.pi)
_MAX_LOG = 709.0


def _as_complex(z):
    arr = np.asarray(z, dtype=complex)
    return arr, arr.ndim == 0


def _ret(arr, scalar):
    return complex(arr) if scalar else arr


def _check_finite(arr, what):
    if not np.all(np.isfinite(arr)):
        raise NumericOverflow(f"{what}: result not finite")


def _lanczos_log_gamma(z):
    # valid for Re(z) >= 0.5
    zm = z - 1.0
    x = np.full(zm.shape, _LANCZOS_COEFFS[0], dtype=complex)
    for k in range(1, len(_LANCZOS_COEFFS)):
        x = x + _LANCZOS_COEFFS[k] / (zm + k)
    t = zm + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (zm + 0.5) * np.log(t) - t + np.log(x)


def ln_gamma(z):
    """Principal-branch logarithm of the Gamma function.

    Lanczos approximation (g = 7, nine coefficients) on ``Re(z) >= 0.5``;
    the reflection formula elsewhere (there the value is correct modulo
    ``2*pi*i``).

    Raises
    ------
    PoleError
        If any ``z`` is a nonpositive integer.
    """
    arr, scalar = _as_complex(z)
    near_int = np.abs(arr.real - np.round(arr.real)) == 0
    if np.any((arr.imag == 0) & (arr.real <= 0) & near_int):
        raise PoleError("ln_gamma: pole at a nonpositive integer")
    out = np.empty(arr.shape, dtype=complex)
    right = arr.real >= 0.5
    if np.any(right):
        out[right] = _lanczos_log_gamma(arr[right])
    left = ~right
    if np.any(left):
        zl = arr[left]
        with np.errstate(over="raise", invalid="raise"):
            try:
                s = np.sin(np.pi * zl)
            except FloatingPointError as exc:
                raise NumericOverflow("ln_gamma: reflection overflow") from exc
        out[left] = _LOG_PI - np.log(s) - _lanczos_log_gamma(1.0 - zl)
    _check_finite(out, "ln_gamma")
    return _ret(out, scalar)


def gamma(z):
    """Gamma function, ``exp(ln_gamma(z))`` with an overflow check."""
    lg = np.asarray(ln_gamma(z), dtype=complex)
    if np.any(lg.real > _MAX_LOG):
        raise NumericOverflow("gamma: overflow")
    return _ret(np.exp(lg), lg.ndim == 0)


def _check_q(q):
    q = float(q)
    if not q > 1.0:
        raise DomainError(f"q must be > 1, got {q}")
    return q


def ln_q_pochhammer_inv(alpha, q, tol=TAIL_TOL):
    r"""``log`` of :math:`(\alpha; q^{-1})_\infty = \prod_{p\ge0}(1-\alpha q^{-p})`.

    The product is truncated once ``|alpha / q**p| < tol``.
    """
    q = _check_q(q)
    a, scalar = _as_complex(alpha)
    acc = np.zeros(a.shape, dtype=complex)
    factor = a.copy()
    inv_q = 1.0 / q
    for _ in range(1_000_000):
        if np.all(np.abs(factor) < tol):
            break
        one_minus = 1.0 - factor
        if np.any(np.abs(one_minus) < 1e-14):
            raise PoleError("q-Pochhammer factor vanishes")
        acc = acc + np.log1p(-factor)
        factor = factor * inv_q
    return _ret(acc, scalar)


def ln_q_gamma(q, z, tol=TAIL_TOL):
    r"""Logarithm (modulo :math:`2\pi i`) of the q-Gamma function, ``q > 1``.

    .. math::

        \Gamma_q(z)=\frac{(q^{-1};q^{-1})_\infty}{(q^{-z};q^{-1})_\infty}
        (q-1)^{1-z}q^{z(z-1)/2}
    """
    q = _check_q(q)
    arr, scalar = _as_complex(z)
    lq = math.log(q)
    head = ln_q_pochhammer_inv(1.0 / q, q, tol)
    tail = ln_q_pochhammer_inv(np.exp(-arr * lq), q, tol)
    out = head - tail + (1.0 - arr) * math.log(q - 1.0) + 0.5 * arr * (arr - 1.0) * lq
    _check_finite(out, "ln_q_gamma")
    return _ret(out, scalar)


def q_gamma(q, z, tol=TAIL_TOL):
    """q-Gamma function for ``q > 1``; ``q_gamma(q, p + 1)`` is the q-factorial of ``p``.

    Raises
    ------
    DomainError
        If ``q <= 1``.
    PoleError
        If a factor of the denominator product vanishes (``z`` a nonpositive integer).
    """
    lg = np.asarray(ln_q_gamma(q, z, tol), dtype=complex)
    if np.any(lg.real > _MAX_LOG):
        raise NumericOverflow("q_gamma: overflow")
    return _ret(np.exp(lg), lg.ndim == 0)


def q_bracket(q, z):
    r"""``(q**(z-1) - 1) / (q - 1)``, the ratio :math:`\Gamma_q(z)/\Gamma_q(z-1)`."""
    q = _check_q(q)
    arr, scalar = _as_complex(z)
    with np.errstate(over="ignore"):
        out = np.expm1((arr - 1.0) * math.log(q)) / (q - 1.0)
    _check_finite(out, "q_bracket")
    return _ret(out, scalar)


def _theta_sums(q, z, tail_tol=THETA_TAIL_TOL):
    """Scaled bilateral sums for a single nonzero ``z``.

    Returns ``(log_scale, s0, s1)`` with
    ``theta = exp(log_scale) * s0`` and ``sum n a_n z^n = exp(log_scale) * s1``.
    """
    lq = math.log(q)
    r = abs(z)
    lr = math.log(r)
    arg = math.atan2(z.imag, z.real)
    n0 = 0.5 + lr / lq
    # log-term is -(lq/2)(n - n0)^2 + const; cut where it is below tail_tol
    half_width = math.sqrt(2.0 * (math.log(1.0 / tail_tol) + 4.0) / lq) + 2.0
    n = np.arange(math.floor(n0 - half_width), math.ceil(n0 + half_width) + 1, dtype=float)
    logs = -0.5 * n * (n - 1.0) * lq + n * lr
    lmax = float(np.max(logs))
    terms = np.exp(logs - lmax + 1j * n * arg)
    return lmax, complex(np.sum(terms)), complex(np.sum(n * terms))


def _scalar_map(func, z):
    arr, scalar = _as_complex(z)
    out = np.empty(arr.shape, dtype=complex)
    for idx in np.ndindex(arr.shape):
        out[idx] = func(complex(arr[idx]))
    return _ret(out, scalar)


def theta_q(q, z, tail_tol=THETA_TAIL_TOL):
    """Jacobi theta function ``sum_n q**(-n(n-1)/2) z**n`` for ``q > 1``, ``z != 0``."""
    q = _check_q(q)

    def one(w):
        if w == 0:
            raise DomainError("theta_q: z = 0")
        lmax, s0, _ = _theta_sums(q, w, tail_tol)
        if lmax > _MAX_LOG:
            raise NumericOverflow("theta_q: overflow")
        return math.exp(lmax) * s0

    return _scalar_map(one, z)


def q_log(q, z, tail_tol=THETA_TAIL_TOL):
    r"""Theta-based q-logarithm :math:`\ell_q(z) = z\varphi'(z)/\varphi(z)`, :math:`\varphi(z)=\Theta_q(-z)`.

    Meromorphic on :math:`\mathbb{C}^\star` with simple poles at the points
    :math:`q^k` of the positive real axis, and :math:`\ell_q(qz)=\ell_q(z)+1`.
    """
    q = _check_q(q)

    def one(w):
        if w == 0:
            raise DomainError("q_log: z = 0")
        _, s0, s1 = _theta_sums(q, -w, tail_tol)
        if abs(s0) < 1e-300:
            raise PoleError("q_log: pole")
        return s1 / s0

    return _scalar_map(one, z)
