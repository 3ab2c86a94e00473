r"""Auxiliary H-functions for Jordan blocks.

A Jordan block with eigenvalue :math:`e = r(\mu)` needs functions with

.. math:: H_1 = z^\mu, \qquad
          z\,\partial_m H_{p+1} = e\,H_{p+1} + H_p, \quad p \ge 1.

Two constructions are available.

Factorial sequence
    :math:`\partial_m = d/dz`, :math:`e = \mu` and
    :math:`H_{p+1} = z^\mu \log^p z / p!`. These are exact
    :class:`~momentsys.series.LogPowerSolution` objects.

q-factorial sequence, :math:`\mu` a positive integer
    :math:`z\partial_m` is :math:`(y(qz) - y(z))/(q-1)`, so the chain reads
    :math:`H_{p+1}(qz) = c\,H_{p+1}(z) + (q-1)\,H_p(z)` with
    :math:`c = 1 + (q-1)e = q^\mu`. Writing :math:`H_{p+1} = M u` with
    :math:`M(z) = \Theta_q(z)/\Theta_q(z/c)`, which solves :math:`M(qz) = cM(z)`,
    turns it into :math:`u(qz) = u(z) + (q-1)H_p(z)/M(qz)`. For integer
    :math:`\mu` one has :math:`M(z) = q^{-\mu(\mu-1)/2} z^\mu`, and with the
    theta q-logarithm :math:`L` (:math:`L(qz) = L(z) + 1`)

    .. math:: H_{p+1}(z) = z^\mu\, \gamma^p \binom{L(z)}{p},
              \qquad \gamma = \frac{q-1}{c}.

    :math:`L` has simple poles at :math:`q^k`, so the functions are
    meromorphic on :math:`\mathbb{C}^\star` and holomorphic off
    :math:`[0, \infty)`.

The backward telescoping sum :math:`u(z) = -\sum_{k\ge0} R(q^k z)` solves
:math:`u(qz) = u(z) + R(z)` only when the terms decay; for the H-chain they
are constant, which :func:`solve_additive_telescoping` detects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import special
from .errors import DomainError, H3Unavailable, PoleProximity, TelescopeDivergence
from .moments import MomentSequence, SequenceKind
from .series import LogPowerSolution

TELESCOPE_TOL = 1e-14
TELESCOPE_MAX_STEPS = 10_000
POLE_REL_DIST = 1e-8


def classical_H(p: int, mu) -> LogPowerSolution:
    r""":math:`z^\mu \log^p z / p!` as an exact log-power expression (``p >= 0``)."""
    if p < 0:
        raise DomainError("p must be >= 0")
    return LogPowerSolution(mu, {p: [Fraction(1, math.factorial(p))]})


def _near_pole(points, z, scale) -> bool:
    return bool(np.min(np.abs(points - z)) <= POLE_REL_DIST * scale)


def _check_theta_zero(q, w):
    """Raise when ``w`` is close to a zero ``-q^k`` of the theta function."""
    if w.real < 0 and abs(w.imag) <= POLE_REL_DIST * abs(w):
        k = round(math.log(abs(w)) / math.log(q))
        if abs(w + q**k) <= POLE_REL_DIST * abs(w):
            raise PoleProximity(f"{w} is within {POLE_REL_DIST:g} of a theta zero")


def theta_quotient(q: float, c: complex, z) -> complex:
    r""":math:`\Theta_q(z)/\Theta_q(z/c)`, a solution of :math:`M(qz) = cM(z)`."""
    z, c = complex(z), complex(c)
    if z == 0:
        raise DomainError("z = 0")
    _check_theta_zero(q, z / c)
    return complex(special.theta_q(q, z)) / complex(special.theta_q(q, z / c))


def q_log_checked(q: float, z) -> complex:
    """Theta q-logarithm with a guard against its poles at ``q^k``."""
    z = complex(z)
    if z == 0:
        raise DomainError("z = 0")
    if z.real > 0 and abs(z.imag) <= POLE_REL_DIST * abs(z):
        k = round(math.log(z.real) / math.log(q))
        if abs(z - q**k) <= POLE_REL_DIST * abs(z):
            raise PoleProximity(f"{z} is within {POLE_REL_DIST:g} of the pole q^{k}")
    return complex(special.q_log(q, z))


def _binom(x: complex, p: int) -> complex:
    out = 1.0 + 0j
    for j in range(p):
        out *= (x - j) / (j + 1)
    return out


@dataclass(frozen=True)
class QHFunction:
    r"""Evaluator for :math:`H_{p}` of the q-chain (``index = p``, ``H_1 = z^mu``)."""

    q: float
    mu: int
    index: int

    @property
    def c(self) -> float:
        return float(self.q**self.mu)

    @property
    def gamma(self) -> float:
        return (self.q - 1.0) / self.c

    @property
    def eigenvalue(self) -> float:
        """``r(mu) = (q^mu - 1)/(q - 1)``."""
        return (self.c - 1.0) / (self.q - 1.0)

    def multiplier(self, z) -> complex:
        """``M(z)``, evaluated in closed form ``q^(-mu(mu-1)/2) z^mu``."""
        return complex(self.q ** (-0.5 * self.mu * (self.mu - 1)) * complex(z) ** self.mu)

    def __call__(self, z) -> complex:
        return self.evaluate(z)

    def evaluate(self, z):
        zarr = np.asarray(z, dtype=complex)
        if zarr.ndim:
            return np.array([self.evaluate(complex(w)) for w in zarr.ravel()]).reshape(zarr.shape)
        z = complex(z)
        if z == 0:
            raise DomainError("z = 0")
        k = self.index - 1
        lead = z**self.mu
        if k == 0:
            return lead
        return lead * self.gamma**k * _binom(q_log_checked(self.q, z), k)

    def to_json(self) -> dict:
        return {"type": "qtheta", "q": self.q, "mu": self.mu, "index": self.index, "c": self.c}


def q_H_functions(q: float, mu: int, K: int) -> list[QHFunction]:
    """``[H_1, ..., H_{K+1}]`` for the q-factorial sequence; ``K = 0`` gives ``[z^mu]``."""
    if not q > 1:
        raise DomainError("q must be > 1")
    if int(mu) != mu or mu < 1:
        raise DomainError("mu must be a positive integer")
    if K < 0:
        raise DomainError("K must be >= 0")
    return [QHFunction(float(q), int(mu), p) for p in range(1, K + 2)]


def solve_additive_telescoping(R, q: float, z, tol: float = TELESCOPE_TOL, max_steps: int = TELESCOPE_MAX_STEPS):
    r"""``u(z) = -sum_{k>=0} R(q^k z)``, a solution of :math:`u(qz) = u(z) + R(z)`.

    Summation stops once a term is below ``tol`` times the partial sum.

    Raises
    ------
    TelescopeDivergence
        If that does not happen within ``max_steps`` terms or a term overflows.
    """
    z = complex(z)
    total = 0j
    w = z
    for _ in range(max_steps):
        term = complex(R(w))
        if not np.isfinite(term):
            raise TelescopeDivergence("term overflow along the q-spiral")
        total -= term
        if abs(term) <= tol * max(abs(total), 1e-300):
            return total
        w = w * q
        if not np.isfinite(w):
            break
    raise TelescopeDivergence(f"terms did not decay within {max_steps} steps")


# ---------------------------------------------------------------------------
# providers
# ---------------------------------------------------------------------------


class ClassicalH3:
    """Log-power H-functions for the factorial sequence."""

    kind = "logpower"
    supports_tilde = True

    def functions(self, mu, K: int) -> list[LogPowerSolution]:
        """``[H_1, ..., H_K]`` with ``H_k = z^mu log^(k-1) z / (k-1)!``."""
        return [classical_H(k - 1, mu) for k in range(1, K + 1)]

    def tilde(self) -> LogPowerSolution:
        """``log z``: multiplies any ``z^nu`` series into its own derivative chain."""
        return LogPowerSolution(0, {1: [1]})


class QH3:
    """Theta-based H-functions for the q-factorial sequence (integer exponents only)."""

    kind = "qtheta"
    supports_tilde = False

    def __init__(self, q: float):
        self.q = float(q)

    def functions(self, mu, K: int) -> list[QHFunction]:
        mu_c = complex(mu)
        if abs(mu_c.imag) > 1e-12 or abs(mu_c.real - round(mu_c.real)) > 1e-9 or round(mu_c.real) < 1:
            raise H3Unavailable("q H-functions are constructed for positive integer exponents only")
        return q_H_functions(self.q, int(round(mu_c.real)), K - 1)

    def tilde(self):
        raise H3Unavailable("no multiplier H~ is known for the q-factorial sequence")


def provider_for(seq: MomentSequence):
    """The H-function provider for ``seq``, or ``None``."""
    if seq.kind is SequenceKind.FACTORIAL:
        return ClassicalH3()
    if seq.kind is SequenceKind.Q_FACTORIAL:
        return QH3(seq.q)
    return None


def q_chain_defect(H: QHFunction, prev, z) -> float:
    """``|H(qz) - c H(z) - (q-1) prev(z)|`` at one point."""
    z = complex(z)
    return abs(H(H.q * z) - H.c * H(z) - (H.q - 1.0) * prev(z))

