r"""Moment sequences and their ratio function.

A moment sequence is an analytic function :math:`m` on ``Re(z) >= 0`` whose
restriction to the nonnegative integers is positive. Everything downstream
only needs two things from it: values of :math:`m` and the ratio

.. math:: r(z) = \frac{m(z)}{m(z-1)}, \qquad \operatorname{Re} z \ge 1.

Built-in kinds
--------------
``factorial``       m(z) = Gamma(1 + z),                  r(z) = z
``gammaratio:alpha`` m(z) = Gamma(1 + z/alpha)
``gevrey:alpha``    m(z) = Gamma(1 + alpha z)
``qfactorial:q``    m(z) = Gamma_q(1 + z),                r(z) = (q**z - 1)/(q - 1)
``catalan``         m(z) = Gamma(2z+1)/(Gamma(z+2) Gamma(z+1)), r(z) = 4 - 6/(z+1)
``table:[...]``     values on 0..K, integer arguments only
``expr:<text>``     closed form in ``z`` over gamma, lgamma, qgamma, exp, log, sqrt
"""

from __future__ import annotations

import ast
import cmath
import enum
import json
import math
import operator
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import special
from .errors import ConvergenceError, DivisionByZero, DomainError, NumericOverflow, ParseError

#: Default search rectangle (re_min, re_max, im_min, im_max) for exponents.
DEFAULT_REGION = (1.0, 50.0, -25.0, 25.0)
DEFAULT_GRID_STEP = 0.25
_DOMAIN_SLACK = 1e-12


class SequenceKind(enum.Enum):
    FACTORIAL = "factorial"
    GAMMA_RATIO = "gammaratio"
    GEVREY = "gevrey"
    Q_FACTORIAL = "qfactorial"
    CATALAN = "catalan"
    TABLE = "table"
    EXPR = "expr"


@dataclass(frozen=True)
class MomentSequence:
    """Immutable description of a moment sequence.

    Use the class-method constructors or :func:`parse_sequence` rather than
    filling the fields by hand.
    """

    kind: SequenceKind
    alpha: float | None = None
    q: float | None = None
    table: tuple[float, ...] | None = None
    expr: str | None = None
    _compiled: object = field(default=None, compare=False, repr=False)

    # -- constructors -----------------------------------------------------
    @classmethod
    def factorial(cls) -> "MomentSequence":
        return cls(SequenceKind.FACTORIAL)

    @classmethod
    def catalan(cls) -> "MomentSequence":
        return cls(SequenceKind.CATALAN)

    @classmethod
    def gamma_ratio(cls, alpha: float) -> "MomentSequence":
        if not alpha > 0:
            raise DomainError("gammaratio needs alpha > 0")
        return cls(SequenceKind.GAMMA_RATIO, alpha=float(alpha))

    @classmethod
    def gevrey(cls, alpha: float) -> "MomentSequence":
        if not alpha > 0:
            raise DomainError("gevrey needs alpha > 0")
        return cls(SequenceKind.GEVREY, alpha=float(alpha))

    @classmethod
    def q_factorial(cls, q: float) -> "MomentSequence":
        if not q > 1:
            raise DomainError("qfactorial needs q > 1")
        return cls(SequenceKind.Q_FACTORIAL, q=float(q))

    @classmethod
    def from_table(cls, values: Sequence[float]) -> "MomentSequence":
        vals = tuple(float(v) for v in values)
        if len(vals) < 2:
            raise DomainError("table needs at least two values")
        if not all(math.isfinite(v) and v > 0 for v in vals):
            raise DomainError("table values must be positive and finite")
        return cls(SequenceKind.TABLE, table=vals)

    @classmethod
    def from_expression(cls, text: str) -> "MomentSequence":
        return cls(SequenceKind.EXPR, expr=text, _compiled=_compile_expr(text))

    # -- descriptors ------------------------------------------------------
    @property
    def descriptor(self) -> str:
        k = self.kind
        if k in (SequenceKind.FACTORIAL, SequenceKind.CATALAN):
            return k.value
        if k in (SequenceKind.GAMMA_RATIO, SequenceKind.GEVREY):
            return f"{k.value}:alpha={self.alpha!r}"
        if k is SequenceKind.Q_FACTORIAL:
            return f"qfactorial:q={self.q!r}"
        if k is SequenceKind.TABLE:
            return "table:" + json.dumps(list(self.table))
        return "expr:" + self.expr

    def __str__(self) -> str:
        return self.descriptor

    # -- evaluation -------------------------------------------------------
    def log_m(self, z):
        """``log m(z)`` (vectorized, no domain check)."""
        k = self.kind
        zc = np.asarray(z, dtype=complex)
        if k is SequenceKind.FACTORIAL:
            out = special.ln_gamma(1.0 + zc)
        elif k is SequenceKind.GAMMA_RATIO:
            out = special.ln_gamma(1.0 + zc / self.alpha)
        elif k is SequenceKind.GEVREY:
            out = special.ln_gamma(1.0 + self.alpha * zc)
        elif k is SequenceKind.Q_FACTORIAL:
            out = special.ln_q_gamma(self.q, 1.0 + zc)
        elif k is SequenceKind.CATALAN:
            out = (
                np.asarray(special.ln_gamma(2.0 * zc + 1.0))
                - special.ln_gamma(zc + 2.0)
                - special.ln_gamma(zc + 1.0)
            )
        elif k is SequenceKind.TABLE:
            out = np.log(np.asarray(self._table_lookup(zc), dtype=complex))
        else:
            out = np.log(np.asarray(self._expr_eval(zc), dtype=complex))
        return complex(out) if np.ndim(out) == 0 else np.asarray(out)

    def _table_lookup(self, zc):
        zc = np.asarray(zc, dtype=complex)
        idx = np.round(zc.real)
        if np.any(np.abs(zc - idx) > 1e-12):
            raise DomainError("table-backed sequence accepts integer arguments only")
        if np.any(idx < 0) or np.any(idx >= len(self.table)):
            raise DomainError(f"table covers indices 0..{len(self.table) - 1}")
        vals = np.asarray(self.table, dtype=complex)[idx.astype(int)]
        return vals

    def _expr_eval(self, zc):
        fn = self._compiled if self._compiled is not None else _compile_expr(self.expr)
        with np.errstate(all="ignore"):
            out = fn(np.asarray(zc, dtype=complex))
        return np.broadcast_to(np.asarray(out, dtype=complex), np.shape(zc)).copy()

    def raw_ratio(self, z):
        """Vectorized ratio without domain or finiteness checks; may contain ``inf``/``nan``."""
        k = self.kind
        zc = np.asarray(z, dtype=complex)
        with np.errstate(all="ignore"):
            if k is SequenceKind.FACTORIAL:
                out = zc.copy()
            elif k is SequenceKind.CATALAN:
                out = (4.0 * zc - 2.0) / (zc + 1.0)
            elif k is SequenceKind.Q_FACTORIAL:
                out = np.expm1(zc * math.log(self.q)) / (self.q - 1.0)
            elif k in (SequenceKind.GAMMA_RATIO, SequenceKind.GEVREY):
                out = np.exp(np.asarray(self.log_m(zc)) - self.log_m(zc - 1.0))
            elif k is SequenceKind.TABLE:
                out = self._table_lookup(zc) / self._table_lookup(zc - 1.0)
            else:
                out = self._expr_eval(zc) / self._expr_eval(zc - 1.0)
        return out


def _check_re(z, lower, what):
    zc = np.asarray(z, dtype=complex)
    if np.any(zc.real < lower - _DOMAIN_SLACK):
        raise DomainError(f"{what} requires Re(z) >= {lower}")
    return zc


def eval_m(seq: MomentSequence, z):
    """Value of the moment function at ``z`` (``Re(z) >= 0``)."""
    zc = _check_re(z, 0.0, "eval_m")
    if seq.kind is SequenceKind.TABLE:
        out = seq._table_lookup(zc)
    elif seq.kind is SequenceKind.EXPR:
        out = seq._expr_eval(zc)
    elif seq.kind is SequenceKind.Q_FACTORIAL:
        out = np.asarray(special.q_gamma(seq.q, 1.0 + zc))
    else:
        lm = np.asarray(seq.log_m(zc))
        if np.any(lm.real > 709.0):
            raise NumericOverflow("eval_m: overflow")
        out = np.exp(lm)
    if not np.all(np.isfinite(out)):
        raise NumericOverflow("eval_m: non-finite value")
    return complex(out) if np.ndim(out) == 0 else out


def ratio(seq: MomentSequence, z):
    """``m(z) / m(z - 1)`` for ``Re(z) >= 1``.

    Closed forms are used for factorial, Catalan and q-factorial sequences;
    Gamma-type sequences are evaluated as a difference of log-Gamma values.
    """
    zc = _check_re(z, 1.0, "ratio")
    if seq.kind in (SequenceKind.TABLE, SequenceKind.EXPR):
        den = np.asarray(eval_m(seq, zc - 1.0))
        if np.any(den == 0):
            raise DivisionByZero("m(z - 1) = 0")
    out = seq.raw_ratio(zc)
    if not np.all(np.isfinite(out)):
        raise NumericOverflow("ratio: non-finite value")
    return complex(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# root search for ratio(mu) = b
# ---------------------------------------------------------------------------


def _newton(seq, b, z0, tol, max_iter=60, h_rel=1e-6):
    z = complex(z0)
    for _ in range(max_iter):
        f = complex(seq.raw_ratio(z)) - b
        if not np.isfinite(f):
            return None
        if f == 0:
            return z
        h = h_rel * (1.0 + abs(z))
        df = (complex(seq.raw_ratio(z + h)) - complex(seq.raw_ratio(z - h))) / (2 * h)
        if not np.isfinite(df) or df == 0:
            break
        step = f / df
        if abs(step) > 2.0:
            step *= 2.0 / abs(step)
        z = z - step
        if z.real < 0.5:
            z = complex(0.5, z.imag)
        if abs(step) <= 1e-15 * (1.0 + abs(z)):
            break
    f = complex(seq.raw_ratio(z)) - b
    return z if np.isfinite(f) and abs(f) <= tol else None


def _closed_form_roots(seq, b, region):
    # exact inverses of the ratio for the sequences where one exists
    re0, re1, im0, im1 = region
    if seq.kind is SequenceKind.FACTORIAL:
        cands = [b]
    elif seq.kind is SequenceKind.CATALAN:
        cands = [] if b == 4 else [(b + 2) / (4 - b)]
    elif seq.kind is SequenceKind.Q_FACTORIAL:
        w = 1 + (seq.q - 1) * b
        if w == 0:
            return []
        lq = math.log(seq.q)
        base = cmath.log(w) / lq
        period = 2 * math.pi / lq
        kmin = math.ceil((im0 - base.imag) / period - 1e-12)
        kmax = math.floor((im1 - base.imag) / period + 1e-12)
        cands = [base + 1j * period * k for k in range(kmin, kmax + 1)]
    else:
        return None
    slack = 1e-12
    return [
        complex(z)
        for z in cands
        if re0 - slack <= z.real <= re1 + slack and im0 - slack <= z.imag <= im1 + slack
    ]


def solve_ratio_equation(
    seq: MomentSequence,
    b: complex,
    region=DEFAULT_REGION,
    step: float = DEFAULT_GRID_STEP,
) -> list[complex]:
    """All ``mu`` in ``region`` with ``ratio(seq, mu) == b``.

    The rectangle is scanned on a grid; cells with positive winding number of
    ``ratio - b`` and grid nodes where ``|ratio - b|`` is locally minimal seed
    complex Newton iterations. The factorial, Catalan and q-factorial
    ratios are inverted in closed form instead. Roots are returned ordered by
    ``|Im mu|`` then ``Re mu``; each satisfies
    ``|ratio(mu) - b| <= 1e-10 (1 + |b|)``.

    Raises
    ------
    DomainError
        If the region reaches below ``Re = 1``.
    ConvergenceError
        If Newton fails inside a cell that provably contains a root.
    """
    b = complex(b)
    re0, re1, im0, im1 = (float(v) for v in region)
    if re0 < 1.0 - _DOMAIN_SLACK or re1 < re0 or im1 < im0:
        raise DomainError(f"invalid search region {region!r}")
    tol = 1e-10 * (1.0 + abs(b))

    exact = _closed_form_roots(seq, b, (re0, re1, im0, im1))
    if exact is not None:
        exact.sort(key=lambda w: (round(abs(w.imag), 9), w.real, w.imag))
        return exact

    if seq.kind is SequenceKind.TABLE:
        roots = []
        lo = max(1, math.ceil(re0))
        hi = min(len(seq.table) - 1, math.floor(re1))
        if im0 <= 0 <= im1:
            for k in range(lo, hi + 1):
                if abs(complex(seq.raw_ratio(k)) - b) <= tol:
                    roots.append(complex(k))
        return roots

    nx = max(2, int(round((re1 - re0) / step)) + 1)
    ny = max(2, int(round((im1 - im0) / step)) + 1)
    xs = np.linspace(re0, re1, nx)
    ys = np.linspace(im0, im1, ny)
    grid = xs[None, :] + 1j * ys[:, None]
    g = np.asarray(seq.raw_ratio(grid)) - b
    absg = np.where(np.isfinite(g), np.abs(g), np.inf)

    seeds: list[tuple[complex, bool]] = []
    # local minima of |g| over the 8-neighbourhood
    padded = np.pad(absg, 1, constant_values=np.inf)
    is_min = np.ones_like(absg, dtype=bool)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            nb = padded[1 + dy : 1 + dy + ny, 1 + dx : 1 + dx + nx]
            is_min &= absg <= nb
    is_min &= np.isfinite(absg)
    for iy, ix in zip(*np.nonzero(is_min)):
        seeds.append((complex(grid[iy, ix]), False))
    # cells enclosing a zero (positive winding), from phase increments on edges
    with np.errstate(invalid="ignore"):
        ph = np.angle(g)

    def wrap(d):
        return (d + np.pi) % (2 * np.pi) - np.pi

    dx = wrap(ph[:, 1:] - ph[:, :-1])
    dy = wrap(ph[1:, :] - ph[:-1, :])
    total = dx[:-1, :] + dy[:, 1:] - dx[1:, :] - dy[:, :-1]
    cell_ok = np.isfinite(total) & (g[:-1, :-1] != 0) & (g[1:, :-1] != 0) & (g[:-1, 1:] != 0) & (g[1:, 1:] != 0)
    wind = np.where(cell_ok, np.rint(np.nan_to_num(total) / (2 * np.pi)), 0)
    for iy, ix in zip(*np.nonzero(wind > 0)):
        seeds.append((complex(0.25 * np.sum(grid[iy : iy + 2, ix : ix + 2])), True))

    roots: list[complex] = []
    slack = 1e-9
    for z0, flagged in seeds:
        z = _newton(seq, b, z0, tol)
        if z is None and flagged:
            raise ConvergenceError(f"Newton stalled in a root-bearing cell near {z0}")
        if z is None:
            continue
        if not (re0 - slack <= z.real <= re1 + slack and im0 - slack <= z.imag <= im1 + slack):
            continue
        if z.real < re0:
            z = complex(re0, z.imag)
        if any(abs(z - r) <= 1e-7 * (1.0 + abs(r)) for r in roots):
            continue
        roots.append(z)
    roots.sort(key=lambda w: (round(abs(w.imag), 9), w.real, w.imag))
    return roots


# ---------------------------------------------------------------------------
# finite strong-regularity diagnostic
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegularityReport:
    lc_ok: bool
    mg_ok: bool
    mg_witness: float
    snq_ok_truncated: bool
    snq_witness: float
    checked_up_to: int
    warnings: tuple[str, ...] = ()


def _log_values(seq, count):
    vals = np.asarray(seq.log_m(np.arange(count, dtype=float))).real
    if not np.all(np.isfinite(vals)):
        raise NumericOverflow("log m not finite")
    return vals - vals[0]


def _mg_log_witness(logs, P):
    best = -np.inf
    for p in range(P + 1):
        qs = np.arange(P + 1)
        s = p + qs
        ok = s >= 1
        vals = (logs[s[ok]] - logs[p] - logs[qs[ok]]) / s[ok]
        best = max(best, float(np.max(vals)))
    return best


def _snq_witness(logs, P, upto):
    # terms M_q / ((q+1) M_{q+1}) for q = 0..upto-1
    qs = np.arange(upto)
    terms = np.exp(logs[qs] - logs[qs + 1]) / (qs + 1.0)
    tails = np.cumsum(terms[::-1])[::-1]
    ps = np.arange(P + 1)
    return float(np.max(tails[ps] * np.exp(logs[ps + 1] - logs[ps])))


def check_strongly_regular(seq: MomentSequence, P: int) -> RegularityReport:
    """Finite-index diagnostic of (lc), (mg) and (snq) on ``m(0..4P+1)``.

    ``mg_ok`` and ``snq_ok_truncated`` compare the minimal witness constant on
    ``0..P`` with the one on ``0..P//2``: a witness that keeps growing is
    reported as a failure. This is evidence, not a proof.
    """
    if P < 2:
        raise DomainError("P >= 2 required")
    upto = 4 * P
    logs = _log_values(seq, upto + 2)
    p = np.arange(1, P + 1)
    lc_slack = 1e-12 * (1.0 + np.abs(logs[p]))
    lc_ok = bool(np.all(2 * logs[p] <= logs[p - 1] + logs[p + 1] + lc_slack))

    half = max(1, P // 2)
    mg_full = _mg_log_witness(logs, P)
    mg_half = _mg_log_witness(logs, half)
    mg_ok = bool(mg_full - mg_half <= 0.25 * (1.0 + abs(mg_half)))

    snq_full = _snq_witness(logs, P, upto)
    snq_half = _snq_witness(logs, half, upto)
    snq_ok = bool(np.isfinite(snq_full) and snq_full <= 1.25 * snq_half + 1e-12)
    return RegularityReport(
        lc_ok=lc_ok,
        mg_ok=mg_ok,
        mg_witness=float(math.exp(mg_full)),
        snq_ok_truncated=snq_ok,
        snq_witness=snq_full,
        checked_up_to=P,
        warnings=("snq tails truncated at 4P; necessary-style check only",),
    )


# ---------------------------------------------------------------------------
# descriptor grammar and closed-form expressions
# ---------------------------------------------------------------------------

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}


def _masked(func, x):
    # evaluate away from poles and non-finite inputs, nan elsewhere
    x = np.asarray(x, dtype=complex)
    pole = (x.imag == 0) & (x.real <= 0) & (x.real == np.round(x.real))
    ok = np.isfinite(x) & ~pole
    out = np.full(x.shape, np.nan, dtype=complex)
    if np.any(ok):
        out[ok] = func(x[ok])
    return out if x.ndim else complex(out)


def _expr_lgamma(x):
    return _masked(special.ln_gamma, x)


def _expr_gamma(x):
    with np.errstate(over="ignore"):
        return np.exp(_expr_lgamma(x))


def _expr_qgamma(q, x):
    q = float(np.real(q))
    with np.errstate(over="ignore"):
        return np.exp(_masked(lambda v: special.ln_q_gamma(q, v), x))


_FUNCS = {
    "gamma": _expr_gamma,
    "lgamma": _expr_lgamma,
    "qgamma": _expr_qgamma,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
}
_CONSTS = {"pi": math.pi, "e": math.e}


def _compile_expr(text: str):
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"bad expression {text!r}: {exc}") from exc

    def build(node):
        if isinstance(node, ast.Expression):
            return build(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)):
            v = node.value
            return lambda z: v
        if isinstance(node, ast.Name):
            if node.id == "z":
                return lambda z: z
            if node.id in _CONSTS:
                v = _CONSTS[node.id]
                return lambda z: v
            raise ParseError(f"unknown name {node.id!r} in expression")
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            op, left, right = _BINOPS[type(node.op)], build(node.left), build(node.right)
            return lambda z: op(left(z), right(z))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            op, arg = _UNOPS[type(node.op)], build(node.operand)
            return lambda z: op(arg(z))
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
            fn = _FUNCS[node.func.id]
            args = [build(a) for a in node.args]

            def call(z):
                vals = [a(z) for a in args]
                try:
                    return fn(*vals)
                except Exception:
                    pass
                # retry pointwise so one pole does not spoil a whole scan
                shape = np.broadcast(*vals).shape
                out = np.full(shape, np.nan, dtype=complex)
                bvals = [np.broadcast_to(np.asarray(v, dtype=complex), shape) for v in vals]
                for idx in np.ndindex(shape):
                    try:
                        out[idx] = fn(*(v[idx] for v in bvals))
                    except Exception:
                        pass
                return out if shape else complex(out)

            return call
        raise ParseError(f"unsupported syntax in expression {text!r}")

    return build(tree)


def _kv(body: str) -> dict[str, float]:
    out = {}
    for part in body.split(","):
        if "=" not in part:
            raise ParseError(f"expected key=value, got {part!r}")
        k, v = part.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError as exc:
            raise ParseError(f"bad number {v!r}") from exc
    return out


def parse_sequence(descriptor: str) -> MomentSequence:
    """Parse a descriptor such as ``"qfactorial:q=2"`` or ``"table:[1,1,2,5]"``."""
    text = descriptor.strip()
    head, _, body = text.partition(":")
    head = head.strip().lower()
    try:
        if head == "factorial" and not body:
            return MomentSequence.factorial()
        if head == "catalan" and not body:
            return MomentSequence.catalan()
        if head in ("gammaratio", "gevrey"):
            alpha = _kv(body)["alpha"]
            return MomentSequence.gamma_ratio(alpha) if head == "gammaratio" else MomentSequence.gevrey(alpha)
        if head == "qfactorial":
            return MomentSequence.q_factorial(_kv(body)["q"])
        if head == "table":
            return MomentSequence.from_table(json.loads(body))
        if head == "expr":
            return MomentSequence.from_expression(body)
    except (KeyError, json.JSONDecodeError, TypeError, DomainError) as exc:
        raise ParseError(f"bad sequence descriptor {descriptor!r}: {exc}") from exc
    raise ParseError(f"unknown sequence descriptor {descriptor!r}")
