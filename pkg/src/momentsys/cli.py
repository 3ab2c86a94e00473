"""Command-line front end.

Usage::

    momentsys <command> problem.toml [--out PATH] [--pmax N] [--trunc N]
              [--tol X] [--region re0,re1,im0,im1] [--csv] [--quiet] [--timing]
    momentsys batch DIR [--out DIR] [--workers K] ...

Commands: ``solve``, ``basis``, ``zmb``, ``planar``, ``check``, ``verify``,
``cov`` and ``run`` (dispatch on the ``mode`` stored in the file).

A problem file looks like::

    version = 1
    [problem]
    mode = "solve"
    sequence = "catalan"
    A = [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]
    B = [[[1, 0], [1, 0]], [[0, 0], [1, 0]]]
    mu = [1, 0]              # or "auto", or a list of [re, im]
    truncation = 20
    p_max = 10000

Exit codes: 0 success, 2 hypothesis failure (the report is still written),
1 hard error (an ``error`` object is written instead).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import tomli
import tomli_w

from . import matrices, structure
from .errors import MomentSysError, NoExponentFound, ParseError, Resonant
from .matrices import JordanDecomposition
from .moments import DEFAULT_REGION, MomentSequence, SequenceKind, parse_sequence, ratio, solve_ratio_equation
from .series import GeneralizedSeries, cauchy_product, evaluate
from .solver import (
    DEFAULT_PMAX,
    DEFAULT_RES_TOL,
    FloquetSolution,
    ProblemSpec,
    check_h1,
    floquet_basis,
    floquet_coefficients,
    hypothesis_report,
    residual,
    verify_jackson,
)

EXIT_OK, EXIT_ERROR, EXIT_HYPOTHESIS = 0, 1, 2
MODES = ("solve", "basis", "zmb", "planar", "check", "verify-jackson", "change-of-variable")
COMMAND_MODE = {
    "solve": "solve",
    "basis": "basis",
    "zmb": "zmb",
    "planar": "planar",
    "check": "check",
    "verify": "verify-jackson",
    "cov": "change-of-variable",
}
EVAL_RAY_ANGLE = math.pi / 4
EVAL_POINTS = 50
REPORT_COEFFS = 5


# ---------------------------------------------------------------------------
# JSON helpers
# ---------------------------------------------------------------------------


def _c(x) -> list:
    x = complex(x)
    return [_f(x.real), _f(x.imag)]


def _f(x):
    x = float(x)
    return x + 0.0 if math.isfinite(x) else None


def jsonable(obj):
    """Plain JSON data: complex as ``[re, im]``, non-finite floats as ``null``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return jsonable(np.stack([obj.real, obj.imag], axis=-1).tolist())
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _f(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return _c(obj)
    return obj


def dumps(data) -> str:
    return json.dumps(jsonable(data), sort_keys=True, allow_nan=False, indent=2) + "\n"


def _parse_complex(v, what: str) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(t, (int, float)) for t in v):
        return complex(v[0], v[1])
    raise ParseError(f"{what}: expected a number or an [re, im] pair, got {v!r}")


def _parse_matrix(rows, what: str) -> np.ndarray:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ParseError(f"{what} must be a list of rows")
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ParseError(f"{what} must be square")
    return np.array([[_parse_complex(v, what) for v in r] for r in rows], dtype=complex)


def _matrix_out(M) -> list:
    return [[_c(v) for v in row] for row in np.asarray(M, dtype=complex)]


# ---------------------------------------------------------------------------
# problem files
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProblemFile:
    """A parsed problem description; ``mu = None`` means automatic search."""

    A: np.ndarray
    B: np.ndarray
    sequence: str
    mode: str = "solve"
    mu: tuple[complex, ...] | None = None
    N: int = 20
    p_max: int = DEFAULT_PMAX
    tolerances: dict = field(default_factory=dict)
    lam: complex | None = None
    jordan_hint: tuple[np.ndarray, np.ndarray] | None = None
    region: tuple[float, float, float, float] = DEFAULT_REGION
    N_offset: int = 0
    version: int = 1

    @property
    def seq(self) -> MomentSequence:
        return parse_sequence(self.sequence)

    @property
    def eps_res(self) -> float:
        return float(self.tolerances.get("res", DEFAULT_RES_TOL))

    def spec(self) -> ProblemSpec:
        return ProblemSpec(self.A, self.B, self.seq, self.N, self.p_max, self.tolerances.get("spec"), self.eps_res)

    def hint(self) -> JordanDecomposition | None:
        if self.jordan_hint is None:
            return None
        P, J = self.jordan_hint
        sizes, eigs = _blocks_of(J)
        return JordanDecomposition(P, J, sizes, eigs)

    def to_dict(self) -> dict:
        prob = {
            "mode": self.mode,
            "sequence": self.sequence,
            "A": _matrix_out(self.A),
            "B": _matrix_out(self.B),
            "mu": "auto" if self.mu is None else [_c(m) for m in self.mu],
            "truncation": self.N,
            "p_max": self.p_max,
            "region": list(self.region),
            "N_offset": self.N_offset,
        }
        if self.tolerances:
            prob["tolerances"] = dict(self.tolerances)
        if self.lam is not None:
            prob["lambda"] = _c(self.lam)
        if self.jordan_hint is not None:
            prob["jordan_hint"] = {"P": _matrix_out(self.jordan_hint[0]), "J": _matrix_out(self.jordan_hint[1])}
        return {"version": self.version, "problem": prob}

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "ProblemFile":
        if not isinstance(data, dict) or "problem" not in data:
            raise ParseError("missing [problem] table")
        version = data.get("version", 1)
        if version != 1:
            raise ParseError(f"unsupported version {version!r}")
        p = data["problem"]
        known = {"mode", "sequence", "A", "B", "mu", "truncation", "N", "p_max", "tolerances", "lambda",
                 "jordan_hint", "region", "N_offset"}
        extra = set(p) - known
        if extra:
            raise ParseError(f"unknown keys in [problem]: {sorted(extra)}")
        for key in ("A", "B", "sequence"):
            if key not in p:
                raise ParseError(f"missing problem.{key}")
        A, B = _parse_matrix(p["A"], "A"), _parse_matrix(p["B"], "B")
        if A.shape != B.shape:
            raise ParseError(f"A is {A.shape[0]}x{A.shape[0]} but B is {B.shape[0]}x{B.shape[0]}")
        seq_text = p["sequence"]
        if not isinstance(seq_text, str):
            raise ParseError("sequence must be a descriptor string")
        parse_sequence(seq_text)
        mode = p.get("mode", "solve")
        if mode not in MODES:
            raise ParseError(f"unknown mode {mode!r}")
        mu_raw = p.get("mu", "auto")
        if mu_raw == "auto":
            mu = None
        elif isinstance(mu_raw, list) and mu_raw and isinstance(mu_raw[0], list):
            mu = tuple(_parse_complex(m, "mu") for m in mu_raw)
        else:
            mu = (_parse_complex(mu_raw, "mu"),)
        N = p.get("truncation", p.get("N", 20))
        if not isinstance(N, int) or N < 1:
            raise ParseError("truncation must be an integer >= 1")
        p_max = p.get("p_max", DEFAULT_PMAX)
        if not isinstance(p_max, int) or p_max < 1:
            raise ParseError("p_max must be an integer >= 1")
        tol = p.get("tolerances", {})
        if not isinstance(tol, dict) or any(not isinstance(v, (int, float)) for v in tol.values()):
            raise ParseError("tolerances must map names to numbers")
        lam = _parse_complex(p["lambda"], "lambda") if "lambda" in p else None
        hint = None
        if "jordan_hint" in p:
            h = p["jordan_hint"]
            if not isinstance(h, dict) or set(h) != {"P", "J"}:
                raise ParseError("jordan_hint needs P and J")
            hint = (_parse_matrix(h["P"], "jordan_hint.P"), _parse_matrix(h["J"], "jordan_hint.J"))
            _blocks_of(hint[1])
        region = _parse_region(p.get("region", list(DEFAULT_REGION)))
        N_offset = p.get("N_offset", 0)
        if not isinstance(N_offset, int) or N_offset < 0:
            raise ParseError("N_offset must be an integer >= 0")
        return cls(A, B, seq_text, mode, mu, N, p_max, {k: float(v) for k, v in tol.items()}, lam, hint, region,
                   N_offset, version)

    @classmethod
    def from_toml(cls, text: str) -> "ProblemFile":
        try:
            data = tomli.loads(text)
        except tomli.TOMLDecodeError as exc:
            raise ParseError(f"malformed TOML: {exc}") from exc
        return cls.from_dict(data)

    def __eq__(self, other):
        if not isinstance(other, ProblemFile):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None


def _blocks_of(J):
    blocks = matrices._read_jordan_form(np.asarray(J, dtype=complex))
    if blocks is None:
        raise ParseError("jordan_hint.J is not in Jordan form")
    return blocks


def _parse_region(v) -> tuple[float, float, float, float]:
    if isinstance(v, str):
        v = v.split(",")
    try:
        out = tuple(float(t) for t in v)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"bad region {v!r}") from exc
    if len(out) != 4:
        raise ParseError("region needs re0,re1,im0,im1")
    return out


# ---------------------------------------------------------------------------
# result bundles
# ---------------------------------------------------------------------------


@dataclass
class ResultBundle:
    """JSON-ready results of one run; every solution carries its residual."""

    command: str
    problem: dict
    hypothesis_reports: list = field(default_factory=list)
    solutions: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    timing: dict | None = None
    error: dict | None = None
    exit_code: int = EXIT_OK
    extras: dict = field(default_factory=dict, repr=False, compare=False)

    def to_dict(self) -> dict:
        out = {
            "command": self.command,
            "problem": self.problem,
            "hypothesis_reports": self.hypothesis_reports,
            "solutions": self.solutions,
            "residuals": self.residuals,
            "diagnostics": self.diagnostics,
            "exit_code": self.exit_code,
        }
        if self.timing is not None:
            out["timing"] = self.timing
        if self.error is not None:
            out["error"] = self.error
        return jsonable(out)

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ResultBundle":
        d = json.loads(text)
        return cls(
            d["command"], d["problem"], d["hypothesis_reports"], d["solutions"], d["residuals"],
            d["diagnostics"], d.get("timing"), d.get("error"), d["exit_code"],
        )

    def add_solution(self, sol: dict, res: float):
        sol = dict(sol)
        sol["residual"] = res
        self.solutions.append(jsonable(sol))
        self.residuals.append(_f(res))


def report_to_dict(rep) -> dict:
    h1 = rep.h1
    out = {
        "mu": _c(h1.mu),
        "h1": {
            "holds": h1.holds,
            "eigenvalue_ok": h1.eigenvalue_ok,
            "eigvec": None if h1.eigvec is None else [_c(v) for v in h1.eigvec],
            "resonances": list(h1.resonances),
            "checked_up_to": h1.checked_up_to,
            "offset": h1.offset,
        },
        "h2": None
        if rep.h2 is None
        else {
            "bound_C": _f(rep.h2.bound_C),
            "argmax_p": rep.h2.argmax_p,
            "checked_up_to": rep.h2.checked_up_to,
            "monotone_tail_flag": rep.h2.monotone_tail_flag,
        },
        "h2_error": rep.h2_error,
        "coro1": {
            "holds": rep.coro1.holds,
            "margin": _f(rep.coro1.margin),
            "sup_ratio_inverse": _f(rep.coro1.sup_ratio_inverse),
            "checked_up_to": rep.coro1.checked_up_to,
            "note": rep.coro1.note,
        },
        "ok": rep.ok,
    }
    return out


def floquet_to_dict(sol: FloquetSolution) -> dict:
    d = sol.diagnostics
    return {
        "type": "floquet",
        "mu": _c(sol.mu),
        "series": sol.series.to_json(),
        "diagnostics": {
            "geometric_rate_estimate": _f(d.get("geometric_rate_estimate", float("nan"))),
            "coeff_growth": [_f(v) for v in d.get("coeff_growth", [])],
        },
    }


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _candidate_mus(pf: ProblemFile) -> list[complex]:
    if pf.mu is not None:
        return list(pf.mu)
    seq = pf.seq
    mus = []
    for b in matrices.eigen(pf.B).distinct():
        mus.extend(solve_ratio_equation(seq, b, pf.region))
    return mus


def _eigvecs(B, r0):
    basis = matrices.null_space(B - r0 * np.eye(B.shape[0]), 1e-8 * (1.0 + matrices.one_norm(B)))
    return [matrices._normalize(basis[:, k]) for k in range(basis.shape[1])]


def cmd_check(pf: ProblemFile, bundle: ResultBundle):
    spec = pf.spec()
    failed = False
    mus = _candidate_mus(pf)
    for mu in mus:
        rep = hypothesis_report(spec, mu, pf.N_offset)
        bundle.hypothesis_reports.append(report_to_dict(rep))
        failed |= not rep.ok
    if not mus:
        bundle.diagnostics["note"] = "no exponent found in region"
        failed = True
    return spec, failed


def cmd_solve(pf: ProblemFile, bundle: ResultBundle):
    spec, failed = cmd_check(pf, bundle)
    for rep in bundle.hypothesis_reports:
        if not rep["ok"]:
            continue
        mu = complex(*rep["mu"]) + pf.N_offset
        r0 = complex(ratio(spec.seq, mu))
        for v in _eigvecs(spec.B, r0):
            sol = floquet_coefficients(spec, mu, v)
            bundle.add_solution(floquet_to_dict(sol), residual(sol, spec))
    if pf.N_offset:
        bundle.diagnostics["N_offset"] = pf.N_offset
    return EXIT_HYPOTHESIS if failed else EXIT_OK


def cmd_basis(pf: ProblemFile, bundle: ResultBundle):
    spec = pf.spec()
    sols = floquet_basis(spec, pf.region)
    for sol in sols:
        bundle.add_solution(floquet_to_dict(sol), residual(sol, spec))
    bundle.diagnostics["complete"] = len(sols) == spec.n
    bundle.diagnostics["found"] = len(sols)
    return EXIT_OK if sols else EXIT_HYPOTHESIS


def cmd_zmb(pf: ProblemFile, bundle: ResultBundle):
    seq = pf.seq
    try:
        mat = structure.zmb_general(pf.B, seq, pf.region, hint=pf.hint(), p_max=pf.p_max, exponents=pf.mu)
    except (Resonant, NoExponentFound) as exc:
        bundle.error = {"type": type(exc).__name__, "message": str(exc)}
        return EXIT_HYPOTHESIS
    defects = [structure.column_defect(c, pf.B, seq) for c in mat.columns]
    sol = mat.to_json()
    sol["type"] = "zmb"
    sol["column_defects"] = defects
    bundle.add_solution(sol, max(defects))
    bundle.extras["zmb"] = mat
    return EXIT_OK


def cmd_planar(pf: ProblemFile, bundle: ResultBundle):
    if pf.B.shape != (2, 2):
        raise ParseError("planar mode needs 2x2 matrices")
    seq = pf.seq
    At, J, P = structure.jordan_reduce_system(pf.A, pf.B, pf.hint())
    diag = abs(J[0, 1]) == 0
    mus = list(pf.mu) if pf.mu is not None else None
    try:
        if diag:
            if mus is None:
                mus = [_first_root(seq, J[k, k], pf.region) for k in range(2)]
            if len(mus) != 2:
                raise ParseError("planar diagonal case needs two exponents")
            res = structure.planar_diagonal(At, seq, mus[0], mus[1], pf.N, pf.p_max)
            sols = list(res.solutions)
        else:
            mu = mus[0] if mus else _first_root(seq, J[0, 0], pf.region)
            res = structure.planar_jordan(At, seq, mu, pf.N, p_max=pf.p_max,
                                          want_second=seq.kind is SequenceKind.FACTORIAL)
            sols = [res.first]
    except Resonant as exc:
        bundle.error = {"type": "Resonant", "message": str(exc)}
        return EXIT_HYPOTHESIS
    spec = pf.spec()
    for s in sols:
        # back to the original coordinates: y = P y_reduced
        mapped = FloquetSolution(s.mu, s.series.apply(P), s.diagnostics)
        bundle.add_solution(floquet_to_dict(mapped), residual(mapped, spec))
    meta = {k: v for k, v in res.meta.items() if k != "closed_form"}
    cf = res.meta.get("closed_form")
    if cf is not None:
        meta["closed_form_gap"] = {k: v for k, v in cf.items() if "gap" in k}
    meta["case"] = "diagonal" if diag else "jordan"
    meta["P"] = P
    if not diag and res.second is not None:
        sec = res.second
        meta["second_solution"] = sec.to_json()
        meta["second_solution_residual"] = sec.residual(At, J, seq)
    bundle.diagnostics["planar"] = meta
    return EXIT_OK


def _first_root(seq, b, region):
    roots = solve_ratio_equation(seq, b, region)
    if not roots:
        raise NoExponentFound(f"no exponent with r(mu) = {complex(b)} in region")
    return roots[0]


def _sample_points(count: int = 20) -> np.ndarray:
    t = np.linspace(0.15, 0.9, count)
    return t * np.exp(1j * (0.3 + 2.2 * np.arange(count) / count))


def cmd_verify(pf: ProblemFile, bundle: ResultBundle):
    code = cmd_solve(pf, bundle)
    seq = pf.seq
    if seq.kind is not SequenceKind.Q_FACTORIAL:
        raise ParseError("verify needs a qfactorial sequence")
    pts = _sample_points()
    devs = []
    for sol in bundle.solutions:
        series = GeneralizedSeries.from_json(sol["series"])
        mono = GeneralizedSeries.monomial(series.nu, 1.0)
        devs.append({"mu": sol["mu"], "solution": verify_jackson(series, seq.q, pts),
                     "monomial": verify_jackson(mono, seq.q, pts)})
    bundle.diagnostics["jackson"] = devs
    worst = max((max(d["solution"], d["monomial"]) for d in devs), default=0.0)
    bundle.diagnostics["jackson_max_deviation"] = worst
    tol = pf.tolerances.get("jackson", 1e-10)
    if worst > tol or any(r is None or r > pf.eps_res for r in bundle.residuals):
        return EXIT_HYPOTHESIS
    return code


def cmd_cov(pf: ProblemFile, bundle: ResultBundle):
    seq = pf.seq
    spec = pf.spec()
    lam = pf.lam if pf.lam is not None else matrices.eigen(pf.A).distinct()[0]
    mu = None
    for cand in _candidate_mus(pf):
        if check_h1(pf.B, seq, cand, pf.p_max).holds:
            mu = cand
            break
    if mu is None:
        bundle.error = {"type": "Resonant", "message": "no non-resonant exponent available"}
        return EXIT_HYPOTHESIS
    cv = structure.change_of_variable(pf.A, pf.B, seq, mu, lam, pf.N, pf.p_max)
    s0 = _eigvecs(pf.B, complex(ratio(seq, mu)))[0]
    direct = floquet_coefficients(spec, mu, s0)
    shifted = floquet_coefficients(replace(spec, A=pf.A - lam * np.eye(spec.n)), mu, s0)
    combined = cauchy_product(cv.h, shifted.series)
    gap = float(np.max(np.abs(combined.coeffs - direct.coeffs)) / np.max(np.abs(direct.coeffs)))
    bundle.add_solution(floquet_to_dict(direct), residual(direct, spec))
    bundle.diagnostics["change_of_variable"] = {
        "lambda": _c(lam),
        "mu": _c(mu),
        "h": cv.h.to_json(),
        "s_hat": [_matrix_out(s) for s in cv.s_hat],
        "consistency_gap": gap,
    }
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "basis": cmd_basis,
    "zmb": cmd_zmb,
    "planar": cmd_planar,
    "check": lambda pf, b: EXIT_HYPOTHESIS if cmd_check(pf, b)[1] else EXIT_OK,
    "verify-jackson": cmd_verify,
    "change-of-variable": cmd_cov,
}


# ---------------------------------------------------------------------------
# text report and CSV
# ---------------------------------------------------------------------------


def _g(x) -> str:
    if x is None:
        return "nan"
    if isinstance(x, list):
        re, im = (0.0 if v is None else v for v in x)
        return f"{re:.12g}{im:+.12g}j"
    return f"{x:.12g}"


def format_report(bundle: ResultBundle) -> str:
    """Deterministic plain-text summary with 12 significant digits."""
    lines = [f"command: {bundle.command}", f"sequence: {bundle.problem.get('problem', {}).get('sequence', '?')}"]
    if bundle.error is not None:
        lines.append(f"error: {bundle.error['type']}: {bundle.error['message']}")
    for rep in bundle.hypothesis_reports:
        h1 = rep["h1"]
        lines.append(f"mu = {_g(rep['mu'])}: H1 {'holds' if h1['holds'] else 'FAILS'}"
                     f" (checked to p = {h1['checked_up_to']})")
        if not h1["eigenvalue_ok"]:
            lines.append("  r(mu) is not an eigenvalue of B")
        if h1["resonances"]:
            lines.append("  resonance table:")
            lines.append("    p")
            lines.extend(f"    {p}" for p in h1["resonances"][:20])
        if rep["h2"] is not None:
            lines.append(f"  H2 bound C = {_g(rep['h2']['bound_C'])} at p = {rep['h2']['argmax_p']}")
        c1 = rep["coro1"]
        lines.append(f"  sufficient convergence test {'holds' if c1['holds'] else 'fails'}"
                     f", margin {_g(c1['margin'])}")
        if c1["note"]:
            lines.append(f"  note: {c1['note']}")
    sols = bundle.solutions
    if not sols and bundle.error is None and bundle.command in ("solve", "basis", "verify-jackson", "change-of-variable", "planar"):
        lines.append("no Floquet solutions found in region")
    for k, sol in enumerate(sols):
        kind = sol.get("type", "floquet")
        if kind == "floquet":
            lines.append(f"solution {k}: mu = {_g(sol['mu'])}, residual = {_g(sol['residual'])}")
            for p, c in enumerate(sol["series"]["coeffs"][:REPORT_COEFFS]):
                entries = c if isinstance(c[0], list) else [c]
                lines.append(f"  s_{p} = (" + ", ".join(_g(e) for e in entries) + ")")
        else:
            lines.append(f"solution {k}: {kind} with {len(sol['columns'])} columns, "
                         f"max column defect = {_g(sol['residual'])}")
            for j, col in enumerate(sol["columns"]):
                lines.append(f"  column {j}: {col['type']}")
    for key in sorted(bundle.diagnostics):
        val = bundle.diagnostics[key]
        if isinstance(val, (int, float, bool, str)) or val is None:
            lines.append(f"{key}: {_g(val) if isinstance(val, float) else val}")
    lines.append(f"exit code: {bundle.exit_code}")
    return "\n".join(lines) + "\n"


def coeffs_csv(bundle: ResultBundle) -> str | None:
    series = [GeneralizedSeries.from_json(s["series"]) for s in bundle.solutions if s.get("type") == "floquet"]
    if not series:
        return None
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["p"]
    for k, s in enumerate(series):
        for i in range(s.shape[0] if s.shape else 1):
            header += [f"sol{k}_re{i}", f"sol{k}_im{i}"]
    w.writerow(header)
    rows = max(s.N for s in series) + 1
    for p in range(rows):
        row = [p]
        for s in series:
            n = s.shape[0] if s.shape else 1
            c = np.atleast_1d(s.coeffs[p]) if p <= s.N else np.full(n, np.nan)
            for v in c:
                row += [repr(float(v.real)), repr(float(v.imag))]
        w.writerow(row)
    return buf.getvalue()


def eval_csv(bundle: ResultBundle) -> str | None:
    evaluators = []
    for s in bundle.solutions:
        if s.get("type") == "floquet":
            series = GeneralizedSeries.from_json(s["series"])
            evaluators.append(lambda z, series=series: np.atleast_1d(evaluate(series, z)))
    zmb = bundle.extras.get("zmb")
    if zmb is not None:
        evaluators.append(lambda z: np.asarray(zmb.evaluate(z)).ravel())
    if not evaluators:
        return None
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    ts = np.linspace(0.02, 1.0, EVAL_POINTS)
    zs = ts * np.exp(1j * EVAL_RAY_ANGLE)
    rows = []
    for z in zs:
        vals = []
        for f in evaluators:
            try:
                vals.append(f(complex(z)))
            except MomentSysError:
                vals.append(None)
        rows.append(vals)
    widths = [len(v) for v in next((r for r in rows if all(x is not None for x in r)), rows[0]) if v is not None]
    header = ["t", "z_re", "z_im"]
    for k, m in enumerate(widths):
        for i in range(m):
            header += [f"y{k}_re{i}", f"y{k}_im{i}"]
    w.writerow(header)
    for t, z, vals in zip(ts, zs, rows):
        row = [repr(float(t)), repr(float(z.real)), repr(float(z.imag))]
        for k, v in enumerate(vals):
            arr = np.full(widths[k] if k < len(widths) else 0, np.nan, dtype=complex) if v is None else v
            for x in arr:
                row += [repr(float(x.real)), repr(float(x.imag))]
        w.writerow(row)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


def write_atomic(path: Path, text: str):
    """Write via a temporary file in the same directory and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def apply_overrides(pf: ProblemFile, args) -> ProblemFile:
    changes = {}
    if getattr(args, "pmax", None) is not None:
        changes["p_max"] = args.pmax
    if getattr(args, "trunc", None) is not None:
        changes["N"] = args.trunc
    if getattr(args, "region", None) is not None:
        changes["region"] = _parse_region(args.region)
    if getattr(args, "tol", None) is not None:
        changes["tolerances"] = {**pf.tolerances, "res": args.tol}
    return replace(pf, **changes) if changes else pf


def run_problem(path: Path, mode: str | None, args) -> tuple[int, ResultBundle]:
    """Run one problem file; never raises for problems inside the file."""
    start = time.perf_counter()
    problem: dict = {}
    bundle = ResultBundle(mode or "run", problem)
    try:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ParseError(f"cannot read {path}: {exc}") from exc
        pf = apply_overrides(ProblemFile.from_toml(text), args)
        cmd = mode or pf.mode
        bundle.command = cmd
        bundle.problem = pf.to_dict()
        if cmd not in COMMANDS:
            raise ParseError(f"unknown mode {cmd!r}")
        code = COMMANDS[cmd](pf, bundle)
    except MomentSysError as exc:
        code = EXIT_ERROR
        bundle.error = {"type": type(exc).__name__, "message": str(exc)}
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        code = EXIT_ERROR
        bundle.error = {"type": type(exc).__name__, "message": str(exc)}
    if code == EXIT_OK and bundle.residuals:
        tol = float(bundle.problem.get("problem", {}).get("tolerances", {}).get("res", DEFAULT_RES_TOL))
        bad = [k for k, r in enumerate(bundle.residuals) if r is None or r > tol]
        if bad:
            bundle.diagnostics["residual_above_tolerance"] = bad
            code = EXIT_HYPOTHESIS
    bundle.exit_code = code
    if getattr(args, "timing", False):
        bundle.timing = {"seconds": time.perf_counter() - start}
    return code, bundle


def emit(bundle: ResultBundle, out: Path, args):
    write_atomic(Path(f"{out}.json"), bundle.to_json())
    if getattr(args, "csv", False):
        c = coeffs_csv(bundle)
        if c is not None:
            write_atomic(Path(f"{out}.coeffs.csv"), c)
        e = eval_csv(bundle)
        if e is not None:
            write_atomic(Path(f"{out}.eval.csv"), e)


def _batch_worker(item):
    path, out, args = item
    code, bundle = run_problem(Path(path), None, args)
    emit(bundle, out, args)
    return str(path), code


def run_batch(args) -> int:
    src = Path(args.file)
    if not src.is_dir():
        print(f"error: {src} is not a directory", file=sys.stderr)
        return EXIT_ERROR
    files = sorted(src.glob("*.toml"))
    out_dir = Path(args.out) if args.out else Path.cwd()
    ns = argparse.Namespace(**{k: v for k, v in vars(args).items() if k not in ("func",)})
    items = [(str(f), out_dir / f.stem, ns) for f in files]
    if args.workers == 1 or len(items) <= 1:
        results = [_batch_worker(it) for it in items]
    else:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_batch_worker, items))
    worst = EXIT_OK
    for path, code in results:
        if not args.quiet:
            print(f"{path}: exit {code}")
        worst = max(worst, code)
    return worst


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="momentsys", description="Floquet solutions of moment differential systems.")
    parser.add_argument("command", choices=sorted(list(COMMAND_MODE) + ["run", "batch"]))
    parser.add_argument("file", help="problem file (TOML), or a directory for batch")
    parser.add_argument("--out", help="output path prefix (directory for batch)")
    parser.add_argument("--pmax", type=int, help="scan length for the hypothesis checks")
    parser.add_argument("--trunc", type=int, help="truncation order N")
    parser.add_argument("--tol", type=float, help="residual tolerance")
    parser.add_argument("--region", help="exponent search rectangle re0,re1,im0,im1")
    parser.add_argument("--csv", action="store_true", help="also write .coeffs.csv and .eval.csv")
    parser.add_argument("--quiet", action="store_true", help="no text report on stdout")
    parser.add_argument("--timing", action="store_true", help="record wall time in the JSON")
    parser.add_argument("--workers", type=int, default=os.cpu_count() or 1, help="batch worker processes")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "batch":
        return run_batch(args)
    mode = None if args.command == "run" else COMMAND_MODE[args.command]
    code, bundle = run_problem(Path(args.file), mode, args)
    out = Path(args.out) if args.out else Path(Path(args.file).stem)
    emit(bundle, out, args)
    if not args.quiet:
        sys.stdout.write(format_report(bundle))
    return code


if __name__ == "__main__":
    sys.exit(main())
