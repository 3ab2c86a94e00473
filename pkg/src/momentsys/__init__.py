"""Floquet solutions of moment differential systems ``z d_m y = (zA + B) y``."""

from .errors import *  # noqa: F401,F403
from .hfunctions import QHFunction, classical_H, q_H_functions, solve_additive_telescoping
from .matrices import JordanDecomposition, eigen, jordan, one_norm
from .moments import (
    MomentSequence,
    SequenceKind,
    check_strongly_regular,
    eval_m,
    parse_sequence,
    ratio,
    solve_ratio_equation,
)
from .series import GeneralizedSeries, LogPowerSolution, cauchy_product, evaluate, moment_derivative
from .solver import (
    FloquetSolution,
    ProblemSpec,
    check_coro1,
    check_h1,
    check_h1_shifted,
    check_h2,
    floquet_basis,
    floquet_coefficients,
    fractional_reparam,
    hypothesis_report,
    residual,
    verify_jackson,
)
from .structure import (
    SymbolicSolutionMatrix,
    change_of_variable,
    column_defect,
    jordan_reduce_system,
    planar_diagonal,
    planar_jordan,
    zmb_diagonalizable,
    zmb_general,
)

__version__ = "0.1.0"
