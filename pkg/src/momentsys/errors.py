"""Exception hierarchy shared by all modules."""


class MomentSysError(Exception):
    """Base class for every error raised by :mod:`momentsys`."""


class DomainError(MomentSysError, ValueError):
    """An argument lies outside the domain where an operation is defined."""


class PoleError(DomainError):
    """Evaluation at (or numerically on top of) a pole."""


class PoleProximity(PoleError):
    """Evaluation point too close to a pole of a meromorphic evaluator."""


class BranchCutError(DomainError):
    """Evaluation of a multivalued expression on the principal branch cut."""


class NumericOverflow(MomentSysError, OverflowError):
    """A result is not representable in double precision."""


class DivisionByZero(MomentSysError, ZeroDivisionError):
    pass


class ConvergenceError(MomentSysError):
    """An iterative procedure failed to converge."""


class TelescopeDivergence(ConvergenceError):
    pass


class DimensionMismatch(MomentSysError, ValueError):
    pass


class SingularMatrix(MomentSysError):
    pass


class IllConditioned(MomentSysError):
    pass


class HintRejected(MomentSysError):
    pass


class EigvecResidual(MomentSysError):
    """The supplied leading vector is not an eigenvector for the required eigenvalue."""


class GrowthOverflow(MomentSysError):
    """Coefficient norms exceeded the growth guard; the series probably diverges."""


class NoExponentFound(MomentSysError):
    pass


class Resonant(MomentSysError):
    """A non-resonance condition failed."""


class NonCommuting(MomentSysError):
    pass


class H3Unavailable(MomentSysError):
    """No construction of the auxiliary H-functions is known for the sequence."""


class ParseError(MomentSysError, ValueError):
    pass
