"""Exception types raised by the solver stack."""

from __future__ import annotations


class SolverError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(SolverError):
    """Problem or solution data with inconsistent shapes.

    Carries the stage index (or None for problem-level / terminal data)
    and the offending field name.
    """

    def __init__(self, message: str, stage=None, field: str | None = None):
        super().__init__(message)
        self.stage = stage
        self.field = field


class SingularKkt(SolverError):
    """The assembled dense KKT matrix is rank deficient."""


class MuZeroWithConstraints(SolverError):
    """mu = 0 requested while constraint rows are present."""


class SingularStageKkt(SolverError):
    """A stage KKT factorization failed."""

    def __init__(self, message: str, stage=None):
        super().__init__(message)
        self.stage = stage


class SingularE(SingularStageKkt):
    """The next-state coefficient matrix E_t is not invertible."""


class SingularUpsilon(SingularStageKkt):
    """I + mu * Pcheck is singular (not expected for mu >= 0)."""


class SingularInitKkt(SolverError):
    """The initial-stage saddle system is singular."""


class SingularCyclicKkt(SolverError):
    """The cyclic saddle system in (x0, theta) is singular."""


class IndefiniteRhat(SolverError):
    """Rhat is not positive definite in the classic Riccati recursion."""

    def __init__(self, message: str, stage=None):
        super().__init__(message)
        self.stage = stage


class SingularDiagonalBlock(SolverError):
    """A Schur-complemented diagonal block of a block-tridiagonal matrix is singular."""

    def __init__(self, message: str, block=None):
        super().__init__(message)
        self.block = block


class InvalidLegCount(SolverError):
    """Requested horizon partition is not realizable."""


class MaxItersExceeded(SolverError):
    """The outer proximal loop did not converge.

    Attributes
    ----------
    residuals : tuple (stationarity, feasibility) of the last iterate.
    history : list of per-iteration residual tuples.
    solution : the last inner solution (may be useful for diagnostics).
    """

    def __init__(self, message: str, residuals=None, history=None, solution=None):
        super().__init__(message)
        self.residuals = residuals
        self.history = history or []
        self.solution = solution


class ProblemFileError(SolverError):
    """A problem or solution file failed to parse; names the offending key."""

    def __init__(self, message: str, location: str | None = None):
        super().__init__(message if location is None else f"{location}: {message}")
        self.location = location
