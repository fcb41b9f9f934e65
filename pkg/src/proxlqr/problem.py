"""Problem data model, proximal shift and KKT residual evaluation.

The problem solved throughout this package is the equality-constrained
discrete-time LQ problem

    minimize    sum_t  1/2 [x_t; u_t]' [Q_t S_t; S_t' R_t] [x_t; u_t]
                       + q_t' x_t + r_t' u_t            (t = 0..N-1)
                + 1/2 x_N' Q_N x_N + q_N' x_N
    subject to  A_t x_t + B_t u_t + E_t x_{t+1} + f_t = 0
                C_t x_t + D_t u_t + h_t = 0
                C_N x_N + h_N = 0
                and an initial condition (fixed x0, an affine constraint
                G0 x0 + g0 = 0, or a cyclic constraint x_N = x_0),

optionally with a dual proximal regularization of parameter mu around
multiplier estimates (lam_e, nu_e).
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch

_SYM_RTOL = 1e-12


def _as_matrix(value, rows, cols, name, stage=None):
    m = np.asarray(value, dtype=float)
    if m.shape != (rows, cols):
        where = "" if stage is None else f" at stage {stage}"
        raise DimensionMismatch(
            f"{name}{where} has shape {m.shape}, expected {(rows, cols)}",
            stage=stage,
            field=name,
        )
    return m


def _as_vector(value, n, name, stage=None):
    v = np.asarray(value, dtype=float)
    if v.shape != (n,):
        where = "" if stage is None else f" at stage {stage}"
        raise DimensionMismatch(
            f"{name}{where} has shape {v.shape}, expected ({n},)",
            stage=stage,
            field=name,
        )
    return v


def _symmetrized(m: np.ndarray, name: str, stage=None) -> np.ndarray:
    scale = max(1.0, np.abs(m).max()) if m.size else 1.0
    skew = np.abs(m - m.T).max() if m.size else 0.0
    if skew > _SYM_RTOL * scale:
        where = "" if stage is None else f" at stage {stage}"
        warnings.warn(
            f"{name}{where} is asymmetric (relative skew {skew / scale:.2e}); "
            "symmetrizing as (M + M')/2",
            stacklevel=3,
        )
    return 0.5 * (m + m.T)


@dataclass
class StageData:
    """Cost, dynamics and constraint data of one stage.

    The constraint block (C, D, h) may be absent (nc = 0); pass None or
    zero-row arrays.  Q and R are symmetrized on construction.
    """

    Q: np.ndarray
    S: np.ndarray
    R: np.ndarray
    q: np.ndarray
    r: np.ndarray
    A: np.ndarray
    B: np.ndarray
    E: np.ndarray
    f: np.ndarray
    C: np.ndarray | None = None
    D: np.ndarray | None = None
    h: np.ndarray | None = None

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float)
        nx = Q.shape[0]
        R = np.asarray(self.R, dtype=float)
        nu = R.shape[0]
        self.Q = _symmetrized(_as_matrix(Q, nx, nx, "Q"), "Q")
        self.R = _symmetrized(_as_matrix(R, nu, nu, "R"), "R")
        self.S = _as_matrix(self.S, nx, nu, "S")
        self.q = _as_vector(self.q, nx, "q")
        self.r = _as_vector(self.r, nu, "r")
        self.A = _as_matrix(self.A, nx, nx, "A")
        self.B = _as_matrix(self.B, nx, nu, "B")
        self.E = _as_matrix(self.E, nx, nx, "E")
        self.f = _as_vector(self.f, nx, "f")
        if self.C is None:
            self.C = np.zeros((0, nx))
            self.D = np.zeros((0, nu))
            self.h = np.zeros(0)
        else:
            self.C = np.asarray(self.C, dtype=float).reshape(-1, nx)
            nc = self.C.shape[0]
            self.D = _as_matrix(
                self.D if self.D is not None else np.zeros((nc, nu)), nc, nu, "D"
            )
            self.h = _as_vector(
                self.h if self.h is not None else np.zeros(nc), nc, "h"
            )

    @property
    def nx(self) -> int:
        return self.Q.shape[0]

    @property
    def nu(self) -> int:
        return self.R.shape[0]

    @property
    def nc(self) -> int:
        return self.C.shape[0]


@dataclass
class TerminalData:
    """Terminal cost (Q, q) and optional terminal constraint (C, h)."""

    Q: np.ndarray
    q: np.ndarray
    C: np.ndarray | None = None
    h: np.ndarray | None = None

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float)
        nx = Q.shape[0]
        self.Q = _symmetrized(_as_matrix(Q, nx, nx, "terminal Q"), "terminal Q")
        self.q = _as_vector(self.q, nx, "terminal q")
        if self.C is None:
            self.C = np.zeros((0, nx))
            self.h = np.zeros(0)
        else:
            self.C = np.asarray(self.C, dtype=float).reshape(-1, nx)
            self.h = _as_vector(
                self.h if self.h is not None else np.zeros(self.C.shape[0]),
                self.C.shape[0],
                "terminal h",
            )

    @property
    def nx(self) -> int:
        return self.Q.shape[0]

    @property
    def nc(self) -> int:
        return self.C.shape[0]


class InitMode(enum.Enum):
    FIXED = "fixed"
    CONSTRAINED = "constrained"
    CYCLIC = "cyclic"


@dataclass
class InitialCondition:
    """Initial condition: fixed x0, affine constraint G0 x0 + g0 = 0, or cyclic."""

    mode: InitMode
    x0: np.ndarray | None = None
    G: np.ndarray | None = None
    g: np.ndarray | None = None

    @classmethod
    def fixed(cls, x0) -> "InitialCondition":
        return cls(InitMode.FIXED, x0=np.asarray(x0, dtype=float))

    @classmethod
    def constrained(cls, G, g) -> "InitialCondition":
        G = np.asarray(G, dtype=float)
        return cls(InitMode.CONSTRAINED, G=G, g=_as_vector(g, G.shape[0], "g0"))

    @classmethod
    def cyclic(cls) -> "InitialCondition":
        return cls(InitMode.CYCLIC)

    @property
    def ng(self) -> int:
        return 0 if self.G is None else self.G.shape[0]


@dataclass
class LqProblem:
    """Full-horizon problem: N stages, terminal data and an initial condition."""

    nx: int
    nu: int
    N: int
    stages: list[StageData]
    terminal: TerminalData
    init: InitialCondition

    def __post_init__(self):
        if self.N < 1:
            raise DimensionMismatch(f"horizon N must be >= 1, got {self.N}")
        if len(self.stages) != self.N:
            raise DimensionMismatch(
                f"expected {self.N} stages, got {len(self.stages)}"
            )
        for t, st in enumerate(self.stages):
            if st.nx != self.nx or st.nu != self.nu:
                raise DimensionMismatch(
                    f"stage {t} has dims (nx={st.nx}, nu={st.nu}), "
                    f"expected ({self.nx}, {self.nu})",
                    stage=t,
                )
        if self.terminal.nx != self.nx:
            raise DimensionMismatch(
                f"terminal block has nx={self.terminal.nx}, expected {self.nx}"
            )
        init = self.init
        if init.mode == InitMode.FIXED:
            if init.x0 is None or init.x0.shape != (self.nx,):
                raise DimensionMismatch("fixed initial state has wrong shape",
                                        field="x0")
        elif init.mode == InitMode.CONSTRAINED:
            if init.G is None or init.G.shape[1] != self.nx:
                raise DimensionMismatch("initial constraint G0 has wrong shape",
                                        field="G0")

    def nc(self, t: int) -> int:
        """Constraint row count of stage t, or of the terminal block for t = N."""
        return self.terminal.nc if t == self.N else self.stages[t].nc


def _lam_dim(problem: LqProblem, t: int) -> int:
    # lam[0] multiplies the ng-row initial constraint in constrained mode
    if t == 0 and problem.init.mode == InitMode.CONSTRAINED:
        return problem.init.ng
    return problem.nx


@dataclass
class ProximalState:
    """Proximal parameter mu and previous multiplier estimates.

    lam_e holds N+1 co-state estimates (index 0 is only used by the
    constrained initial mode); nu_e holds one estimate per stage plus the
    terminal one at index N.
    """

    mu: float
    lam_e: list[np.ndarray]
    nu_e: list[np.ndarray]

    def __post_init__(self):
        if self.mu <= 0.0:
            raise DimensionMismatch(f"mu must be positive, got {self.mu}", field="mu")
        self.lam_e = [np.asarray(v, dtype=float) for v in self.lam_e]
        self.nu_e = [np.asarray(v, dtype=float) for v in self.nu_e]

    @classmethod
    def zero(cls, problem: LqProblem, mu: float) -> "ProximalState":
        lam_e = [np.zeros(_lam_dim(problem, t)) for t in range(problem.N + 1)]
        nu_e = [np.zeros(problem.nc(t)) for t in range(problem.N + 1)]
        return cls(mu, lam_e, nu_e)

    def check(self, problem: LqProblem) -> None:
        if len(self.lam_e) != problem.N + 1:
            raise DimensionMismatch(
                f"lam_e has {len(self.lam_e)} entries, expected {problem.N + 1}",
                field="lam_e",
            )
        if len(self.nu_e) != problem.N + 1:
            raise DimensionMismatch(
                f"nu_e has {len(self.nu_e)} entries, expected {problem.N + 1}",
                field="nu_e",
            )
        for t, lam in enumerate(self.lam_e):
            if lam.shape != (_lam_dim(problem, t),):
                raise DimensionMismatch(
                    f"lam_e[{t}] has shape {lam.shape}, "
                    f"expected ({_lam_dim(problem, t)},)",
                    stage=t,
                    field="lam_e",
                )
        for t, nu in enumerate(self.nu_e):
            if nu.shape != (problem.nc(t),):
                raise DimensionMismatch(
                    f"nu_e[{t}] has shape {nu.shape}, expected ({problem.nc(t)},)",
                    stage=t,
                    field="nu_e",
                )


@dataclass
class Solution:
    """Primal trajectory (x, u) and dual trajectory (lam, nu).

    lam[0] is meaningful only for constrained initial conditions and is
    zero-filled otherwise; theta is the cyclic-constraint multiplier.
    """

    x: list[np.ndarray]
    u: list[np.ndarray]
    lam: list[np.ndarray]
    nu: list[np.ndarray]
    theta: np.ndarray | None = None

    def check(self, problem: LqProblem) -> None:
        if len(self.x) != problem.N + 1 or len(self.u) != problem.N:
            raise DimensionMismatch("trajectory length mismatch", field="x/u")
        if len(self.lam) != problem.N + 1 or len(self.nu) != problem.N + 1:
            raise DimensionMismatch("multiplier length mismatch", field="lam/nu")
        for t in range(problem.N + 1):
            if self.x[t].shape != (problem.nx,):
                raise DimensionMismatch(f"x[{t}] shape", stage=t, field="x")
            if self.lam[t].shape != (_lam_dim(problem, t),):
                raise DimensionMismatch(f"lam[{t}] shape", stage=t, field="lam")
            if self.nu[t].shape != (problem.nc(t),):
                raise DimensionMismatch(f"nu[{t}] shape", stage=t, field="nu")
        for t in range(problem.N):
            if self.u[t].shape != (problem.nu,):
                raise DimensionMismatch(f"u[{t}] shape", stage=t, field="u")
        if problem.init.mode == InitMode.CYCLIC:
            if self.theta is None or self.theta.shape != (problem.nx,):
                raise DimensionMismatch("cyclic solution requires theta",
                                        field="theta")


@dataclass
class ShiftedRhs:
    """Proximally shifted right-hand sides: g0 + mu*lam_e[0], f_t + mu*lam_e[t+1],
    h_t + mu*nu_e[t]."""

    g0: np.ndarray | None
    f: list[np.ndarray]
    h: list[np.ndarray]


def shift_rhs(problem: LqProblem, prox: ProximalState | None) -> ShiftedRhs:
    """Shifted constraint right-hand sides for the regularized problem.

    With prox=None the raw (g0, f, h) are returned unchanged.
    """
    if prox is None:
        g0 = None if problem.init.g is None else problem.init.g.copy()
        return ShiftedRhs(
            g0=g0,
            f=[st.f.copy() for st in problem.stages],
            h=[st.h.copy() for st in problem.stages] + [problem.terminal.h.copy()],
        )
    prox.check(problem)
    mu = prox.mu
    g0 = None
    if problem.init.mode == InitMode.CONSTRAINED:
        g0 = problem.init.g + mu * prox.lam_e[0]
    f = [problem.stages[t].f + mu * prox.lam_e[t + 1] for t in range(problem.N)]
    h = [problem.stages[t].h + mu * prox.nu_e[t] for t in range(problem.N)]
    h.append(problem.terminal.h + mu * prox.nu_e[problem.N])
    return ShiftedRhs(g0=g0, f=f, h=h)


def _inf(vectors) -> float:
    worst = 0.0
    for v in vectors:
        if v.size:
            worst = max(worst, float(np.abs(v).max()))
    return worst


def kkt_residual(
    problem: LqProblem,
    prox: ProximalState | None,
    sol: Solution,
) -> tuple[float, float]:
    """Infinity norms of the stationarity and constraint residual blocks.

    With prox=None the unregularized optimality conditions are evaluated;
    with a ProximalState the multiplier blocks carry the shifted right-hand
    sides and the -mu*multiplier terms.  For a fixed initial state the
    x0-stationarity row and the initial-constraint row do not exist and are
    skipped; the cyclic constraint row is never regularized.
    """
    sol.check(problem)
    N = problem.N
    mode = problem.init.mode
    shifted = shift_rhs(problem, prox)
    mu = 0.0 if prox is None else prox.mu

    x, u, lam, nu = sol.x, sol.u, sol.lam, sol.nu
    stationarity: list[np.ndarray] = []
    feasibility: list[np.ndarray] = []

    for t in range(N):
        st = problem.stages[t]
        # gradient w.r.t. x_t; the incoming co-state term depends on t and mode
        gx = st.Q @ x[t] + st.S @ u[t] + st.A.T @ lam[t + 1] + st.q
        if st.nc:
            gx += st.C.T @ nu[t]
        if t > 0:
            stationarity.append(gx + problem.stages[t - 1].E.T @ lam[t])
        elif mode == InitMode.CONSTRAINED:
            stationarity.append(gx + problem.init.G.T @ lam[0])
        elif mode == InitMode.CYCLIC:
            stationarity.append(gx - sol.theta)
        # gradient w.r.t. u_t
        gu = st.S.T @ x[t] + st.R @ u[t] + st.B.T @ lam[t + 1] + st.r
        if st.nc:
            gu += st.D.T @ nu[t]
        stationarity.append(gu)
        # dynamics and stage constraints
        feasibility.append(
            st.A @ x[t] + st.B @ u[t] + st.E @ x[t + 1] + shifted.f[t]
            - mu * lam[t + 1]
        )
        if st.nc:
            feasibility.append(st.C @ x[t] + st.D @ u[t] + shifted.h[t] - mu * nu[t])

    term = problem.terminal
    gN = problem.stages[N - 1].E.T @ lam[N] + term.Q @ x[N] + term.q
    if term.nc:
        gN += term.C.T @ nu[N]
        feasibility.append(term.C @ x[N] + shifted.h[N] - mu * nu[N])
    if mode == InitMode.CYCLIC:
        gN += sol.theta
    stationarity.append(gN)

    if mode == InitMode.CONSTRAINED:
        feasibility.append(problem.init.G @ x[0] + shifted.g0 - mu * lam[0])
    elif mode == InitMode.CYCLIC:
        feasibility.append(x[N] - x[0])

    return _inf(stationarity), _inf(feasibility)
