"""Parametric generalized Riccati recursion and the cyclic-constraint solve.

The Lagrangian carries an extra affine term theta' (Phi_t' x + Psi_t' u +
gamma_t) + 1/2 theta' Gamma_t theta per stage.  The value function is then
jointly quadratic in (x0, theta):

    E_mu(x0, theta) = 1/2 [x0; theta]' [P0 Lam0; Lam0' Sig0] [x0; theta]
                      + p0' x0 + sig0' theta   (+ const)

and the recursion propagates (P, p, Lambda, Sigma, sigma) backward while the
stage kernels solve the extra parameter columns against the same factorization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularCyclicKkt, SolverError
from .linalg import SingularMatrix, SymmetricFactor, symmetrize
from .problem import (
    InitMode,
    InitialCondition,
    LqProblem,
    ProximalState,
    ShiftedRhs,
    Solution,
    shift_rhs,
)
from .riccati import (
    CostToGo,
    ParamGains,
    StageGains,
    get_kernel,
    solve_initial,
    terminal_cost_to_go,
)


@dataclass
class ParametricStage:
    """Parameter coupling of one stage: theta'(Phi'x + Psi'u + gamma) + theta'Gamma theta/2.

    For the terminal stage Psi is ignored (there is no terminal control).
    """

    Phi: np.ndarray
    Psi: np.ndarray
    Gamma: np.ndarray
    gamma: np.ndarray

    @classmethod
    def zero(cls, nx: int, nu: int, ntheta: int) -> "ParametricStage":
        return cls(
            Phi=np.zeros((nx, ntheta)),
            Psi=np.zeros((nu, ntheta)),
            Gamma=np.zeros((ntheta, ntheta)),
            gamma=np.zeros(ntheta),
        )

    @property
    def ntheta(self) -> int:
        return self.Phi.shape[1]


@dataclass
class ValueParams:
    """Per-stage parametric value data (P, p, Lambda, Sigma, sigma)."""

    P: np.ndarray
    p: np.ndarray
    Lambda: np.ndarray
    Sigma: np.ndarray
    sigma: np.ndarray

    @property
    def ctg(self) -> CostToGo:
        return CostToGo(P=self.P, p=self.p)


def zero_parametric_data(problem: LqProblem, ntheta: int) -> list[ParametricStage]:
    """One all-zero ParametricStage per stage plus terminal; callers fill in
    only the coupled stages."""
    return [
        ParametricStage.zero(problem.nx, problem.nu, ntheta)
        for _ in range(problem.N + 1)
    ]


def parametric_backward(
    problem: LqProblem,
    prox: ProximalState,
    params: list[ParametricStage],
    kernel: str = "blocksparse",
) -> tuple[list[StageGains], list[ParamGains], list[ValueParams]]:
    """Backward recursion with parameter columns.

    params holds N+1 entries (index N is the terminal coupling, whose Psi is
    unused).  Returns per-stage gains, parameter gains and the full list of
    value parameters values[0..N].
    """
    N = problem.N
    if len(params) != N + 1:
        raise SolverError(f"expected {N + 1} parametric stages, got {len(params)}")
    ntheta = params[0].ntheta
    kern = get_kernel(kernel)
    shifted = shift_rhs(problem, prox)

    term = params[N]
    ctg_N = terminal_cost_to_go(problem.terminal, shifted.h[N], prox.mu)
    values: list[ValueParams | None] = [None] * (N + 1)
    values[N] = ValueParams(
        P=ctg_N.P,
        p=ctg_N.p,
        Lambda=term.Phi.copy(),
        Sigma=symmetrize(term.Gamma),
        sigma=term.gamma.copy(),
    )
    gains: list[StageGains | None] = [None] * N
    pgains: list[ParamGains | None] = [None] * N
    for t in range(N - 1, -1, -1):
        nxt = values[t + 1]
        par = params[t]
        g, ctg, pg = kern(
            problem.stages[t],
            shifted.f[t],
            shifted.h[t],
            nxt.ctg,
            prox.mu,
            Psi=par.Psi,
            Lam_next=nxt.Lambda,
            t=t,
        )
        gains[t] = g
        pgains[t] = pg
        values[t] = ValueParams(
            P=ctg.P,
            p=ctg.p,
            Lambda=par.Phi + g.K.T @ par.Psi + g.M.T @ nxt.Lambda,
            Sigma=symmetrize(
                par.Gamma + nxt.Sigma + par.Psi.T @ pg.Ktheta + nxt.Lambda.T @ pg.Mtheta
            ),
            sigma=nxt.sigma + par.gamma + par.Psi.T @ g.k + nxt.Lambda.T @ g.a,
        )
    return gains, pgains, values


def parametric_forward(
    problem: LqProblem,
    gains: list[StageGains],
    pgains: list[ParamGains],
    x0: np.ndarray,
    theta: np.ndarray,
    shifted: ShiftedRhs,
    mu: float,
    lam0: np.ndarray | None = None,
) -> Solution:
    """Forward pass with the theta-augmented feedback."""
    N = problem.N
    x = [np.asarray(x0, dtype=float)]
    lam = [np.zeros(problem.nx) if lam0 is None else np.asarray(lam0, dtype=float)]
    u, nu = [], []
    for t in range(N):
        g, pg = gains[t], pgains[t]
        xt = x[t]
        u.append(g.k + g.K @ xt + pg.Ktheta @ theta)
        nu.append(g.zeta + g.Z @ xt + pg.Ztheta @ theta)
        lam.append(g.omega + g.Omega @ xt + pg.OmegaTheta @ theta)
        x.append(g.a + g.M @ xt + pg.Mtheta @ theta)
    term = problem.terminal
    if term.nc:
        nu.append((shifted.h[N] + term.C @ x[N]) / mu)
    else:
        nu.append(np.zeros(0))
    return Solution(x=x, u=u, lam=lam, nu=nu, theta=np.asarray(theta, dtype=float))


@dataclass
class Sensitivities:
    """Stacked derivative matrices of the trajectory w.r.t. theta."""

    x: list[np.ndarray]
    u: list[np.ndarray]
    nu: list[np.ndarray]
    lam: list[np.ndarray]


def sensitivities(
    problem: LqProblem,
    gains: list[StageGains],
    pgains: list[ParamGains],
    mu: float,
    dx0: np.ndarray | None = None,
) -> Sensitivities:
    """Forward recursion for d(trajectory)/d(theta).

    dx0 is the sensitivity of the initial state (zero for a fixed x0).
    """
    N, nx = problem.N, problem.nx
    ntheta = pgains[0].Ktheta.shape[1]
    dx = [np.zeros((nx, ntheta)) if dx0 is None else np.asarray(dx0, dtype=float)]
    dlam = [np.zeros((nx, ntheta))]
    du, dnu = [], []
    for t in range(N):
        g, pg = gains[t], pgains[t]
        du.append(g.K @ dx[t] + pg.Ktheta)
        dnu.append(g.Z @ dx[t] + pg.Ztheta)
        dlam.append(g.Omega @ dx[t] + pg.OmegaTheta)
        dx.append(g.M @ dx[t] + pg.Mtheta)
    term = problem.terminal
    if term.nc:
        dnu.append(term.C @ dx[N] / mu)
    else:
        dnu.append(np.zeros((0, ntheta)))
    return Sensitivities(x=dx, u=du, nu=dnu, lam=dlam)


def solve_initial_parametric(
    value0: ValueParams,
    init: InitialCondition,
    gbar0: np.ndarray | None,
    mu: float,
    theta: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Initial solve at a fixed parameter value: the linear cost picks up
    Lambda0 @ theta."""
    return solve_initial(
        value0.P, value0.p + value0.Lambda @ theta, init, gbar0, mu
    )


def cyclic_parametric_data(problem: LqProblem) -> list[ParametricStage]:
    """Coupling of the cyclic constraint x_N - x_0 = 0: theta' x_N at the
    terminal stage (Phi_N = I), nothing elsewhere."""
    params = zero_parametric_data(problem, problem.nx)
    params[problem.N].Phi = np.eye(problem.nx)
    return params


def solve_cyclic(
    problem: LqProblem,
    prox: ProximalState,
    kernel: str = "blocksparse",
) -> Solution:
    """Solve a problem whose initial condition is the cyclic constraint
    x_N = x_0.

    The constraint multiplier theta parameterizes the recursion; (x0, theta)
    then satisfy the saddle system

        [P0, Lam0 - I; (Lam0 - I)', Sig0] [x0; theta] = -[p0; sig0]

    which is solved unregularized in theta.
    """
    if problem.init.mode != InitMode.CYCLIC:
        raise SolverError("solve_cyclic requires a cyclic initial condition")
    nx = problem.nx
    params = cyclic_parametric_data(problem)
    gains, pgains, values = parametric_backward(problem, prox, params, kernel)
    v0 = values[0]
    kkt = np.zeros((2 * nx, 2 * nx))
    kkt[:nx, :nx] = v0.P
    kkt[:nx, nx:] = v0.Lambda - np.eye(nx)
    kkt[nx:, :nx] = kkt[:nx, nx:].T
    kkt[nx:, nx:] = v0.Sigma
    try:
        z = SymmetricFactor(kkt).solve(-np.concatenate([v0.p, v0.sigma]))
    except SingularMatrix as exc:
        raise SingularCyclicKkt(f"cyclic saddle system singular: {exc}") from exc
    x0, theta = z[:nx], z[nx:]
    shifted = shift_rhs(problem, prox)
    return parametric_forward(problem, gains, pgains, x0, theta, shifted, prox.mu)
