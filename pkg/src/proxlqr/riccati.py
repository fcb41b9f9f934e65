"""Serial generalized Riccati recursion for the proximal constrained LQ problem.

Two interchangeable stage kernels solve the per-stage saddle system

    [ R    D'   B'   0  ] [k  K ]     [ r     S']
    [ D   -muI  0    0  ] [z  Z ]  = -[ hbar  C ]
    [ B    0   -muI  E  ] [w  W ]     [ fbar  A ]
    [ 0    0    E'  P+ ] [a  M ]     [ p+    0 ]

either by one dense symmetric-indefinite factorization, or by the
block-sparse elimination that assumes E invertible (substituting
xcheck = -E x_next, then reducing to a (nu+nc) feedback system).
Both accept extra parameter columns [Psi; 0; 0; Lam_next] used by the
parametric recursion.

The classic (unconstrained, unregularized, explicit-dynamics) Riccati
recursion is provided as a reference baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import (
    IndefiniteRhat,
    MuZeroWithConstraints,
    SingularE,
    SingularInitKkt,
    SingularStageKkt,
    SingularUpsilon,
    SolverError,
)
from .linalg import LuFactor, SingularMatrix, SymmetricFactor, symmetrize
from .problem import (
    InitMode,
    InitialCondition,
    LqProblem,
    ProximalState,
    ShiftedRhs,
    Solution,
    StageData,
    TerminalData,
    shift_rhs,
)


@dataclass
class CostToGo:
    """Quadratic cost-to-go x -> 1/2 x'Px + p'x (up to a constant)."""

    P: np.ndarray
    p: np.ndarray


@dataclass
class StageGains:
    """Affine primal-dual recovery maps of one stage.

    u = k + K x,  nu = zeta + Z x,  lam_next = omega + Omega x,
    x_next = a + M x.
    """

    k: np.ndarray
    K: np.ndarray
    zeta: np.ndarray
    Z: np.ndarray
    omega: np.ndarray
    Omega: np.ndarray
    a: np.ndarray
    M: np.ndarray


@dataclass
class ParamGains:
    """Extra parameter columns of the recovery maps: u += Ktheta @ theta, etc."""

    Ktheta: np.ndarray
    Ztheta: np.ndarray
    OmegaTheta: np.ndarray
    Mtheta: np.ndarray


def terminal_cost_to_go(
    terminal: TerminalData, hbar_N: np.ndarray, mu: float
) -> CostToGo:
    """Terminal cost-to-go P_N = Q_N + C_N'C_N/mu, p_N = q_N + C_N'hbar_N/mu."""
    if terminal.nc == 0:
        return CostToGo(P=terminal.Q.copy(), p=terminal.q.copy())
    if mu == 0.0:
        raise MuZeroWithConstraints(
            "terminal constraints require mu > 0 (dual regularization)"
        )
    P = terminal.Q + (terminal.C.T @ terminal.C) / mu
    p = terminal.q + terminal.C.T @ hbar_N / mu
    return CostToGo(P=symmetrize(P), p=p)


def _split_gains(
    cols: np.ndarray, nu: int, nc: int, nx: int, ntheta: int
) -> tuple[StageGains, ParamGains | None]:
    """Slice the solved multi-column gain matrix of the dense stage system."""
    iu = slice(0, nu)
    ic = slice(nu, nu + nc)
    il = slice(nu + nc, nu + nc + nx)
    ix = slice(nu + nc + nx, nu + nc + 2 * nx)
    gains = StageGains(
        k=cols[iu, 0],
        K=cols[iu, 1 : 1 + nx],
        zeta=cols[ic, 0],
        Z=cols[ic, 1 : 1 + nx],
        omega=cols[il, 0],
        Omega=cols[il, 1 : 1 + nx],
        a=cols[ix, 0],
        M=cols[ix, 1 : 1 + nx],
    )
    if ntheta == 0:
        return gains, None
    it = slice(1 + nx, 1 + nx + ntheta)
    pgains = ParamGains(
        Ktheta=cols[iu, it],
        Ztheta=cols[ic, it],
        OmegaTheta=cols[il, it],
        Mtheta=cols[ix, it],
    )
    return gains, pgains


def stage_kernel_dense(
    stage: StageData,
    fbar: np.ndarray,
    hbar: np.ndarray,
    next_ctg: CostToGo,
    mu: float,
    Psi: np.ndarray | None = None,
    Lam_next: np.ndarray | None = None,
    t: int | None = None,
) -> tuple[StageGains, CostToGo, ParamGains | None]:
    """One backward step through a dense factorization of the stage system.

    Right-hand columns are the feedforward -[r, hbar, fbar, p+], the feedback
    -[S', C, A, 0] and, when Psi/Lam_next are given, the parameter columns
    -[Psi, 0, 0, Lam_next].
    """
    nx, nu, nc = stage.nx, stage.nu, stage.nc
    ntheta = 0 if Psi is None else Psi.shape[1]
    n = nu + nc + 2 * nx
    kkt = np.zeros((n, n))
    iu = slice(0, nu)
    ic = slice(nu, nu + nc)
    il = slice(nu + nc, nu + nc + nx)
    ix = slice(nu + nc + nx, n)
    kkt[iu, iu] = stage.R
    kkt[iu, ic] = stage.D.T
    kkt[ic, iu] = stage.D
    kkt[ic, ic] = -mu * np.eye(nc)
    kkt[iu, il] = stage.B.T
    kkt[il, iu] = stage.B
    kkt[il, il] = -mu * np.eye(nx)
    kkt[il, ix] = stage.E
    kkt[ix, il] = stage.E.T
    kkt[ix, ix] = next_ctg.P

    rhs = np.zeros((n, 1 + nx + ntheta))
    rhs[iu, 0] = stage.r
    rhs[ic, 0] = hbar
    rhs[il, 0] = fbar
    rhs[ix, 0] = next_ctg.p
    rhs[iu, 1 : 1 + nx] = stage.S.T
    rhs[ic, 1 : 1 + nx] = stage.C
    rhs[il, 1 : 1 + nx] = stage.A
    if ntheta:
        rhs[iu, 1 + nx :] = Psi
        rhs[ix, 1 + nx :] = Lam_next

    try:
        cols = SymmetricFactor(kkt).solve(-rhs)
    except SingularMatrix as exc:
        raise SingularStageKkt(
            f"stage KKT factorization failed{_at(t)}: {exc}", stage=t
        ) from exc
    gains, pgains = _split_gains(cols, nu, nc, nx, ntheta)

    P = stage.Q + stage.S @ gains.K + stage.A.T @ gains.Omega
    p = stage.q + stage.S @ gains.k + stage.A.T @ gains.omega
    if nc:
        P = P + stage.C.T @ gains.Z
        p = p + stage.C.T @ gains.zeta
    return gains, CostToGo(P=symmetrize(P), p=p), pgains


def stage_kernel_blocksparse(
    stage: StageData,
    fbar: np.ndarray,
    hbar: np.ndarray,
    next_ctg: CostToGo,
    mu: float,
    Psi: np.ndarray | None = None,
    Lam_next: np.ndarray | None = None,
    t: int | None = None,
) -> tuple[StageGains, CostToGo, ParamGains | None]:
    """One backward step via the block-sparse elimination (E invertible).

    Same contract as stage_kernel_dense.  Eliminates (lam_next, x_next) with
    the substitution xcheck = -E x_next, forms Upsilon = I + mu*Pcheck and the
    hatted cost blocks, then solves the (nu+nc) feedback system Khat.
    """
    nx, nu, nc = stage.nx, stage.nu, stage.nc
    ntheta = 0 if Psi is None else Psi.shape[1]
    try:
        elu = LuFactor(stage.E)
    except SingularMatrix as exc:
        raise SingularE(f"E is singular{_at(t)}", stage=t) from exc

    # Pcheck = E^-T P+ E^-1, pcheck = -E^-T p+
    W = elu.solve(next_ctg.P, trans=1)
    Pcheck = symmetrize(elu.solve(W.T, trans=1).T)
    pcheck = -elu.solve(next_ctg.p, trans=1)

    upsilon = np.eye(nx) + mu * Pcheck
    try:
        ulu = LuFactor(upsilon)
    except SingularMatrix as exc:
        raise SingularUpsilon(
            f"I + mu*Pcheck is singular{_at(t)}", stage=t
        ) from exc
    # V = Upsilon^-1 Pcheck, v = Upsilon^-1 (pcheck + Pcheck fbar),
    # Wtheta = Upsilon^-1 (-E^-T Lam_next)
    rhs_u = np.empty((nx, nx + 1 + ntheta))
    rhs_u[:, :nx] = Pcheck
    rhs_u[:, nx] = pcheck + Pcheck @ fbar
    if ntheta:
        rhs_u[:, nx + 1 :] = -elu.solve(Lam_next, trans=1)
    sol_u = ulu.solve(rhs_u)
    V = sol_u[:, :nx]
    v = sol_u[:, nx]
    Wtheta = sol_u[:, nx + 1 :] if ntheta else None

    H = np.hstack([stage.A, stage.B])
    G = V @ H
    hat = H.T @ G
    hat[:nx, :nx] += stage.Q
    hat[:nx, nx:] += stage.S
    hat[nx:, :nx] += stage.S.T
    hat[nx:, nx:] += stage.R
    ghat = H.T @ v
    Qhat, Shat, Rhat = hat[:nx, :nx], hat[:nx, nx:], hat[nx:, nx:]
    qhat = ghat[:nx] + stage.q
    rhat = ghat[nx:] + stage.r

    khat = np.zeros((nu + nc, nu + nc))
    khat[:nu, :nu] = Rhat
    if nc:
        khat[:nu, nu:] = stage.D.T
        khat[nu:, :nu] = stage.D
        khat[nu:, nu:] = -mu * np.eye(nc)
    rhs_k = np.zeros((nu + nc, 1 + nx + ntheta))
    rhs_k[:nu, 0] = rhat
    rhs_k[:nu, 1 : 1 + nx] = Shat.T
    if nc:
        rhs_k[nu:, 0] = hbar
        rhs_k[nu:, 1 : 1 + nx] = stage.C
    if ntheta:
        rhs_k[:nu, 1 + nx :] = Psi + stage.B.T @ Wtheta
    try:
        fb = SymmetricFactor(khat).solve(-rhs_k)
    except SingularMatrix as exc:
        raise SingularStageKkt(
            f"feedback system Khat is singular{_at(t)}", stage=t
        ) from exc
    k = fb[:nu, 0]
    K = fb[:nu, 1 : 1 + nx]
    zeta = fb[nu:, 0]
    Z = fb[nu:, 1 : 1 + nx]

    # co-state columns: lam_next = v + Wtheta theta + V (A x + B u)
    abk = np.empty((nx, 1 + nx + ntheta))
    abk[:, 0] = stage.B @ k
    abk[:, 1 : 1 + nx] = stage.A + stage.B @ K
    if ntheta:
        abk[:, 1 + nx :] = stage.B @ fb[:nu, 1 + nx :]
    lam_cols = V @ abk
    lam_cols[:, 0] += v
    if ntheta:
        lam_cols[:, 1 + nx :] += Wtheta
    # xcheck = fbar + A x + B u - mu lam_next, x_next = -E^-1 xcheck
    xch = abk - mu * lam_cols
    xch[:, 0] += fbar
    x_cols = -elu.solve(xch)

    gains = StageGains(
        k=k,
        K=K,
        zeta=zeta,
        Z=Z,
        omega=lam_cols[:, 0],
        Omega=lam_cols[:, 1 : 1 + nx],
        a=x_cols[:, 0],
        M=x_cols[:, 1 : 1 + nx],
    )
    pgains = None
    if ntheta:
        pgains = ParamGains(
            Ktheta=fb[:nu, 1 + nx :],
            Ztheta=fb[nu:, 1 + nx :],
            OmegaTheta=lam_cols[:, 1 + nx :],
            Mtheta=x_cols[:, 1 + nx :],
        )

    P = Qhat + Shat @ K
    p = qhat + Shat @ k
    if nc:
        P = P + stage.C.T @ Z
        p = p + stage.C.T @ zeta
    return gains, CostToGo(P=symmetrize(P), p=p), pgains


_KERNELS = {
    "dense": stage_kernel_dense,
    "blocksparse": stage_kernel_blocksparse,
}


def get_kernel(kernel: str):
    try:
        return _KERNELS[kernel]
    except KeyError:
        raise SolverError(
            f"unknown stage kernel {kernel!r}; expected one of {sorted(_KERNELS)}"
        ) from None


def backward_pass(
    problem: LqProblem,
    prox: ProximalState,
    kernel: str = "blocksparse",
) -> tuple[list[StageGains], list[CostToGo]]:
    """Run the backward recursion; returns gains[0..N-1] and cost-to-go[0..N]."""
    kern = get_kernel(kernel)
    shifted = shift_rhs(problem, prox)
    ctgs: list[CostToGo | None] = [None] * (problem.N + 1)
    gains: list[StageGains | None] = [None] * problem.N
    ctgs[problem.N] = terminal_cost_to_go(
        problem.terminal, shifted.h[problem.N], prox.mu
    )
    for t in range(problem.N - 1, -1, -1):
        g, ctg, _ = kern(
            problem.stages[t], shifted.f[t], shifted.h[t], ctgs[t + 1], prox.mu, t=t
        )
        gains[t] = g
        ctgs[t] = ctg
    return gains, ctgs


def solve_initial(
    P0: np.ndarray,
    p0: np.ndarray,
    init: InitialCondition,
    gbar0: np.ndarray | None,
    mu: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Initial state and co-state: fixed pass-through or the saddle system

    [P0 G0'; G0 -muI] [x0; lam0] = -[p0; gbar0].
    """
    if init.mode == InitMode.FIXED:
        return init.x0.copy(), np.zeros(P0.shape[0])
    if init.mode != InitMode.CONSTRAINED:
        raise SolverError("cyclic initial conditions are handled by solve_cyclic")
    nx = P0.shape[0]
    ng = init.ng
    kkt = np.zeros((nx + ng, nx + ng))
    kkt[:nx, :nx] = P0
    kkt[:nx, nx:] = init.G.T
    kkt[nx:, :nx] = init.G
    kkt[nx:, nx:] = -mu * np.eye(ng)
    try:
        z = SymmetricFactor(kkt).solve(-np.concatenate([p0, gbar0]))
    except SingularMatrix as exc:
        raise SingularInitKkt(f"initial saddle system singular: {exc}") from exc
    return z[:nx], z[nx:]


def forward_pass(
    problem: LqProblem,
    gains: list[StageGains],
    x0: np.ndarray,
    lam0: np.ndarray,
    shifted: ShiftedRhs,
    mu: float,
) -> Solution:
    """Roll the gains forward from x0; lam0 is stored as the initial co-state."""
    N = problem.N
    x = [np.asarray(x0, dtype=float)]
    u, lam, nu = [], [np.asarray(lam0, dtype=float)], []
    for t in range(N):
        g = gains[t]
        xt = x[t]
        u.append(g.k + g.K @ xt)
        nu.append(g.zeta + g.Z @ xt)
        lam.append(g.omega + g.Omega @ xt)
        x.append(g.a + g.M @ xt)
    term = problem.terminal
    if term.nc:
        nu.append((shifted.h[N] + term.C @ x[N]) / mu)
    else:
        nu.append(np.zeros(0))
    return Solution(x=x, u=u, lam=lam, nu=nu)


def solve_serial(
    problem: LqProblem,
    prox: ProximalState,
    kernel: str = "blocksparse",
) -> Solution:
    """Backward pass, initial solve, forward pass (fixed/constrained init)."""
    gains, ctgs = backward_pass(problem, prox, kernel)
    shifted = shift_rhs(problem, prox)
    x0, lam0 = solve_initial(ctgs[0].P, ctgs[0].p, problem.init, shifted.g0, prox.mu)
    return forward_pass(problem, gains, x0, lam0, shifted, prox.mu)


def classic_riccati(problem: LqProblem) -> Solution:
    """Classic Riccati recursion for the unconstrained, unregularized problem.

    Requires explicit dynamics (E = -I), no constraint rows anywhere and a
    fixed initial state; Rhat must stay positive definite.
    """
    nx = problem.nx
    eye = np.eye(nx)
    for t, st in enumerate(problem.stages):
        if st.nc:
            raise SolverError(f"classic Riccati requires nc=0, stage {t} has {st.nc}")
        if not np.allclose(st.E, -eye, atol=1e-14, rtol=0.0):
            raise SolverError(f"classic Riccati requires E=-I at stage {t}")
    if problem.terminal.nc:
        raise SolverError("classic Riccati requires an unconstrained terminal stage")
    if problem.init.mode != InitMode.FIXED:
        raise SolverError("classic Riccati requires a fixed initial state")

    N = problem.N
    P = problem.terminal.Q.copy()
    p = problem.terminal.q.copy()
    ctgs = [None] * (N + 1)
    ctgs[N] = CostToGo(P=P, p=p)
    ks, Ks = [None] * N, [None] * N
    for t in range(N - 1, -1, -1):
        st = problem.stages[t]
        PA = P @ st.A
        PB = P @ st.B
        Qhat = st.Q + st.A.T @ PA
        Shat = st.S + st.A.T @ PB
        Rhat = st.R + st.B.T @ PB
        pf = p + P @ st.f
        qhat = st.q + st.A.T @ pf
        rhat = st.r + st.B.T @ pf
        try:
            cf = cho_factor(Rhat, lower=True)
        except np.linalg.LinAlgError as exc:
            raise IndefiniteRhat(
                f"Rhat not positive definite at stage {t}", stage=t
            ) from exc
        Ks[t] = -cho_solve(cf, Shat.T)
        ks[t] = -cho_solve(cf, rhat)
        P = symmetrize(Qhat + Shat @ Ks[t])
        p = qhat + Shat @ ks[t]
        ctgs[t] = CostToGo(P=P, p=p)

    x = [problem.init.x0.copy()]
    u, lam = [], [np.zeros(nx)]
    for t in range(N):
        st = problem.stages[t]
        u.append(ks[t] + Ks[t] @ x[t])
        x.append(st.A @ x[t] + st.B @ u[t] + st.f)
        lam.append(ctgs[t + 1].P @ x[t + 1] + ctgs[t + 1].p)
    nu = [np.zeros(0) for _ in range(N + 1)]
    return Solution(x=x, u=u, lam=lam, nu=nu)


def _at(t) -> str:
    return "" if t is None else f" at stage {t}"
