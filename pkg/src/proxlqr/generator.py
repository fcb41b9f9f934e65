"""Deterministic synthetic problem generators.

generate() builds feasible problems (the constraint right-hand sides are
consistent with a sampled trajectory) for outer-loop convergence studies and
the benchmark harness.  random_problem() samples unrestricted right-hand
sides for oracle-equivalence testing, where only the regularized KKT system
needs to be well posed.
"""

from __future__ import annotations

import numpy as np

from .problem import InitialCondition, LqProblem, StageData, TerminalData


def _psd(rng: np.random.Generator, n: int, eps: float = 1e-3) -> np.ndarray:
    # L at half scale keeps Hessian eigenvalues O(1), which keeps the dual
    # proximal iteration well contracted at the benchmark mu values
    L = 0.5 * rng.uniform(-1.0, 1.0, (n, n))
    return L.T @ L + eps * np.eye(n)


def _stable(rng: np.random.Generator, n: int, radius: float = 0.95) -> np.ndarray:
    # spectral radius capped so long horizons stay well conditioned
    A = rng.uniform(-1.0, 1.0, (n, n))
    rho = float(np.abs(np.linalg.eigvals(A)).max())
    if rho > radius:
        A *= radius / rho
    return A


def _e_matrix(rng: np.random.Generator, n: int, implicit: bool) -> np.ndarray:
    if not implicit:
        return -np.eye(n)
    return -np.eye(n) + 0.1 * rng.uniform(-1.0, 1.0, (n, n))


def _nc_list(nc, N: int) -> list[int]:
    if np.isscalar(nc):
        return [int(nc)] * N
    nc = [int(v) for v in nc]
    if len(nc) != N:
        raise ValueError(f"per-stage nc list must have length {N}")
    return nc


def random_problem(
    seed: int,
    N: int,
    nx: int,
    nu: int,
    nc=0,
    nc_terminal: int | None = None,
    implicit_E: bool = False,
    init: str = "fixed",
) -> LqProblem:
    """Well-conditioned random instance; not necessarily feasible at mu = 0."""
    rng = np.random.default_rng(seed)
    ncs = _nc_list(nc, N)
    nc_term = ncs[-1] if nc_terminal is None else int(nc_terminal)
    stages = []
    for t in range(N):
        kw = {}
        if ncs[t]:
            kw = dict(
                C=rng.uniform(-1, 1, (ncs[t], nx)),
                D=rng.uniform(-1, 1, (ncs[t], nu)),
                h=rng.uniform(-1, 1, ncs[t]),
            )
        stages.append(
            StageData(
                Q=_psd(rng, nx),
                S=0.1 * rng.uniform(-1, 1, (nx, nu)),
                R=_psd(rng, nu),
                q=rng.uniform(-1, 1, nx),
                r=rng.uniform(-1, 1, nu),
                A=_stable(rng, nx),
                B=rng.uniform(-1, 1, (nx, nu)),
                E=_e_matrix(rng, nx, implicit_E),
                f=rng.uniform(-1, 1, nx),
                **kw,
            )
        )
    terminal = TerminalData(
        Q=_psd(rng, nx),
        q=rng.uniform(-1, 1, nx),
        C=rng.uniform(-1, 1, (nc_term, nx)) if nc_term else None,
        h=rng.uniform(-1, 1, nc_term) if nc_term else None,
    )
    if init == "fixed":
        cond = InitialCondition.fixed(rng.uniform(-1, 1, nx))
    elif init == "constrained":
        cond = InitialCondition.constrained(-np.eye(nx), rng.uniform(-1, 1, nx))
    elif init == "cyclic":
        cond = InitialCondition.cyclic()
    else:
        raise ValueError(f"unknown init mode {init!r}")
    return LqProblem(nx=nx, nu=nu, N=N, stages=stages, terminal=terminal, init=cond)


def generate(
    seed: int,
    N: int,
    nx: int,
    nu: int,
    nc=0,
    nc_terminal: int | None = None,
    implicit_E: bool = False,
    init: str = "fixed",
) -> LqProblem:
    """Feasible-by-construction instance: f, h, g match a sampled trajectory.

    The cost Hessian is jointly positive definite per stage, so the problem
    is a well-posed convex LQ problem and the outer proximal loop converges
    to its exact solution.
    """
    rng = np.random.default_rng(seed)
    ncs = _nc_list(nc, N)
    nc_term = ncs[-1] if nc_terminal is None else int(nc_terminal)
    xs = rng.uniform(-1, 1, (N + 1, nx))
    us = rng.uniform(-1, 1, (N, nu))
    stages = []
    for t in range(N):
        W = _psd(rng, nx + nu)
        A = _stable(rng, nx)
        B = rng.uniform(-1, 1, (nx, nu))
        E = _e_matrix(rng, nx, implicit_E)
        f = -(A @ xs[t] + B @ us[t] + E @ xs[t + 1])
        kw = {}
        if ncs[t]:
            C = rng.uniform(-1, 1, (ncs[t], nx))
            D = rng.uniform(-1, 1, (ncs[t], nu))
            kw = dict(C=C, D=D, h=-(C @ xs[t] + D @ us[t]))
        stages.append(
            StageData(
                Q=W[:nx, :nx],
                S=W[:nx, nx:],
                R=W[nx:, nx:],
                q=rng.uniform(-1, 1, nx),
                r=rng.uniform(-1, 1, nu),
                A=A,
                B=B,
                E=E,
                f=f,
                **kw,
            )
        )
    CN = rng.uniform(-1, 1, (nc_term, nx)) if nc_term else None
    terminal = TerminalData(
        Q=_psd(rng, nx),
        q=rng.uniform(-1, 1, nx),
        C=CN,
        h=-(CN @ xs[N]) if nc_term else None,
    )
    if init == "fixed":
        cond = InitialCondition.fixed(xs[0])
    elif init == "constrained":
        G = -np.eye(nx)
        cond = InitialCondition.constrained(G, -(G @ xs[0]))
    elif init == "cyclic":
        cond = InitialCondition.cyclic()
    else:
        raise ValueError(f"unknown init mode {init!r}")
    return LqProblem(nx=nx, nu=nu, N=N, stages=stages, terminal=terminal, init=cond)


def infeasible_toy(nx: int = 2, nu: int = 1, N: int = 3, seed: int = 0) -> LqProblem:
    """Two contradictory constraint rows on the same stage; the outer loop
    must fail with a non-vanishing feasibility residual."""
    problem = generate(seed, N, nx, nu, nc=0)
    st = problem.stages[1]
    row = np.zeros((1, nx))
    row[0, 0] = 1.0
    st.C = np.vstack([row, row])
    st.D = np.zeros((2, nu))
    st.h = np.array([0.0, 1.0])  # x[0] = 0 and x[0] = -1: contradiction
    return problem
