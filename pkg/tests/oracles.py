"""Independent reference computations used by the test suite.

Everything here goes through generic dense linear algebra (numpy.linalg) and
explicit Lagrangian assembly, never through the recursion code paths it is
used to check.
"""

from __future__ import annotations

import copy

import numpy as np

from proxlqr import (
    InitialCondition,
    LqProblem,
    ProximalState,
    Solution,
    assemble,
)


def rel_inf(got, want) -> float:
    """Relative infinity-norm deviation between lists of arrays (or arrays)."""
    if isinstance(got, np.ndarray):
        got, want = [got], [want]
    va = np.concatenate([np.asarray(a, dtype=float).ravel() for a in got])
    vb = np.concatenate([np.asarray(b, dtype=float).ravel() for b in want])
    if va.size == 0:
        return 0.0
    return float(np.abs(va - vb).max() / (1.0 + np.abs(vb).max()))


def solution_dev(got: Solution, want: Solution) -> float:
    parts = []
    for name in ("x", "u", "lam", "nu"):
        parts.append(rel_inf(getattr(got, name), getattr(want, name)))
    return max(parts)


def dense_value_params(problem: LqProblem, prox: ProximalState, params):
    """(P0, p0, Lam0, Sig0, sig0) by Schur complement of the dense parametric
    Lagrangian, treating (x0, theta) as the parameters."""
    fixed_zero = copy.deepcopy(problem)
    fixed_zero.init = InitialCondition.fixed(np.zeros(problem.nx))
    kkt = assemble(fixed_zero, prox)
    n = kkt.n
    ntheta = params[0].ntheta
    L_xith = np.zeros((n, ntheta))
    for t in range(problem.N):
        L_xith[kkt.layout[("u", t)]] = params[t].Psi
        if t > 0:
            L_xith[kkt.layout[("x", t)]] = params[t].Phi
    L_xith[kkt.layout[("x", problem.N)]] = params[problem.N].Phi
    st0 = problem.stages[0]
    L_x0xi = np.zeros((problem.nx, n))
    L_x0xi[:, kkt.layout[("u", 0)]] = st0.S
    if st0.nc:
        L_x0xi[:, kkt.layout[("nu", 0)]] = st0.C.T
    L_x0xi[:, kkt.layout[("lam", 1)]] = st0.A.T
    L_th = sum(p.gamma for p in params)
    L_thth = sum(p.Gamma for p in params)
    sol = np.linalg.solve(
        kkt.M, np.column_stack([kkt.rhs[:, None], L_xith, L_x0xi.T])
    )
    i_th = slice(1, 1 + ntheta)
    i_x0 = slice(1 + ntheta, 1 + ntheta + problem.nx)
    return (
        st0.Q - L_x0xi @ sol[:, i_x0],                  # P0
        st0.q - L_x0xi @ sol[:, 0],                     # p0
        params[0].Phi - L_x0xi @ sol[:, i_th],          # Lam0
        L_thth - L_xith.T @ sol[:, i_th],               # Sig0
        L_th - L_xith.T @ sol[:, 0],                    # sig0
    )


def offset_problem(problem: LqProblem, params, theta: np.ndarray) -> LqProblem:
    """Fold the parametric coupling at a fixed theta into the linear costs."""
    out = copy.deepcopy(problem)
    for t in range(problem.N):
        out.stages[t].q = out.stages[t].q + params[t].Phi @ theta
        out.stages[t].r = out.stages[t].r + params[t].Psi @ theta
    out.terminal.q = out.terminal.q + params[problem.N].Phi @ theta
    return out


def saddle_value(problem, prox, params, theta, sol: Solution) -> float:
    """Lagrangian value (including the proximal penalty and the parametric
    terms) at a given primal-dual point."""
    mu = prox.mu
    total = 0.0
    for t in range(problem.N):
        st = problem.stages[t]
        x, u = sol.x[t], sol.u[t]
        total += 0.5 * (x @ st.Q @ x) + x @ st.S @ u + 0.5 * (u @ st.R @ u)
        total += st.q @ x + st.r @ u
        lam = sol.lam[t + 1]
        total += lam @ (st.A @ x + st.B @ u + st.E @ sol.x[t + 1] + st.f)
        total -= 0.5 * mu * np.sum((lam - prox.lam_e[t + 1]) ** 2)
        if st.nc:
            total += sol.nu[t] @ (st.C @ x + st.D @ u + st.h)
            total -= 0.5 * mu * np.sum((sol.nu[t] - prox.nu_e[t]) ** 2)
        total += theta @ (params[t].Phi.T @ x + params[t].Psi.T @ u
                          + params[t].gamma)
        total += 0.5 * theta @ params[t].Gamma @ theta
    term = problem.terminal
    xN = sol.x[problem.N]
    total += 0.5 * (xN @ term.Q @ xN) + term.q @ xN
    if term.nc:
        total += sol.nu[problem.N] @ (term.C @ xN + term.h)
        total -= 0.5 * mu * np.sum((sol.nu[problem.N] - prox.nu_e[problem.N]) ** 2)
    pN = params[problem.N]
    total += theta @ (pN.Phi.T @ xN + pN.gamma) + 0.5 * theta @ pN.Gamma @ theta
    return float(total)


def leg_value_oracle(problem: LqProblem, prox: ProximalState, start: int, stop: int):
    """(P, p, Lambda, Sigma, sigma) of one parallel leg [start, stop] by dense
    Schur complement, with parameters (x_start, theta = tying co-state).

    The leg's last stage couples to theta through its dynamics row
    theta'(A x + B u + fbar) - mu/2 |theta|^2.
    """
    from proxlqr import shift_rhs

    shifted = shift_rhs(problem, prox)
    mu = prox.mu
    nx, nu = problem.nx, problem.nu

    # variable layout: u_t, nu_t for t in [start, stop]; lam_{t+1}, x_{t+1}
    # for t in [start, stop-1]
    layout = {}
    pos = 0
    for t in range(start, stop + 1):
        layout[("u", t)] = slice(pos, pos + nu)
        pos += nu
        nc = problem.stages[t].nc
        layout[("nu", t)] = slice(pos, pos + nc)
        pos += nc
        if t < stop:
            layout[("lam", t + 1)] = slice(pos, pos + nx)
            pos += nx
            layout[("x", t + 1)] = slice(pos, pos + nx)
            pos += nx
    n = pos
    M = np.zeros((n, n))
    rhs = np.zeros(n)
    L_xith = np.zeros((n, nx))
    L_x0xi = np.zeros((nx, n))
    L_x0th = np.zeros((nx, nx))

    def put(a, b, block):
        M[a, b] += block
        if a != b:
            M[b, a] += np.asarray(block).T

    for t in range(start, stop + 1):
        st = problem.stages[t]
        s_u = layout[("u", t)]
        s_nu = layout[("nu", t)]
        put(s_u, s_u, st.R)
        rhs[s_u] += st.r
        if st.nc:
            put(s_nu, s_nu, -mu * np.eye(st.nc))
            put(s_u, s_nu, st.D.T)
            rhs[s_nu] += shifted.h[t]
        if t == start:
            L_x0xi[:, s_u] += st.S
            if st.nc:
                L_x0xi[:, s_nu] += st.C.T
        else:
            s_x = layout[("x", t)]
            put(s_x, s_x, st.Q)
            put(s_x, s_u, st.S)
            rhs[s_x] += st.q
            if st.nc:
                put(s_x, s_nu, st.C.T)
        if t < stop:
            s_lam = layout[("lam", t + 1)]
            put(s_lam, s_lam, -mu * np.eye(nx))
            put(s_u, s_lam, st.B.T)
            put(s_lam, layout[("x", t + 1)], st.E)
            rhs[s_lam] += shifted.f[t]
            if t == start:
                L_x0xi[:, s_lam] += st.A.T
            else:
                put(layout[("x", t)], s_lam, st.A.T)
        else:
            # theta coupling through the boundary dynamics row
            L_xith[s_u] += st.B.T
            if t == start:
                L_x0th = st.A.T.copy()
            else:
                L_xith[layout[("x", t)]] += st.A.T

    L_thth = -mu * np.eye(nx)
    L_th = shifted.f[stop].copy()
    st0 = problem.stages[start]

    sol = np.linalg.solve(M, np.column_stack([rhs[:, None], L_xith, L_x0xi.T]))
    i_th = slice(1, 1 + nx)
    i_x0 = slice(1 + nx, 1 + nx + nx)
    return (
        st0.Q - L_x0xi @ sol[:, i_x0],
        st0.q - L_x0xi @ sol[:, 0],
        L_x0th - L_x0xi @ sol[:, i_th],
        L_thth - L_xith.T @ sol[:, i_th],
        L_th - L_xith.T @ sol[:, 0],
    )
