"""Dense assembly and factorization of the full proximal KKT system.

This is the ground-truth oracle for the structured backends: the whole
block-banded saddle system is formed explicitly and handed to a dense
symmetric-indefinite (Bunch-Kaufman) factorization.  Not a performance path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularKkt
from .linalg import SingularMatrix, SymmetricFactor
from .problem import (
    InitMode,
    LqProblem,
    ProximalState,
    ShiftedRhs,
    Solution,
    shift_rhs,
)


@dataclass
class DenseKkt:
    """Assembled KKT matrix M and right-hand column rhs, with M z + rhs = 0.

    layout maps (kind, stage) -> slice of the variable vector, where kind is
    one of "x", "u", "nu", "lam".  For a fixed initial state, x0 and lam0 are
    not variables: x0-dependent terms are folded into rhs.
    """

    M: np.ndarray
    rhs: np.ndarray
    layout: dict[tuple[str, int], slice]

    @property
    def n(self) -> int:
        return self.rhs.shape[0]


def _build_layout(problem: LqProblem) -> dict[tuple[str, int], slice]:
    layout: dict[tuple[str, int], slice] = {}
    pos = 0

    def add(kind: str, t: int, size: int):
        nonlocal pos
        layout[(kind, t)] = slice(pos, pos + size)
        pos += size

    nx, nu, N = problem.nx, problem.nu, problem.N
    if problem.init.mode == InitMode.CONSTRAINED:
        add("lam", 0, problem.init.ng)
        add("x", 0, nx)
    for t in range(N):
        if t > 0:
            add("x", t, nx)
        add("u", t, nu)
        add("nu", t, problem.nc(t))
        add("lam", t + 1, nx)
    add("x", N, nx)
    add("nu", N, problem.nc(N))
    return layout


def assemble(problem: LqProblem, prox: ProximalState | None) -> DenseKkt:
    """Assemble the dense proximal KKT system.

    prox=None assembles the unregularized system (mu = 0, raw right-hand
    sides); useful as the exact-KKT oracle when that system is nonsingular.
    """
    if problem.init.mode == InitMode.CYCLIC:
        raise NotImplementedError(
            "dense assembly covers fixed/constrained initial modes; "
            "cyclic problems are checked through the parametric value function"
        )
    shifted = shift_rhs(problem, prox)
    mu = 0.0 if prox is None else prox.mu
    layout = _build_layout(problem)
    n = max(s.stop for s in layout.values())
    M = np.zeros((n, n))
    rhs = np.zeros(n)
    fixed = problem.init.mode == InitMode.FIXED
    x0 = problem.init.x0 if fixed else None

    def put(a: slice, b: slice, block: np.ndarray):
        M[a, b] += block
        if a != b:
            M[b, a] += block.T

    N = problem.N
    for t in range(N):
        st = problem.stages[t]
        s_u = layout[("u", t)]
        s_nu = layout[("nu", t)]
        s_lam = layout[("lam", t + 1)]
        put(s_u, s_u, st.R)
        put(s_lam, s_lam, -mu * np.eye(problem.nx))
        put(s_u, s_lam, st.B.T)
        rhs[s_u] += st.r
        rhs[s_lam] += shifted.f[t]
        if st.nc:
            put(s_nu, s_nu, -mu * np.eye(st.nc))
            put(s_u, s_nu, st.D.T)
            rhs[s_nu] += shifted.h[t]
        if t == 0 and fixed:
            rhs[s_u] += st.S.T @ x0
            rhs[s_lam] += st.A @ x0
            if st.nc:
                rhs[s_nu] += st.C @ x0
        else:
            s_x = layout[("x", t)]
            put(s_x, s_x, st.Q)
            put(s_x, s_u, st.S)
            put(s_x, s_lam, st.A.T)
            rhs[s_x] += st.q
            if st.nc:
                put(s_x, s_nu, st.C.T)
        # next-state coupling E_t
        s_xn = layout[("x", t + 1)]
        put(s_lam, s_xn, st.E)

    term = problem.terminal
    s_xN = layout[("x", N)]
    put(s_xN, s_xN, term.Q)
    rhs[s_xN] += term.q
    if term.nc:
        s_nuN = layout[("nu", N)]
        put(s_nuN, s_nuN, -mu * np.eye(term.nc))
        put(s_xN, s_nuN, term.C.T)
        rhs[s_nuN] += shifted.h[N]

    if problem.init.mode == InitMode.CONSTRAINED:
        s_lam0 = layout[("lam", 0)]
        s_x0 = layout[("x", 0)]
        put(s_lam0, s_lam0, -mu * np.eye(problem.init.ng))
        put(s_lam0, s_x0, problem.init.G)
        rhs[s_lam0] += shifted.g0

    return DenseKkt(M=M, rhs=rhs, layout=layout)


def solve_dense(problem: LqProblem, prox: ProximalState | None) -> Solution:
    """Solve the assembled KKT system and unpack the solution trajectory."""
    kkt = assemble(problem, prox)
    try:
        z = SymmetricFactor(kkt.M).solve(-kkt.rhs)
    except SingularMatrix as exc:
        raise SingularKkt(f"dense KKT factorization failed: {exc}") from exc
    return extract_solution(problem, kkt, z)


def extract_solution(problem: LqProblem, kkt: DenseKkt, z: np.ndarray) -> Solution:
    N, nx = problem.N, problem.nx
    fixed = problem.init.mode == InitMode.FIXED
    x = []
    if fixed:
        x.append(problem.init.x0.copy())
    else:
        x.append(z[kkt.layout[("x", 0)]])
    x += [z[kkt.layout[("x", t)]] for t in range(1, N + 1)]
    u = [z[kkt.layout[("u", t)]] for t in range(N)]
    nu = [z[kkt.layout[("nu", t)]] for t in range(N + 1)]
    lam = [np.zeros(nx) if fixed else z[kkt.layout[("lam", 0)]]]
    lam += [z[kkt.layout[("lam", t)]] for t in range(1, N + 1)]
    return Solution(x=x, u=u, lam=lam, nu=nu)
