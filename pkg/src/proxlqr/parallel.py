"""Parallel backend: split the horizon into legs, condense, stitch.

Each leg except the last is solved parametrically in the co-state that ties
it to the next leg: the coupling term lam~' (A x + B u + fbar) lives on the
leg's last stage (Phi = A', Psi = B', gamma = fbar) and the dual
regularization of that co-state contributes Gamma = -mu I.  Leg results
condense into a symmetric block-tridiagonal consensus system in the boundary
states and co-states, which is solved by the block UDU' sweep; per-leg
forward passes then reconstruct the trajectory.

Backward legs and forward legs are embarrassingly parallel; a barrier
separates the backward / consensus / forward phases.  The output is
deterministic for a fixed partition regardless of worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import block_tridiag
from .errors import InvalidLegCount, SingularStageKkt, SolverError
from .linalg import SingularMatrix, SymmetricFactor, symmetrize
from .problem import (
    InitMode,
    LqProblem,
    ProximalState,
    ShiftedRhs,
    Solution,
    StageData,
    shift_rhs,
)
from .riccati import CostToGo, ParamGains, StageGains, get_kernel, terminal_cost_to_go
from .parametric import ValueParams

WORKERS_ENV = "PROXLQR_WORKERS"


@dataclass
class Partition:
    """Leg boundaries 0 = i_0 < i_1 < ... < i_J <= N-1 splitting horizon N.

    Leg j covers stages [i_j, i_{j+1} - 1]; the last leg additionally owns the
    terminal stage N.
    """

    N: int
    indices: list[int]

    def __post_init__(self):
        idx = list(self.indices)
        if not idx or idx[0] != 0:
            raise InvalidLegCount("partition must start at stage 0")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise InvalidLegCount(f"partition indices must increase: {idx}")
        if len(idx) < 2:
            raise InvalidLegCount("need at least two legs (J >= 1)")
        if idx[-1] > self.N - 1:
            raise InvalidLegCount(
                f"last boundary {idx[-1]} exceeds N-1 = {self.N - 1}"
            )
        self.indices = idx

    @property
    def J(self) -> int:
        return len(self.indices) - 1

    def legs(self) -> list[tuple[int, int]]:
        """Inclusive (start, stop) stage ranges; the last stop is N."""
        idx = self.indices
        out = [(idx[j], idx[j + 1] - 1) for j in range(self.J)]
        out.append((idx[self.J], self.N))
        return out


def make_partition(N: int, J: int, strategy: str = "equal") -> Partition:
    """Split N stages into J+1 legs of near-equal length (remainder first)."""
    if not 1 <= J < N:
        raise InvalidLegCount(f"need 1 <= J < N, got J={J}, N={N}")
    if strategy != "equal":
        raise InvalidLegCount(f"unknown partition strategy {strategy!r}")
    base, rem = divmod(N, J + 1)
    counts = [base + 1] * rem + [base] * (J + 1 - rem)
    indices = [0]
    for c in counts[:-1]:
        indices.append(indices[-1] + c)
    return Partition(N=N, indices=indices)


@dataclass
class LegValue:
    """Condensed leg data at the leg head: value in (x~_j, lam~_{j+1}) plus the
    boundary dynamics matrix."""

    Ptilde: np.ndarray
    ptilde: np.ndarray
    Lambdatilde: np.ndarray
    Sigmatilde: np.ndarray
    sigmatilde: np.ndarray
    Etilde: np.ndarray | None


@dataclass
class BoundaryGains:
    """Feedback of a leg's last stage: (u, nu) as affine maps of (x, lam~)."""

    k: np.ndarray
    K: np.ndarray
    Ktheta: np.ndarray
    zeta: np.ndarray
    Z: np.ndarray
    Ztheta: np.ndarray


@dataclass
class LegFactorization:
    start: int
    stop: int  # last stage owned by the leg (boundary stage, or N for the last leg)
    gains: list[StageGains]
    pgains: list[ParamGains] | None
    boundary: BoundaryGains | None
    value: LegValue


def _boundary_stage(
    stage: StageData, fbar: np.ndarray, hbar: np.ndarray, mu: float, t: int
) -> tuple[BoundaryGains, ValueParams]:
    """Eliminate (u, nu) of a leg's last stage, whose next state belongs to the
    consensus system.

    The stage's saddle value in (x, theta=lam~) has P = Q + SK + C'Z,
    Lambda = A' + K'B', Sigma = -mu I + B Ktheta, sigma = fbar + B k.
    """
    nx, nu, nc = stage.nx, stage.nu, stage.nc
    khat = np.zeros((nu + nc, nu + nc))
    khat[:nu, :nu] = stage.R
    if nc:
        khat[:nu, nu:] = stage.D.T
        khat[nu:, :nu] = stage.D
        khat[nu:, nu:] = -mu * np.eye(nc)
    rhs = np.zeros((nu + nc, 1 + 2 * nx))
    rhs[:nu, 0] = stage.r
    rhs[:nu, 1 : 1 + nx] = stage.S.T
    rhs[:nu, 1 + nx :] = stage.B.T
    if nc:
        rhs[nu:, 0] = hbar
        rhs[nu:, 1 : 1 + nx] = stage.C
    try:
        fb = SymmetricFactor(khat).solve(-rhs)
    except SingularMatrix as exc:
        raise SingularStageKkt(
            f"boundary feedback system singular at stage {t}", stage=t
        ) from exc
    g = BoundaryGains(
        k=fb[:nu, 0],
        K=fb[:nu, 1 : 1 + nx],
        Ktheta=fb[:nu, 1 + nx :],
        zeta=fb[nu:, 0],
        Z=fb[nu:, 1 : 1 + nx],
        Ztheta=fb[nu:, 1 + nx :],
    )
    P = stage.Q + stage.S @ g.K
    p = stage.q + stage.S @ g.k
    Lam = stage.A.T + g.K.T @ stage.B.T
    if nc:
        P = P + stage.C.T @ g.Z
        p = p + stage.C.T @ g.zeta
    value = ValueParams(
        P=symmetrize(P),
        p=p,
        Lambda=Lam,
        Sigma=symmetrize(-mu * np.eye(nx) + stage.B @ g.Ktheta),
        sigma=fbar + stage.B @ g.k,
    )
    return g, value


def _leg_backward_impl(
    problem: LqProblem,
    shifted: ShiftedRhs,
    mu: float,
    start: int,
    stop: int,
    is_last: bool,
    kernel: str,
) -> LegFactorization:
    kern = get_kernel(kernel)
    nx = problem.nx
    if is_last:
        ctg = terminal_cost_to_go(problem.terminal, shifted.h[problem.N], mu)
        gains: list[StageGains] = [None] * (stop - start)
        for t in range(stop - 1, start - 1, -1):
            g, ctg, _ = kern(
                problem.stages[t], shifted.f[t], shifted.h[t], ctg, mu, t=t
            )
            gains[t - start] = g
        zero = np.zeros((nx, nx))
        value = LegValue(
            Ptilde=ctg.P,
            ptilde=ctg.p,
            Lambdatilde=zero,
            Sigmatilde=zero,
            sigmatilde=np.zeros(nx),
            Etilde=None,
        )
        return LegFactorization(
            start=start, stop=stop, gains=gains, pgains=None, boundary=None,
            value=value,
        )

    boundary, vp = _boundary_stage(
        problem.stages[stop], shifted.f[stop], shifted.h[stop], mu, stop
    )
    gains = [None] * (stop - start)
    pgains: list[ParamGains] = [None] * (stop - start)
    for t in range(stop - 1, start - 1, -1):
        g, ctg, pg = kern(
            problem.stages[t],
            shifted.f[t],
            shifted.h[t],
            vp.ctg,
            mu,
            Psi=np.zeros((problem.nu, nx)),
            Lam_next=vp.Lambda,
            t=t,
        )
        gains[t - start] = g
        pgains[t - start] = pg
        vp = ValueParams(
            P=ctg.P,
            p=ctg.p,
            Lambda=g.M.T @ vp.Lambda,
            Sigma=symmetrize(vp.Sigma + vp.Lambda.T @ pg.Mtheta),
            sigma=vp.sigma + vp.Lambda.T @ g.a,
        )
    value = LegValue(
        Ptilde=vp.P,
        ptilde=vp.p,
        Lambdatilde=vp.Lambda,
        Sigmatilde=vp.Sigma,
        sigmatilde=vp.sigma,
        Etilde=problem.stages[stop].E.copy(),
    )
    return LegFactorization(
        start=start, stop=stop, gains=gains, pgains=pgains, boundary=boundary,
        value=value,
    )


def leg_backward(
    problem: LqProblem,
    prox: ProximalState,
    partition: Partition,
    j: int,
    kernel: str = "blocksparse",
) -> LegFactorization:
    """Backward pass of leg j; parametric in the tying co-state except for the
    last leg."""
    shifted = shift_rhs(problem, prox)
    start, stop = partition.legs()[j]
    return _leg_backward_impl(
        problem, shifted, prox.mu, start, stop, j == partition.J, kernel
    )


def assemble_consensus(
    leg_values: list[LegValue],
    problem: LqProblem,
    gbar0: np.ndarray | None,
    mu: float,
) -> tuple[block_tridiag.BlockTridiag, list[np.ndarray]]:
    """Consensus system in (lam0, x0, lam~_1, x~_1, ..., lam~_J, x~_J).

    For a fixed x0 the (lam0, x0) rows do not exist and the known x0 moves
    into the first right-hand side block.
    """
    J = len(leg_values) - 1
    diag: list[np.ndarray] = []
    sup: list[np.ndarray] = []
    rhs: list[np.ndarray] = []
    init = problem.init
    if init.mode == InitMode.CONSTRAINED:
        diag.append(-mu * np.eye(init.ng))
        sup.append(init.G)
        rhs.append(-gbar0)
        diag.append(leg_values[0].Ptilde)
        sup.append(leg_values[0].Lambdatilde)
        rhs.append(-leg_values[0].ptilde)
        rhs.append(-leg_values[0].sigmatilde)
    elif init.mode == InitMode.FIXED:
        rhs.append(
            -(leg_values[0].sigmatilde + leg_values[0].Lambdatilde.T @ init.x0)
        )
    else:
        raise SolverError("parallel backend does not support cyclic problems")
    diag.append(leg_values[0].Sigmatilde)
    for j in range(1, J + 1):
        lv = leg_values[j]
        sup.append(leg_values[j - 1].Etilde)
        diag.append(lv.Ptilde)
        rhs.append(-lv.ptilde)
        if j < J:
            sup.append(lv.Lambdatilde)
            diag.append(lv.Sigmatilde)
            rhs.append(-lv.sigmatilde)
    return block_tridiag.BlockTridiag(diag=diag, sup=sup), rhs


def default_workers(J: int) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return max(1, min(J + 1, os.cpu_count() or 1))


def default_leg_count(N: int, workers: int | None = None) -> int:
    """J defaults to min(workers, N/8), at least 1."""
    w = workers if workers is not None else (os.cpu_count() or 1)
    return max(1, min(w, N // 8 or 1))


class ParallelSolver:
    """Reusable parallel backend bound to one problem and partition.

    Leg structures are set up once so repeated solves (MPC-style) only run
    the numerical passes.  Thread count is independent of the leg count.
    """

    def __init__(
        self,
        problem: LqProblem,
        partition: Partition | int,
        workers: int | None = None,
        kernel: str = "blocksparse",
    ):
        if problem.init.mode == InitMode.CYCLIC:
            raise SolverError(
                "parallel backend does not support cyclic problems; "
                "use the serial parametric solver"
            )
        if isinstance(partition, int):
            partition = make_partition(problem.N, partition)
        if partition.N != problem.N:
            raise InvalidLegCount(
                f"partition is for N={partition.N}, problem has N={problem.N}"
            )
        self.problem = problem
        self.partition = partition
        self.kernel = kernel
        self.workers = workers if workers is not None else default_workers(partition.J)
        self._legs = partition.legs()

    def _map(self, fn, items):
        if self.workers <= 1 or len(items) <= 1:
            return [fn(it) for it in items]
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(fn, items))

    def solve(self, prox: ProximalState) -> Solution:
        problem = self.problem
        partition = self.partition
        J = partition.J
        shifted = shift_rhs(problem, prox)
        mu = prox.mu

        def backward(j: int) -> LegFactorization:
            start, stop = self._legs[j]
            return _leg_backward_impl(
                problem, shifted, mu, start, stop, j == J, self.kernel
            )

        legs = self._map(backward, list(range(J + 1)))

        tridiag, rhs = assemble_consensus(
            [leg.value for leg in legs], problem, shifted.g0, mu
        )
        blocks = block_tridiag.solve(block_tridiag.factor_udut(tridiag), rhs)

        fixed = problem.init.mode == InitMode.FIXED
        if fixed:
            lam0 = np.zeros(problem.nx)
            xt = [problem.init.x0.copy()]
            lt = []
        else:
            lam0 = blocks[0]
            xt = [blocks[1]]
            lt = []
            blocks = blocks[2:]
        # remaining blocks alternate lam~_{j+1}, x~_{j+1}
        for j in range(J):
            lt.append(blocks[2 * j])
            xt.append(blocks[2 * j + 1])

        N, nx = problem.N, problem.nx
        x: list[np.ndarray | None] = [None] * (N + 1)
        u: list[np.ndarray | None] = [None] * N
        lam: list[np.ndarray | None] = [None] * (N + 1)
        nu: list[np.ndarray | None] = [None] * (N + 1)
        lam[0] = lam0
        for j in range(J + 1):
            x[self._legs[j][0]] = xt[j]
            if j > 0:
                lam[self._legs[j][0]] = lt[j - 1]

        def forward(j: int) -> None:
            leg = legs[j]
            start, stop = self._legs[j]
            xs = xt[j]
            if j < J:
                theta = lt[j]
                for t in range(start, stop):
                    g = leg.gains[t - start]
                    pg = leg.pgains[t - start]
                    u[t] = g.k + g.K @ xs + pg.Ktheta @ theta
                    nu[t] = g.zeta + g.Z @ xs + pg.Ztheta @ theta
                    lam[t + 1] = g.omega + g.Omega @ xs + pg.OmegaTheta @ theta
                    xs = g.a + g.M @ xs + pg.Mtheta @ theta
                    x[t + 1] = xs
                b = leg.boundary
                u[stop] = b.k + b.K @ xs + b.Ktheta @ theta
                nu[stop] = b.zeta + b.Z @ xs + b.Ztheta @ theta
            else:
                for t in range(start, N):
                    g = leg.gains[t - start]
                    u[t] = g.k + g.K @ xs
                    nu[t] = g.zeta + g.Z @ xs
                    lam[t + 1] = g.omega + g.Omega @ xs
                    xs = g.a + g.M @ xs
                    x[t + 1] = xs
                term = problem.terminal
                if term.nc:
                    nu[N] = (shifted.h[N] + term.C @ x[N]) / mu
                else:
                    nu[N] = np.zeros(0)

        self._map(forward, list(range(J + 1)))
        return Solution(x=x, u=u, lam=lam, nu=nu)


def solve_parallel(
    problem: LqProblem,
    prox: ProximalState,
    legs: int | Partition,
    workers: int | None = None,
    kernel: str = "blocksparse",
) -> Solution:
    """One-shot parallel solve with J legs (or an explicit Partition)."""
    return ParallelSolver(problem, legs, workers=workers, kernel=kernel).solve(prox)
