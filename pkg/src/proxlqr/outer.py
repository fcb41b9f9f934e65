"""Outer dual proximal-point loop.

Repeatedly solves the mu-regularized problem with any backend, feeding the
returned multipliers back as the next estimates, until the unregularized
KKT residuals fall below tolerance.  mu is held constant across iterations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import MaxItersExceeded, SolverError
from .parallel import ParallelSolver
from .parametric import solve_cyclic
from .problem import InitMode, LqProblem, ProximalState, Solution, kkt_residual
from .riccati import solve_serial

BACKENDS = ("serial", "blocksparse", "parallel")


@dataclass
class ProxLoopSettings:
    """Outer-loop configuration.

    backend is "serial" (dense stage kernel), "blocksparse" or "parallel";
    legs/workers only apply to the parallel backend.
    """

    mu: float
    max_iters: int = 50
    tol_stationarity: float = 1e-8
    tol_feasibility: float = 1e-8
    backend: str = "blocksparse"
    legs: int | None = None
    workers: int | None = None

    def __post_init__(self):
        if self.mu <= 0:
            raise SolverError(f"mu must be positive, got {self.mu}")
        if self.tol_stationarity <= 0 or self.tol_feasibility <= 0:
            raise SolverError("tolerances must be positive")
        if self.backend not in BACKENDS:
            raise SolverError(
                f"unknown backend {self.backend!r}; expected one of {BACKENDS}"
            )


def solve_inner(
    problem: LqProblem, prox: ProximalState, settings: ProxLoopSettings
) -> Solution:
    """One regularized solve with the configured backend."""
    if problem.init.mode == InitMode.CYCLIC:
        if settings.backend == "parallel":
            raise SolverError(
                "parallel backend does not support cyclic problems; "
                "use a serial backend"
            )
        kernel = "dense" if settings.backend == "serial" else "blocksparse"
        return solve_cyclic(problem, prox, kernel)
    if settings.backend == "parallel":
        legs = settings.legs
        if legs is None:
            from .parallel import default_leg_count

            legs = default_leg_count(problem.N, settings.workers)
        return ParallelSolver(
            problem, legs, workers=settings.workers
        ).solve(prox)
    kernel = "dense" if settings.backend == "serial" else "blocksparse"
    return solve_serial(problem, prox, kernel)


def solve_exact(
    problem: LqProblem, settings: ProxLoopSettings
) -> tuple[Solution, int, list[tuple[float, float]]]:
    """Drive the regularized solves to the exact solution of the raw problem.

    Returns (solution, iterations_used, residual_history).  Raises
    MaxItersExceeded (carrying the history and the last iterate) when the
    tolerances are not met, which is also how infeasibility manifests.
    """
    prox = ProximalState.zero(problem, settings.mu)
    history: list[tuple[float, float]] = []
    sol = None
    for it in range(1, settings.max_iters + 1):
        sol = solve_inner(problem, prox, settings)
        stat, feas = kkt_residual(problem, None, sol)
        history.append((stat, feas))
        if stat <= settings.tol_stationarity and feas <= settings.tol_feasibility:
            return sol, it, history
        prox = ProximalState(settings.mu, [v.copy() for v in sol.lam],
                             [v.copy() for v in sol.nu])
    raise MaxItersExceeded(
        f"no convergence in {settings.max_iters} outer iterations "
        f"(last residuals: stationarity {history[-1][0]:.3e}, "
        f"feasibility {history[-1][1]:.3e})",
        residuals=history[-1],
        history=history,
        solution=sol,
    )
