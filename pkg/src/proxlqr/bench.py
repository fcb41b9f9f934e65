"""Benchmark harness and the closed-form backward-pass cost model.

The model counts one stage factorization as Cfac = (nx+nu+nc)^3 and one
right-hand-side column as Ccol = (nx+nu+nc)^2:

    T_serial   = N (Cfac + (nx+1) Ccol)
    T_parallel = N/(J+1) (Cfac + (2nx+1) Ccol) + (2J+1)/3 nx^3

The parallel legs pay nx extra parameter columns per stage; the consensus
solve contributes the trailing cubic term.
"""

from __future__ import annotations

import csv
import io
import statistics
import time
from dataclasses import dataclass

from .outer import ProxLoopSettings, solve_inner
from .generator import generate
from .problem import ProximalState, kkt_residual

CSV_COLUMNS = [
    "backend",
    "N",
    "nx",
    "nu",
    "nc",
    "J",
    "workers",
    "mean_ms",
    "std_ms",
    "stat_resid",
    "feas_resid",
    "theory_speedup",
]


@dataclass
class SpeedupModel:
    """Backward-pass cost model; Cparam is the per-stage cost of ntheta = nx
    parameter columns."""

    nx: int
    Cfac: float
    Ccol: float
    Cparam: float

    @classmethod
    def from_dims(cls, nx: int, nu: int, nc: int) -> "SpeedupModel":
        m = nx + nu + nc
        return cls(nx=nx, Cfac=float(m**3), Ccol=float(m**2), Cparam=nx * float(m**2))

    def t_serial(self, N: int) -> float:
        return N * (self.Cfac + (self.nx + 1) * self.Ccol)

    def t_consensus(self, J: int) -> float:
        return (2 * J + 1) / 3.0 * self.nx**3

    def t_parallel(self, N: int, J: int) -> float:
        if J == 0:
            return self.t_serial(N) + self.t_consensus(0)
        per_stage = self.Cfac + (2 * self.nx + 1) * self.Ccol
        return N / (J + 1) * per_stage + self.t_consensus(J)

    def speedup(self, N: int, J: int) -> float:
        return self.t_serial(N) / self.t_parallel(N, J)


def bench(
    horizons: list[int],
    nx: int = 37,
    nu: int = 12,
    nc: int = 0,
    backends: list[str] = ("blocksparse",),
    legs: list[int] = (4,),
    workers: list[int] = (0,),
    repetitions: int = 40,
    mu: float = 1e-2,
    seed: int = 42,
) -> list[dict]:
    """Time backward-forward sweeps; one row per configuration.

    workers entries of 0 mean "match the leg count".  Every row carries the
    residuals of the timed solve so timings are never reported for wrong
    answers.
    """
    rows = []
    model = SpeedupModel.from_dims(nx, nu, nc)
    for N in horizons:
        problem = generate(seed + N, N, nx, nu, nc=nc)
        prox = ProximalState.zero(problem, mu)
        for backend in backends:
            if backend == "parallel":
                configs = [
                    (J, (J + 1 if w == 0 else w)) for J in legs for w in workers
                ]
            else:
                configs = [(0, 1)]
            for J, W in configs:
                if backend == "parallel" and J >= N:
                    continue
                settings = ProxLoopSettings(
                    mu=mu, backend=backend, legs=J or None, workers=W
                )
                solve_inner(problem, prox, settings)  # warm-up, excluded
                times = []
                sol = None
                for _ in range(repetitions):
                    t0 = time.perf_counter()
                    sol = solve_inner(problem, prox, settings)
                    times.append((time.perf_counter() - t0) * 1e3)
                stat, feas = kkt_residual(problem, prox, sol)
                rows.append(
                    {
                        "backend": backend,
                        "N": N,
                        "nx": nx,
                        "nu": nu,
                        "nc": nc,
                        "J": J,
                        "workers": W,
                        "mean_ms": statistics.fmean(times),
                        "std_ms": statistics.stdev(times) if len(times) > 1 else 0.0,
                        "stat_resid": stat,
                        "feas_resid": feas,
                        "theory_speedup": model.speedup(N, J) if J else 1.0,
                    }
                )
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS)
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row[k] for k in CSV_COLUMNS})
    return buf.getvalue()


def speedup_rows(
    nx: int, nu: int, nc: int, N: int, legs: list[int]
) -> list[dict]:
    model = SpeedupModel.from_dims(nx, nu, nc)
    return [
        {
            "J": J,
            "t_serial": model.t_serial(N),
            "t_parallel": model.t_parallel(N, J),
            "speedup": model.speedup(N, J),
        }
        for J in legs
    ]


def speedup_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["J", "t_serial", "t_parallel", "speedup"])
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()
