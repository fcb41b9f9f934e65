"""Command-line front end.

Subcommands: solve, check, generate, bench, speedup-model.  Exit codes:
0 success, 1 solver failure, 2 usage or file-parse error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import serialize
from .bench import bench, rows_to_csv, speedup_csv, speedup_rows
from .errors import MaxItersExceeded, ProblemFileError, SolverError
from .generator import generate
from .outer import ProxLoopSettings, solve_exact, solve_inner
from .problem import ProximalState, kkt_residual

DEFAULT_MU = 1e-2


def _parse_legs_range(text: str) -> list[int]:
    """Accept '4', '1,2,4' or '1..12'."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",")]


def _add_solve(sub):
    p = sub.add_parser("solve", help="solve a problem file")
    p.add_argument("problem")
    p.add_argument("--backend", choices=["serial", "blocksparse", "parallel"],
                   default="blocksparse")
    p.add_argument("--legs", type=int, default=None, help="parallel leg count J")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--mu", type=float, default=None,
                   help="proximal parameter (overrides the file's value)")
    p.add_argument("--exact", action="store_true",
                   help="iterate the outer proximal loop to the exact solution")
    p.add_argument("--max-iters", type=int, default=50)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out", default=None, help="solution file (default: stdout)")


def _cmd_solve(args) -> int:
    problem, file_mu = serialize.load_problem(args.problem)
    mu = args.mu if args.mu is not None else (file_mu or DEFAULT_MU)
    settings = ProxLoopSettings(
        mu=mu,
        max_iters=args.max_iters,
        tol_stationarity=args.tol,
        tol_feasibility=args.tol,
        backend=args.backend,
        legs=args.legs,
        workers=args.workers,
    )
    if args.exact:
        sol, iters, history = solve_exact(problem, settings)
        stat, feas = history[-1]
        print(
            f"converged in {iters} outer iterations: "
            f"stationarity {stat:.3e}, feasibility {feas:.3e}",
            file=sys.stderr,
        )
    else:
        prox = ProximalState.zero(problem, mu)
        sol = solve_inner(problem, prox, settings)
        stat, feas = kkt_residual(problem, prox, sol)
        print(
            f"regularized solve (mu={mu:g}): "
            f"stationarity {stat:.3e}, feasibility {feas:.3e}",
            file=sys.stderr,
        )
    text = serialize.dumps(serialize.solution_to_dict(sol))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _add_check(sub):
    p = sub.add_parser("check", help="print KKT residuals of a solution file")
    p.add_argument("problem")
    p.add_argument("solution")
    p.add_argument("--mu", type=float, default=None,
                   help="also print regularized residuals at this mu")


def _cmd_check(args) -> int:
    problem, file_mu = serialize.load_problem(args.problem)
    sol = serialize.load_solution(args.solution)
    stat, feas = kkt_residual(problem, None, sol)
    print(f"stationarity {stat:.6e}")
    print(f"feasibility  {feas:.6e}")
    mu = args.mu if args.mu is not None else file_mu
    if mu is not None:
        prox = ProximalState.zero(problem, mu)
        rstat, rfeas = kkt_residual(problem, prox, sol)
        print(f"regularized (mu={mu:g}, zero estimates): "
              f"stationarity {rstat:.6e} feasibility {rfeas:.6e}")
    return 0


def _add_generate(sub):
    p = sub.add_parser("generate", help="write a deterministic synthetic problem")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--nx", type=int, required=True)
    p.add_argument("--nu", type=int, required=True)
    p.add_argument("--nc", type=int, default=0)
    p.add_argument("--nc-terminal", type=int, default=None)
    p.add_argument("--implicit-e", action="store_true",
                   help="E = -I + 0.1*random instead of -I")
    p.add_argument("--init", choices=["fixed", "constrained", "cyclic"],
                   default="fixed")
    p.add_argument("--mu", type=float, default=None, help="store mu in the file")
    p.add_argument("--out", default=None)


def _cmd_generate(args) -> int:
    problem = generate(
        args.seed, args.N, args.nx, args.nu, nc=args.nc,
        nc_terminal=args.nc_terminal, implicit_E=args.implicit_e, init=args.init,
    )
    text = serialize.dumps(serialize.problem_to_dict(problem, args.mu))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _add_bench(sub):
    p = sub.add_parser("bench", help="time backward-forward sweeps, emit CSV")
    p.add_argument("--horizons", default="16,32,64,128,256,512,1024,2048",
                   help="comma list of N values")
    p.add_argument("--nx", type=int, default=37)
    p.add_argument("--nu", type=int, default=12)
    p.add_argument("--nc", type=int, default=0)
    p.add_argument("--backends", default="blocksparse,parallel")
    p.add_argument("--legs", default="4", help="comma list or lo..hi")
    p.add_argument("--workers", default="0",
                   help="comma list; 0 means match the leg count")
    p.add_argument("--reps", type=int, default=40)
    p.add_argument("--mu", type=float, default=DEFAULT_MU)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--csv", default=None, help="output path (default: stdout)")


def _cmd_bench(args) -> int:
    rows = bench(
        horizons=[int(v) for v in args.horizons.split(",")],
        nx=args.nx,
        nu=args.nu,
        nc=args.nc,
        backends=args.backends.split(","),
        legs=_parse_legs_range(args.legs),
        workers=[int(v) for v in args.workers.split(",")],
        repetitions=args.reps,
        mu=args.mu,
        seed=args.seed,
    )
    text = rows_to_csv(rows)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _add_speedup(sub):
    p = sub.add_parser("speedup-model",
                       help="print the theoretical speedup curve as CSV")
    p.add_argument("--nx", type=int, default=37)
    p.add_argument("--nu", type=int, default=12)
    p.add_argument("--nc", type=int, default=0)
    p.add_argument("--N", type=int, default=80)
    p.add_argument("--legs", default="1..12")
    p.add_argument("--csv", default=None)


def _cmd_speedup(args) -> int:
    rows = speedup_rows(args.nx, args.nu, args.nc, args.N,
                        _parse_legs_range(args.legs))
    text = speedup_csv(rows)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


_COMMANDS = {
    "solve": _cmd_solve,
    "check": _cmd_check,
    "generate": _cmd_generate,
    "bench": _cmd_bench,
    "speedup-model": _cmd_speedup,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proxlqr",
        description="proximal equality-constrained LQ solver",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_solve(sub)
    _add_check(sub)
    _add_generate(sub)
    _add_bench(sub)
    _add_speedup(sub)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ProblemFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MaxItersExceeded as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
