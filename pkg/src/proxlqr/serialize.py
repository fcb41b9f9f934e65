"""Text interchange format for problems and solutions.

Canonical JSON: sorted keys, two-space indent, shortest round-trip float
representation.  write -> read -> write is byte-identical.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import ProblemFileError
from .problem import (
    InitMode,
    InitialCondition,
    LqProblem,
    Solution,
    StageData,
    TerminalData,
)

FORMAT_VERSION = 1


def _listify(a: np.ndarray):
    return np.asarray(a, dtype=float).tolist()


def problem_to_dict(problem: LqProblem, mu: float | None = None) -> dict:
    init = problem.init
    if init.mode == InitMode.FIXED:
        init_d = {"mode": "fixed", "x0": _listify(init.x0)}
    elif init.mode == InitMode.CONSTRAINED:
        init_d = {"mode": "constrained", "G": _listify(init.G), "g": _listify(init.g)}
    else:
        init_d = {"mode": "cyclic"}
    stages = []
    for st in problem.stages:
        d = {
            "Q": _listify(st.Q), "S": _listify(st.S), "R": _listify(st.R),
            "q": _listify(st.q), "r": _listify(st.r),
            "A": _listify(st.A), "B": _listify(st.B), "E": _listify(st.E),
            "f": _listify(st.f),
        }
        if st.nc:
            d.update(C=_listify(st.C), D=_listify(st.D), h=_listify(st.h))
        stages.append(d)
    term = {"Q": _listify(problem.terminal.Q), "q": _listify(problem.terminal.q)}
    if problem.terminal.nc:
        term.update(C=_listify(problem.terminal.C), h=_listify(problem.terminal.h))
    out = {
        "version": FORMAT_VERSION,
        "nx": problem.nx,
        "nu": problem.nu,
        "N": problem.N,
        "init": init_d,
        "stages": stages,
        "terminal": term,
    }
    if mu is not None:
        out["mu"] = mu
    return out


def _need(d: dict, key: str, where: str):
    if key not in d:
        raise ProblemFileError(f"missing key {key!r}", location=where)
    return d[key]


def problem_from_dict(data: dict) -> tuple[LqProblem, float | None]:
    if not isinstance(data, dict):
        raise ProblemFileError("top-level document must be an object")
    version = _need(data, "version", "$")
    if version != FORMAT_VERSION:
        raise ProblemFileError(f"unsupported version {version}", location="version")
    try:
        nx = int(_need(data, "nx", "$"))
        nu = int(_need(data, "nu", "$"))
        N = int(_need(data, "N", "$"))
    except (TypeError, ValueError) as exc:
        raise ProblemFileError(f"bad dimension field: {exc}", location="$") from exc
    raw_stages = _need(data, "stages", "$")
    if len(raw_stages) != N:
        raise ProblemFileError(
            f"expected {N} stage records, found {len(raw_stages)}", location="stages"
        )
    stages = []
    for t, rec in enumerate(raw_stages):
        where = f"stages[{t}]"
        try:
            stages.append(
                StageData(
                    Q=_need(rec, "Q", where), S=_need(rec, "S", where),
                    R=_need(rec, "R", where), q=_need(rec, "q", where),
                    r=_need(rec, "r", where), A=_need(rec, "A", where),
                    B=_need(rec, "B", where), E=_need(rec, "E", where),
                    f=_need(rec, "f", where),
                    C=rec.get("C"), D=rec.get("D"), h=rec.get("h"),
                )
            )
        except ProblemFileError:
            raise
        except Exception as exc:
            raise ProblemFileError(str(exc), location=where) from exc
    raw_term = _need(data, "terminal", "$")
    try:
        terminal = TerminalData(
            Q=_need(raw_term, "Q", "terminal"), q=_need(raw_term, "q", "terminal"),
            C=raw_term.get("C"), h=raw_term.get("h"),
        )
    except ProblemFileError:
        raise
    except Exception as exc:
        raise ProblemFileError(str(exc), location="terminal") from exc
    raw_init = _need(data, "init", "$")
    mode = _need(raw_init, "mode", "init")
    try:
        if mode == "fixed":
            init = InitialCondition.fixed(_need(raw_init, "x0", "init"))
        elif mode == "constrained":
            init = InitialCondition.constrained(
                _need(raw_init, "G", "init"), _need(raw_init, "g", "init")
            )
        elif mode == "cyclic":
            init = InitialCondition.cyclic()
        else:
            raise ProblemFileError(f"unknown init mode {mode!r}", location="init.mode")
    except ProblemFileError:
        raise
    except Exception as exc:
        raise ProblemFileError(str(exc), location="init") from exc
    try:
        problem = LqProblem(
            nx=nx, nu=nu, N=N, stages=stages, terminal=terminal, init=init
        )
    except Exception as exc:
        raise ProblemFileError(str(exc), location="$") from exc
    mu = data.get("mu")
    return problem, (float(mu) if mu is not None else None)


def dumps(data: dict) -> str:
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def save_problem(path: str, problem: LqProblem, mu: float | None = None) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(problem_to_dict(problem, mu)))


def load_problem(path: str) -> tuple[LqProblem, float | None]:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProblemFileError(f"invalid JSON: {exc}", location=path) from exc
    return problem_from_dict(data)


def solution_to_dict(sol: Solution) -> dict:
    out = {
        "x": [_listify(v) for v in sol.x],
        "u": [_listify(v) for v in sol.u],
        "lam": [_listify(v) for v in sol.lam],
        "nu": [_listify(v) for v in sol.nu],
        "theta": None if sol.theta is None else _listify(sol.theta),
    }
    return out


def solution_from_dict(data: dict) -> Solution:
    try:
        theta = data.get("theta")
        return Solution(
            x=[np.asarray(v, dtype=float) for v in _need(data, "x", "$")],
            u=[np.asarray(v, dtype=float) for v in _need(data, "u", "$")],
            lam=[np.asarray(v, dtype=float) for v in _need(data, "lam", "$")],
            nu=[np.asarray(v, dtype=float) for v in _need(data, "nu", "$")],
            theta=None if theta is None else np.asarray(theta, dtype=float),
        )
    except ProblemFileError:
        raise
    except Exception as exc:
        raise ProblemFileError(f"bad solution document: {exc}") from exc


def save_solution(path: str, sol: Solution) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(solution_to_dict(sol)))


def load_solution(path: str) -> Solution:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProblemFileError(f"invalid JSON: {exc}", location=path) from exc
    return solution_from_dict(data)
