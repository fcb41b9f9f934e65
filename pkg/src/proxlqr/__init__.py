"""Proximal equality-constrained LQ solver.

Serial generalized Riccati recursion (dense and block-sparse stage kernels),
a parametric extension with sensitivities and cyclic constraints, a parallel
leg-condensation backend with a block-tridiagonal consensus solve, a dense
KKT oracle, and an outer dual proximal-point loop recovering exact solutions.
"""

from .errors import (
    DimensionMismatch,
    IndefiniteRhat,
    InvalidLegCount,
    MaxItersExceeded,
    MuZeroWithConstraints,
    ProblemFileError,
    SingularCyclicKkt,
    SingularDiagonalBlock,
    SingularE,
    SingularInitKkt,
    SingularKkt,
    SingularStageKkt,
    SingularUpsilon,
    SolverError,
)
from .problem import (
    InitMode,
    InitialCondition,
    LqProblem,
    ProximalState,
    ShiftedRhs,
    Solution,
    StageData,
    TerminalData,
    kkt_residual,
    shift_rhs,
)
from .dense_kkt import DenseKkt, assemble, solve_dense
from .riccati import (
    CostToGo,
    ParamGains,
    StageGains,
    backward_pass,
    classic_riccati,
    forward_pass,
    solve_initial,
    solve_serial,
    stage_kernel_blocksparse,
    stage_kernel_dense,
    terminal_cost_to_go,
)
from .parametric import (
    ParametricStage,
    Sensitivities,
    ValueParams,
    cyclic_parametric_data,
    parametric_backward,
    parametric_forward,
    sensitivities,
    solve_cyclic,
    solve_initial_parametric,
    zero_parametric_data,
)
from .block_tridiag import BlockTridiag, BlockTridiagFactor, factor_udut
from .parallel import (
    LegValue,
    ParallelSolver,
    Partition,
    assemble_consensus,
    leg_backward,
    make_partition,
    solve_parallel,
)
from .outer import ProxLoopSettings, solve_exact, solve_inner
from .generator import generate, infeasible_toy, random_problem
from .bench import SpeedupModel, bench
from . import serialize

__version__ = "0.1.0"
