import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from proxlqr import (
    DimensionMismatch,
    InitialCondition,
    LqProblem,
    ProximalState,
    Solution,
    StageData,
    TerminalData,
    kkt_residual,
    random_problem,
    shift_rhs,
    solve_dense,
)
from conftest import random_prox


def scalar_problem(init=None):
    stage = StageData(
        Q=[[1.0]], S=[[0.0]], R=[[1.0]], q=[0.0], r=[0.0],
        A=[[1.0]], B=[[1.0]], E=[[-1.0]], f=[0.0],
    )
    return LqProblem(
        nx=1, nu=1, N=1, stages=[stage],
        terminal=TerminalData(Q=[[1.0]], q=[0.0]),
        init=init or InitialCondition.fixed([1.0]),
    )


class TestShiftRhs:
    def test_scalar_g0_shift(self):
        p = scalar_problem(InitialCondition.constrained([[1.0]], [1.0]))
        prox = ProximalState(2.0, [np.array([3.0]), np.zeros(1)],
                             [np.zeros(0), np.zeros(0)])
        shifted = shift_rhs(p, prox)
        assert shifted.g0 == pytest.approx([7.0])

    def test_zero_shift_identity(self):
        p = random_problem(0, 4, 3, 2, nc=2, init="constrained")
        for mu in (1.0, 1e-3):
            shifted = shift_rhs(p, ProximalState.zero(p, mu))
            for t in range(p.N):
                np.testing.assert_array_equal(shifted.f[t], p.stages[t].f)
                np.testing.assert_array_equal(shifted.h[t], p.stages[t].h)
            np.testing.assert_array_equal(shifted.h[p.N], p.terminal.h)
            np.testing.assert_array_equal(shifted.g0, p.init.g)

    def test_matches_direct_formula(self):
        p = random_problem(7, 5, 3, 2, nc=1, init="constrained")
        prox = random_prox(p, 3, mu=0.37)
        shifted = shift_rhs(p, prox)
        for t in range(p.N):
            np.testing.assert_allclose(
                shifted.f[t], p.stages[t].f + 0.37 * prox.lam_e[t + 1], atol=0
            )
            np.testing.assert_allclose(
                shifted.h[t], p.stages[t].h + 0.37 * prox.nu_e[t], atol=0
            )
        np.testing.assert_allclose(
            shifted.h[p.N], p.terminal.h + 0.37 * prox.nu_e[p.N], atol=0
        )
        np.testing.assert_allclose(
            shifted.g0, p.init.g + 0.37 * prox.lam_e[0], atol=0
        )

    @given(scale=st.floats(-4.0, 4.0), mu=st.floats(1e-4, 10.0), seed=st.integers(0, 50))
    @settings(max_examples=20, deadline=None)
    def test_affine_in_multipliers(self, scale, mu, seed):
        p = random_problem(seed, 3, 2, 1, nc=1, init="constrained")
        prox = random_prox(p, seed + 1, mu)
        zero = ProximalState.zero(p, mu)
        scaled = ProximalState(mu, [scale * v for v in prox.lam_e],
                               [scale * v for v in prox.nu_e])
        base = shift_rhs(p, zero)
        one = shift_rhs(p, prox)
        two = shift_rhs(p, scaled)
        for a, b, c in zip(base.f + base.h, one.f + one.h, two.f + two.h):
            np.testing.assert_allclose(c - a, scale * (b - a), rtol=0, atol=1e-12)

    def test_dimension_error_names_stage_and_field(self):
        p = random_problem(1, 3, 2, 1, nc=1)
        prox = ProximalState.zero(p, 1.0)
        prox.nu_e[1] = np.zeros(5)
        with pytest.raises(DimensionMismatch) as err:
            shift_rhs(p, prox)
        assert err.value.stage == 1
        assert err.value.field == "nu_e"


class TestDataValidation:
    def test_asymmetric_q_warns_and_symmetrizes(self):
        Q = np.array([[1.0, 0.5], [0.2, 1.0]])
        with pytest.warns(UserWarning, match="asymmetric"):
            stage = StageData(
                Q=Q, S=np.zeros((2, 1)), R=[[1.0]], q=[0, 0], r=[0],
                A=np.eye(2), B=np.zeros((2, 1)), E=-np.eye(2), f=[0, 0],
            )
        np.testing.assert_array_equal(stage.Q, 0.5 * (Q + Q.T))

    def test_stage_count_mismatch(self):
        p = random_problem(0, 2, 2, 1)
        with pytest.raises(DimensionMismatch):
            LqProblem(nx=2, nu=1, N=3, stages=p.stages, terminal=p.terminal,
                      init=p.init)

    def test_nc_zero_stage_has_empty_blocks(self):
        p = random_problem(0, 2, 3, 2, nc=0)
        assert p.stages[0].C.shape == (0, 3)
        assert p.stages[0].D.shape == (0, 2)
        assert p.stages[0].h.shape == (0,)


class TestKktResidual:
    def test_zero_problem_zero_residual(self):
        z = np.zeros((1, 1))
        stage = StageData(Q=[[1.0]], S=z, R=[[1.0]], q=[0.0], r=[0.0],
                          A=[[0.3]], B=[[1.0]], E=[[-1.0]], f=[0.0])
        p = LqProblem(nx=1, nu=1, N=2, stages=[stage, stage],
                      terminal=TerminalData(Q=[[1.0]], q=[0.0]),
                      init=InitialCondition.fixed([0.0]))
        sol = Solution(x=[np.zeros(1)] * 3, u=[np.zeros(1)] * 2,
                       lam=[np.zeros(1)] * 3, nu=[np.zeros(0)] * 3)
        assert kkt_residual(p, None, sol) == (0.0, 0.0)

    @pytest.mark.parametrize("init", ["fixed", "constrained"])
    def test_exact_dense_solution_has_tiny_residual(self, init):
        p = random_problem(11, 6, 4, 2, nc=2, implicit_E=True, init=init)
        prox = random_prox(p, 5, mu=1e-2)
        sol = solve_dense(p, prox)
        stat, feas = kkt_residual(p, prox, sol)
        assert stat <= 1e-10
        assert feas <= 1e-10

    def test_perturbing_u_grows_stationarity(self):
        p = random_problem(13, 5, 3, 2, nc=0)
        prox = ProximalState.zero(p, 1e-2)
        sol = solve_dense(p, prox)
        delta = 1e-3
        t = 2
        # the u_t stationarity row has Hessian block R_t: a delta bump along
        # e_0 must grow the residual by at least |R e_0|_inf * delta
        grow = np.abs(p.stages[t].R[:, 0]).max() * delta
        sol.u[t] = sol.u[t] + delta * np.eye(p.nu)[0]
        stat, _ = kkt_residual(p, prox, sol)
        assert stat >= 0.9 * grow

    def test_residual_is_deterministic(self):
        p = random_problem(17, 4, 3, 2, nc=1)
        prox = random_prox(p, 2, mu=0.5)
        sol = solve_dense(p, prox)
        first = kkt_residual(p, prox, sol)
        second = kkt_residual(p, prox, sol)
        assert first == second
