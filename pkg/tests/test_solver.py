import math

import numpy as np
import pytest

from ccpb.errors import NewtonDiverged, NonFiniteState, OutOfDomain
from ccpb.mesh import GeometricSpec, UniformSpec, build_mesh
from ccpb.model import p0, validate_params
from ccpb.solver import (
    SolverOptions,
    assemble_system,
    default_ladder,
    evaluate_solution,
    robin_transform,
    solve_continuation,
    solve_newton,
)


class TestAssembleSystem:
    def test_zero_state_p0(self):
        params = p0(0.1)
        mesh = build_mesh(params, UniformSpec(8))
        asm = assemble_system(params, mesh, np.zeros(9))
        assert asm.I_p == pytest.approx(0.5, abs=1e-15)
        assert asm.I_q == pytest.approx(0.5, abs=1e-15)
        # source = (R^N/N)(1/0.5 - 2/0.5) = -1, so F_i = +W_i in the interior;
        # the boundary cell also carries the prescribed flux eps^2 V_R = -0.5
        W = mesh.w_radial
        assert asm.residual[:-1] == pytest.approx(W[:-1], abs=1e-15)
        assert asm.residual[-1] == pytest.approx(-0.5 + W[-1], abs=1e-15)
        assert asm.boundary_flux * params.eps**2 == pytest.approx(-0.5)

    def test_shift_invariance(self):
        params = p0(0.1)
        mesh = build_mesh(params, UniformSpec(16))
        U = np.sin(mesh.nodes)
        base = assemble_system(params, mesh, U)
        for c in (-3.0, 0.7, 25.0):
            shifted = assemble_system(params, mesh, U + c)
            assert np.max(np.abs(shifted.source - base.source)) <= 1e-12 * np.max(np.abs(base.source))

    def test_charge_balance_is_exact(self):
        params = p0(0.05)
        mesh = build_mesh(params)
        asm = assemble_system(params, mesh, np.cos(5 * mesh.nodes))
        # interior fluxes telescope and the source integrates to the boundary flux
        assert abs(asm.residual.sum()) <= 1e-12

    def test_jacobian_matches_finite_differences(self):
        params = p0(0.3)
        mesh = build_mesh(params, UniformSpec(8))
        U = 0.4 * np.cos(2 * mesh.nodes) - 0.2 * mesh.nodes**2
        J = assemble_system(params, mesh, U).jacobian.dense()[:-1, :-1]
        h = 1e-7
        fd = np.empty_like(J)
        for j in range(U.size):
            e = np.zeros_like(U)
            e[j] = h
            fd[:, j] = (assemble_system(params, mesh, U + e).residual - assemble_system(params, mesh, U - e).residual) / (2 * h)
        assert np.max(np.abs(fd - J)) < 1e-6

    def test_overflow_is_reported(self):
        params = p0(0.1)
        mesh = build_mesh(params, UniformSpec(4))
        with pytest.raises(NonFiniteState):
            assemble_system(params, mesh, np.array([0, 0, 0, 0, np.inf]))


class TestSolveNewton:
    def test_equal_concentrations_trivial(self):
        params = p0(0.05, B=1.0)
        sol = solve_newton(params, build_mesh(params))
        assert np.max(np.abs(sol.U)) <= 10 * SolverOptions().tol
        assert sol.iterations == 0

    def test_p0_profile(self, p0_eps01):
        sol = p0_eps01
        assert np.all(np.diff(sol.U) <= 0)
        assert 0 < sol.U0 <= math.log(2)
        assert sol.residual <= 1e-10

    def test_invariants(self, p0_eps01):
        sol = p0_eps01
        tol = SolverOptions().tol
        W = sol.mesh.w_radial
        assert abs(W @ sol.U) <= 10 * tol
        assert np.min(sol.rho) >= -10 * tol
        # total charge equals the surface flux R^N (B - A) / N
        assert abs(W @ sol.rho - 0.5) <= 10 * tol
        assert np.all(np.diff(sol.flux) <= 1e-12)
        assert 1 <= sol.I_p / 0.5 <= 2 and 1 <= sol.I_q / 0.5 <= 2

    def test_dense_path_agrees(self):
        params = p0(0.1)
        mesh = build_mesh(params, UniformSpec(64))
        a = solve_newton(params, mesh, opts=SolverOptions(linear_solver="woodbury"))
        b = solve_newton(params, mesh, opts=SolverOptions(linear_solver="dense"))
        assert np.max(np.abs(a.U - b.U)) <= 10 * SolverOptions().tol

    def test_iteration_cap(self):
        params = p0(0.02)
        with pytest.raises(NewtonDiverged) as info:
            solve_newton(params, build_mesh(params), opts=SolverOptions(max_iter=1))
        assert info.value.eps == 0.02

    @pytest.mark.parametrize("A,B,p,q,N", [(2, 1, 1, 1, 2), (1, 3, 0.5, 2, 3), (0.9, 1, 2, 0.5, 2)])
    def test_other_parameter_sets(self, A, B, p, q, N):
        params = validate_params(dict(A=A, B=B, p=p, q=q, eps=0.1, N=N))
        sol = solve_continuation(params, [0.5, 0.3, 0.2, 0.14, 0.1])[-1]
        d = np.diff(sol.U)
        assert np.all(d <= 0) if A < B else np.all(d >= 0)
        assert sol.eps**2 * sol.dU_nodes()[-1] == pytest.approx(params.R * (A - B) / (N * params.gR))

    def test_polynomial_dielectric(self):
        params = validate_params(
            dict(A=1, B=2, p=1, q=1, eps=0.1, dielectric={"kind": "polynomial", "coefficients": [1.0, 0.5]})
        )
        sol = solve_continuation(params, default_ladder(0.5, 6))[-1]
        assert np.all(np.diff(sol.U) <= 0)
        assert sol.residual < 1e-10


class TestContinuation:
    def test_short_ladder(self):
        sols = solve_continuation(p0(), [0.5, 0.35, 0.25])
        assert [s.eps for s in sols] == [0.5, 0.35, 0.25]
        assert all(s.iterations <= 25 for s in sols)
        assert sols[-1].path == (0.5, 0.35, 0.25)

    def test_single_rung_equals_newton(self):
        params = p0(0.3)
        a = solve_continuation(params, [0.3])[0]
        b = solve_newton(params, build_mesh(params))
        assert np.array_equal(a.U, b.U)

    def test_layer_seed_converges(self):
        sols = solve_continuation(p0(), [0.05], seed="layer")
        zero = solve_continuation(p0(), [0.05])
        assert np.max(np.abs(sols[0].U - zero[0].U)) < 1e-8

    def test_ladder_must_decrease(self):
        with pytest.raises(ValueError):
            solve_continuation(p0(), [0.1, 0.2])

    def test_default_ladder(self):
        assert default_ladder(0.5, 3) == pytest.approx([0.5, 0.5 * 2**-0.5, 0.25])

    def test_boundary_value_trend(self, p0_ladder_solutions):
        xi = [s.UR + 2 * math.log(1 / e) for e, s in sorted(p0_ladder_solutions.items(), reverse=True)]
        gaps = [abs(x - math.log(8)) for x in xi]
        assert all(b < a for a, b in zip(gaps, gaps[1:]))


class TestRobinAndEvaluation:
    def test_robin_zero_eta(self, p0_eps01):
        rob = robin_transform(p0_eps01, 0.0)
        assert rob.UR == 0.0
        assert np.allclose(rob.U, p0_eps01.U - p0_eps01.UR, atol=1e-14)
        assert rob.gauge == "robin"

    def test_robin_eta_eps_squared(self, p0_eps01):
        rob = robin_transform(p0_eps01, 0.01)
        assert abs(rob.UR - 0.5) <= 1e-12
        r = np.linspace(0, 1, 50)
        assert np.allclose(evaluate_solution(rob, r)[1], evaluate_solution(p0_eps01, r)[1])
        # non-local integrals follow the shift, so rho is unchanged
        assert np.allclose(rob.rho, p0_eps01.rho, rtol=1e-10)

    def test_evaluate_endpoints(self, p0_eps01):
        U0, dU0, rho0 = evaluate_solution(p0_eps01, 0.0)
        assert dU0 == 0.0
        assert U0 == p0_eps01.U0
        _, dUR, _ = evaluate_solution(p0_eps01, 1.0)
        assert 0.01 * dUR == pytest.approx(-0.5, rel=1e-12)

    def test_rho_nonnegative(self, p0_eps01):
        _, _, rho = evaluate_solution(p0_eps01, np.linspace(0, 1, 400))
        assert np.min(rho) >= -1e-9

    def test_out_of_domain(self, p0_eps01):
        with pytest.raises(OutOfDomain):
            evaluate_solution(p0_eps01, 1.5)

    def test_summary_fields(self, p0_eps01):
        s = p0_eps01.summary()
        assert set(s) >= {"I_p", "I_q", "U0", "UR", "iterations", "residual"}
