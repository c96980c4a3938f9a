"""Outer algorithms: subproblem construction, traces, monitors, certificates."""

import numpy as np
import pytest

from scpdc.dc_model import (ConvexQuadratic, ConvexSetOmega, DCPair,
                            DCProgram, SymMatrix, ValidationError,
                            eval_quadratic)
from scpdc.inner_solver import InnerStatus, solve_subproblem
from scpdc.problems import (build_mpcc, build_slow_dca_instance,
                            build_small_example, gen_random_mpcc,
                            gen_random_ncvqcqp)
from scpdc.scp_engine import (SolveStatus, SolverConfig,
                              build_scp_subproblem, check_descent,
                              kkt_fixed_point_residual, project_onto_omega,
                              solve_dca, solve_rscp, solve_scp)

XSTAR = np.array([2.0 * np.sqrt(2.0), -2.0])
FSTAR = -8.0 * np.sqrt(2.0) - 2.0


class TestBuildSubproblem:
    def test_case1_at_origin(self):
        """At x0 = (0,0) the Case-1 constraint linearizes to x1^2 - 4 <= 0."""
        p = build_small_example(1)
        sp = build_scp_subproblem(p, np.zeros(2))
        c = sp.qcs[0]
        np.testing.assert_allclose(c.Q.data, np.diag([2.0, 0.0]))
        np.testing.assert_allclose(c.q, 0.0)
        assert c.r == pytest.approx(-4.0)

    def test_case1_after_first_step(self):
        """At x1 = (2,-2) it becomes x1^2 + 4 x2 <= 0."""
        p = build_small_example(1)
        sp = build_scp_subproblem(p, np.array([2.0, -2.0]))
        c = sp.qcs[0]
        np.testing.assert_allclose(c.Q.data, np.diag([2.0, 0.0]))
        np.testing.assert_allclose(c.q, [0.0, 4.0])
        assert c.r == pytest.approx(0.0, abs=1e-14)

    def test_relaxed_with_zero_v_keeps_slack_at_zero(self):
        """With v = 0 and a feasible center the optimal slack is zero.

        mu = 2 keeps the slack multiplier strictly positive (the row
        multiplier is 1), so the slack is held at zero nondegenerately."""
        p = build_small_example(1)
        sp = build_scp_subproblem(p, np.zeros(2), mu=2.0)
        assert sp.slack_index_range == range(2, 3)
        sol = solve_subproblem(sp)
        assert sol.status == InnerStatus.OPTIMAL
        assert sol.z[2] <= 1e-7

    def test_regularized_adds_proximal_term(self):
        p = build_small_example(1)
        xk = np.array([1.0, -1.0])
        sp = build_scp_subproblem(p, xk, rho=2.0)
        # objective value at xk unchanged, curvature shifted by rho I
        assert eval_quadratic(sp.objective, xk) == pytest.approx(
            p.f_value(xk))
        np.testing.assert_allclose(sp.objective.Q.data, 2.0 * np.eye(2))

    def test_plain_requires_membership(self):
        p = build_small_example(1)
        with pytest.raises(ValueError):
            build_scp_subproblem(p, np.array([10.0, 10.0]))

    def test_relaxed_objective_scale_bookkeeping(self):
        p = build_small_example(1)
        sp = build_scp_subproblem(p, np.zeros(2), mu=1e4)
        assert sp.objective_scale == pytest.approx(1e4)
        # stored objective is the true one divided by the scale
        z = np.array([1.0, 1.0, 3.0])
        true_val = p.f_value(z[:2]) + 1e4 * z[2]
        assert eval_quadratic(sp.objective, z) * sp.objective_scale == \
            pytest.approx(true_val)


class TestSmallExample:
    def test_case1_two_iterations(self):
        p = build_small_example(1)
        rep = solve_scp(p, np.zeros(2), SolverConfig(eps=1e-5))
        assert rep.status == SolveStatus.CONVERGED_STATIONARY
        assert rep.iter_count == 2
        np.testing.assert_allclose(rep.final_x, XSTAR, atol=1e-6)
        assert rep.final_f() == pytest.approx(FSTAR, abs=1e-6)

    def test_case2_four_iterations(self):
        p = build_small_example(2)
        rep = solve_scp(p, np.zeros(2), SolverConfig(eps=1e-5))
        assert rep.status == SolveStatus.CONVERGED_STATIONARY
        assert rep.iter_count == 4
        np.testing.assert_allclose(rep.final_x, XSTAR, atol=1e-6)

    def test_case2_trace_matches_analytic_recursion(self):
        """The x2 path follows b' = 2b - sqrt(4 + 2 b^2)/sqrt(17) until the
        box clips it at -2."""
        p = build_small_example(2)
        rep = solve_scp(p, np.zeros(2), SolverConfig(eps=1e-5))
        b = 0.0
        for rec in rep.iterations[:2]:
            R = np.sqrt(4.0 + 2.0 * b * b)
            b_next = 2.0 * b - R / np.sqrt(17.0)
            np.testing.assert_allclose(rec.x[1], b_next, atol=1e-7)
            b = b_next

    def test_descent_margins_strict_for_strongly_convex_u(self):
        """Case 2 has rho_u = 2, so the descent bound is strictly positive."""
        p = build_small_example(2)
        rep = solve_scp(p, np.zeros(2), SolverConfig(eps=1e-5))
        for prev, curr in zip(rep.iterations, rep.iterations[1:]):
            ok, margin = check_descent(prev, curr, p)
            assert ok
            if curr.step_norm > 1e-8:
                assert curr.descent_rhs > 0

    def test_feasible_path(self):
        p = build_small_example(1)
        rep = solve_scp(p, np.zeros(2), SolverConfig(eps=1e-5))
        for rec in rep.iterations:
            assert p.feasgap(rec.x) <= 1e-7
        assert not rep.monitor_violations

    def test_fixed_point_residual_small_at_limit(self):
        p = build_small_example(1)
        rep = solve_scp(p, np.zeros(2), SolverConfig(eps=1e-5))
        assert rep.kkt_fixed_point_residual <= 1e-5


class TestRscp:
    def test_matches_scp_limit_with_large_mu(self):
        """With mu above the final multiplier the relaxed run has s = 0 and
        the same limit point."""
        p = build_small_example(1)
        scp_rep = solve_scp(p, np.zeros(2), SolverConfig(eps=1e-5))
        lam_max = float(np.abs(scp_rep.final_lambda).max())
        rep = solve_rscp(p, np.zeros(2), SolverConfig(eps=1e-5,
                                                      mu0=lam_max + 1.0))
        assert rep.status == SolveStatus.CONVERGED_STATIONARY
        np.testing.assert_allclose(rep.final_x, scp_rep.final_x, atol=1e-6)
        for rec in rep.iterations[1:]:
            assert np.linalg.norm(rec.s) <= 1e-7

    def test_mu_zero_rejected(self):
        p = build_small_example(1)
        with pytest.raises(ValueError):
            solve_rscp(p, np.zeros(2), SolverConfig(eps=1e-5, mu0=0.0))

    def test_below_threshold_mu_stalls_infeasible(self):
        """Fixed mu below the exact-penalty threshold leaves slack behind,
        visible as a positive feasgap.  (Multiplier at the solution is
        1/sqrt(2), so mu = 0.1 is below threshold.)"""
        p = build_small_example(1)
        rep = solve_rscp(p, np.zeros(2),
                         SolverConfig(eps=1e-5, mu0=0.1, max_iter=30))
        assert rep.status == SolveStatus.MAX_ITER
        assert rep.iterations[-1].feasgap > 1e-3

    def test_geometric_update_recovers(self):
        p = build_small_example(1)
        rep = solve_rscp(p, np.zeros(2),
                         SolverConfig(eps=1e-5, mu0=0.1,
                                      mu_update="geometric", max_iter=60))
        assert rep.status == SolveStatus.CONVERGED_STATIONARY
        np.testing.assert_allclose(rep.final_x, XSTAR, atol=1e-5)

    def test_f_mu_monotone_for_fixed_mu(self):
        p = gen_random_ncvqcqp(8, 3, seed=4)
        rep = solve_rscp(p, np.zeros(8), SolverConfig(eps=1e-6, mu0=0.1))
        fmu = [r.f_mu_val for r in rep.iterations]
        for a, b in zip(fmu, fmu[1:]):
            assert b <= a + 1e-6 * (1 + abs(a))

    def test_descent_holds_on_every_pair(self):
        p = gen_random_ncvqcqp(10, 5, seed=2)
        rep = solve_rscp(p, np.zeros(10), SolverConfig(eps=1e-6, mu0=0.1))
        assert not rep.monitor_violations
        for prev, curr in zip(rep.iterations, rep.iterations[1:]):
            ok, _ = check_descent(prev, curr, p)
            assert ok


class TestDca:
    def test_fixed_point_stays_put(self):
        """From an interior stationary point (penalty inactive) DCA stays."""
        n = 3
        c = np.array([0.3, -0.2, 0.1])
        f1 = ConvexQuadratic(SymMatrix(np.eye(n)), -c, 0.5 * float(c @ c))
        u = ConvexQuadratic(SymMatrix(2.0 * np.eye(n)), np.zeros(n), -4.0)
        v = ConvexQuadratic(SymMatrix(np.eye(n)), np.zeros(n), 0.0)
        p = DCProgram(dim=n, objective=DCPair(f1, ConvexQuadratic.zero(n)),
                      constraints=(DCPair(u, v),),
                      omega=ConvexSetOmega.box(np.full(n, -5.0),
                                               np.full(n, 5.0)))
        assert p.feasgap(c) == 0.0
        rep = solve_dca(p, c, mu=10.0, cfg=SolverConfig(eps=1e-6))
        assert rep.status == SolveStatus.CONVERGED_STATIONARY
        assert rep.iter_count <= 1
        np.testing.assert_allclose(rep.final_x, c, atol=1e-6)

    def test_slower_than_scp_on_strongly_convex_v(self):
        p = build_slow_dca_instance(3, seed=1)
        cfg = SolverConfig(eps=1e-5, max_iter=3000)
        scp_rep = solve_scp(p, np.zeros(3), cfg)
        dca_rep = solve_dca(p, np.zeros(3), mu=100.0, cfg=cfg)
        assert scp_rep.status == SolveStatus.CONVERGED_STATIONARY
        assert dca_rep.status == SolveStatus.CONVERGED_STATIONARY
        assert dca_rep.iter_count > scp_rep.iter_count
        # both reach a stationary point
        assert scp_rep.kkt_fixed_point_residual <= 1e-5
        assert dca_rep.kkt_fixed_point_residual <= 1e-5

    def test_penalty_objective_monotone(self):
        p = build_slow_dca_instance(4, seed=2)
        rep = solve_dca(p, np.zeros(4), mu=50.0,
                        cfg=SolverConfig(eps=1e-5, max_iter=2000))
        phis = [r.f_mu_val for r in rep.iterations]
        for a, b in zip(phis, phis[1:]):
            assert b <= a + 1e-9 * (1 + abs(a))

    def test_below_threshold_limit_is_infeasible(self):
        """1-D: min 0.5(x-3)^2 st x - 1 <= 0 (u = x-1, v = 0).

        Exact threshold is |f'(1)| = 2; with mu = 1 the penalized minimum
        is x = 2, reported with feasgap 1."""
        f1 = ConvexQuadratic(SymMatrix(np.eye(1)), np.array([-3.0]), 4.5)
        u = ConvexQuadratic(SymMatrix.zeros(1), np.array([1.0]), -1.0)
        p = DCProgram(dim=1, objective=DCPair(f1, ConvexQuadratic.zero(1)),
                      constraints=(DCPair(u, ConvexQuadratic.zero(1)),),
                      omega=ConvexSetOmega.box([-10.0], [10.0]))
        rep = solve_dca(p, np.zeros(1), mu=1.0, cfg=SolverConfig(eps=1e-7))
        assert rep.status == SolveStatus.CONVERGED_STATIONARY
        assert rep.final_x[0] == pytest.approx(2.0, abs=1e-6)
        assert rep.iterations[-1].feasgap == pytest.approx(1.0, abs=1e-6)

    def test_mu_must_be_positive(self):
        p = build_small_example(1)
        with pytest.raises(ValueError):
            solve_dca(p, np.zeros(2), mu=0.0, cfg=SolverConfig())


class TestFixedPointResidual:
    def test_at_solution(self):
        p = build_small_example(1)
        res = kkt_fixed_point_residual(p, XSTAR, SolverConfig())
        assert res <= 1e-6

    def test_at_origin_is_first_step_length(self):
        """P(x0) solves to (2,-2), so the residual is ||(2,-2)|| = 2 sqrt 2."""
        p = build_small_example(1)
        res = kkt_fixed_point_residual(p, np.zeros(2), SolverConfig())
        assert res == pytest.approx(2.0 * np.sqrt(2.0), abs=1e-4)

    def test_unconstrained_interior_minimum(self):
        """Convex instance with m = 0: the minimum is its own fixed point."""
        n = 4
        rng = np.random.default_rng(0)
        m = rng.normal(size=(n, n))
        Q = m.T @ m + np.eye(n)
        q = rng.normal(size=n)
        xstar = np.linalg.solve(Q, -q)
        p = DCProgram(
            dim=n,
            objective=DCPair(ConvexQuadratic(SymMatrix.from_lower(Q), q, 0.0),
                             ConvexQuadratic.zero(n)),
            constraints=(),
            omega=ConvexSetOmega.box(np.full(n, -10.0), np.full(n, 10.0)))
        res = kkt_fixed_point_residual(p, xstar, SolverConfig())
        assert res <= 1e-8

    def test_rejects_point_outside_omega(self):
        p = build_small_example(1)
        with pytest.raises(ValueError):
            kkt_fixed_point_residual(p, np.array([50.0, 0.0]), SolverConfig())


class TestCheckDescent:
    def test_zero_step_reduces_to_nonincrease(self):
        p = build_small_example(1)
        rep = solve_scp(p, np.zeros(2), SolverConfig(eps=1e-5))
        prev, curr = rep.iterations[-2], rep.iterations[-1]
        assert curr.step_norm <= 1e-10
        ok, margin = check_descent(prev, curr, p)
        assert ok

    def test_merely_convex_data_gives_zero_rhs(self):
        """Case 1 has all rho = 0: the bound reduces to nonincrease of f,
        plus the proximal term on re-solved iterations."""
        p = build_small_example(1)
        rep = solve_scp(p, np.zeros(2), SolverConfig(eps=1e-5))
        for rec in rep.iterations:
            expected = 0.5 * rec.rho_used * rec.step_norm ** 2
            assert rec.descent_rhs == pytest.approx(expected, abs=1e-12)
            assert rec.descent_lhs >= rec.descent_rhs - 1e-9


class TestSubproblemInfeasibleHandoff:
    def test_scp_reports_and_rscp_succeeds(self):
        """From a complementarity-violating start the plain linearization is
        inconsistent; the relaxed run drives the slack out."""
        d = gen_random_mpcc(2, 1, seed=3)
        prog, idx = build_mpcc(d)
        w0 = project_onto_omega(prog, np.ones(prog.dim), SolverConfig())
        x0, _, z0 = idx.split(w0)
        assert x0 @ z0 > 1e-3   # genuinely off the complementarity manifold
        rep = solve_scp(prog, w0, SolverConfig(eps=1e-5, max_iter=10))
        assert rep.status == SolveStatus.SUBPROBLEM_INFEASIBLE
        assert "solve_rscp" in rep.message
        rep2 = solve_rscp(prog, w0, SolverConfig(eps=1e-5, mu0=0.1,
                                                 mu_update="geometric",
                                                 max_iter=1000))
        assert rep2.status == SolveStatus.CONVERGED_STATIONARY
        assert float(np.linalg.norm(rep2.final_s)) <= 1e-6
        for rec in rep2.iterations:
            assert rec.inner_status in ("optimal", "max_iter")


class TestRegularization:
    def test_always_regularized_strict_decrease(self):
        p = gen_random_ncvqcqp(6, 2, seed=9)
        from scpdc.problems import find_dc_feasible_point
        x0 = find_dc_feasible_point(p)
        cfg = SolverConfig(eps=1e-6, reg_trigger="always", rho_reg=1e-3,
                           max_iter=40)
        rep = solve_scp(p, x0, cfg)
        for prev, curr in zip(rep.iterations, rep.iterations[1:]):
            if curr.step_norm > 1e-9:
                assert curr.f_val < prev.f_val
            assert curr.rho_used == pytest.approx(1e-3)

    def test_projection_of_outside_start(self):
        """x0 projects onto the (3,-2) box corner and the run proceeds."""
        p = build_small_example(1)
        rep = solve_scp(p, np.array([100.0, -100.0]), SolverConfig(eps=1e-5))
        assert rep.status == SolveStatus.CONVERGED_STATIONARY
        np.testing.assert_allclose(rep.final_x, XSTAR, atol=1e-5)

    def test_projection_other_corner_reaches_local_point(self):
        """From the (3, 2) corner the method settles on the mirrored local
        solution (2 sqrt 2, +2); local methods may not find the global one,
        but the limit must certify stationary."""
        p = build_small_example(1)
        rep = solve_scp(p, np.array([100.0, 100.0]), SolverConfig(eps=1e-5))
        assert rep.status == SolveStatus.CONVERGED_STATIONARY
        np.testing.assert_allclose(rep.final_x, [2.0 * np.sqrt(2.0), 2.0],
                                   atol=1e-5)
        assert rep.kkt_fixed_point_residual <= 1e-4


class TestValidationGate:
    def test_solver_rejects_invalid_program(self):
        u = ConvexQuadratic(SymMatrix(np.diag([1.0, -1.0])), np.zeros(2), 0.0)
        p = DCProgram(dim=2,
                      objective=DCPair(ConvexQuadratic.zero(2),
                                       ConvexQuadratic.zero(2)),
                      constraints=(DCPair(u, ConvexQuadratic.zero(2)),),
                      omega=ConvexSetOmega.box([-1, -1], [1, 1]))
        with pytest.raises(ValidationError):
            solve_scp(p, np.zeros(2), SolverConfig())
