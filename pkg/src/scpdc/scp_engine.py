"""Outer iterations: SCP with DC constraints, its relaxed variant, and the
penalty-DCA baseline.

Per iteration, only the concave part of each constraint (and optionally of
the objective) is linearized at the current point, so the subproblem stays
a convex QCQP and full steps can always be taken.  Three drivers share
that machinery:

* ``solve_scp``   -- feasible-path method; every iterate after the first
  satisfies the original constraints (the subproblem feasible set is an
  inner approximation).
* ``solve_rscp``  -- slack-relaxed variant with an exact L1 penalty
  ``mu * sum(s)``; its subproblems are always feasible, which handles the
  inconsistent linearizations the feasible-path method chokes on.
* ``solve_dca``   -- classical baseline that folds the constraints into
  an L1 penalty first and linearizes the whole concave part; slow when
  the concave part is strongly convex, which is the comparison the bench
  suite draws.

Runtime monitors check, on every iteration, the descent inequality

    f(x_k) - f(x_{k+1}) >= 0.5 (rho_f + sum_i rho_u_i lam_i) ||dx_k||^2
                           + 0.5 sum_i rho_v_i lam_i ||dx_{k-1}||^2

(with f_mu in the relaxed case), the feasible-path bound
``g_i(x_{k+1}) <= -(rho_v_i / 2) ||dx_k||^2``, and at convergence the
fixed-point stationarity test: x is stationary iff re-solving the
subproblem built at x returns x.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .dc_model import (ConvexQuadratic, DCPair, DCProgram, SymMatrix,
                       ValidationError, eval_quadratic, grad_quadratic,
                       strong_convexity_param, validate_program)
from .inner_solver import (ConvexSubproblem, InnerSolution, InnerStatus,
                           inner_kkt_residual, solve_subproblem)

__all__ = [
    "SolveStatus",
    "SolverConfig",
    "IterationRecord",
    "SolveReport",
    "build_scp_subproblem",
    "solve_scp",
    "solve_rscp",
    "solve_dca",
    "kkt_fixed_point_residual",
    "check_descent",
    "project_onto_omega",
    "TRACE_COLUMNS",
]

log = logging.getLogger("scpdc.engine")

TRACE_COLUMNS = ("iter", "f", "f_mu", "error", "feasgap", "mu", "rho",
                 "descent_lhs", "descent_rhs", "inner_iters", "inner_status")


class SolveStatus(str, Enum):
    CONVERGED_STATIONARY = "converged_stationary"
    MAX_ITER = "max_iter"
    SUBPROBLEM_INFEASIBLE = "subproblem_infeasible"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass
class SolverConfig:
    eps: float = 1e-6
    max_iter: int = 100
    mu0: float = 0.1
    mu_update: str = "fixed"          # "fixed" | "geometric"
    mu_factor: float = 10.0
    mu_cap: float = 1e6
    rho_reg: float = 1e-3
    reg_trigger: str = "on_nondecrease"   # "always" | "on_nondecrease" | "never"
    monitor_descent: bool = True
    monitor_feasibility: bool = True
    inner_tol: float = 1e-8
    max_newton: int = 800

    def check(self, relaxed: bool) -> None:
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if relaxed and not self.mu0 > 0:
            raise ValueError("mu0 must be positive for relaxed / DCA runs")
        if self.rho_reg < 0:
            raise ValueError("rho_reg must be nonnegative")
        if self.mu_update not in ("fixed", "geometric"):
            raise ValueError("mu_update must be 'fixed' or 'geometric'")
        if self.reg_trigger not in ("always", "on_nondecrease", "never"):
            raise ValueError("bad reg_trigger %r" % (self.reg_trigger,))


@dataclass
class IterationRecord:
    k: int
    x: np.ndarray
    lam: np.ndarray
    s: np.ndarray
    f_val: float
    f_mu_val: float
    step_norm: float
    feasgap: float
    descent_lhs: float
    descent_rhs: float
    mu_used: float
    rho_used: float
    inner_iters: int = 0
    inner_status: str = ""


@dataclass
class SolveReport:
    status: SolveStatus
    iterations: list
    final_x: Optional[np.ndarray]
    final_lambda: Optional[np.ndarray]
    final_s: Optional[np.ndarray]
    kkt_fixed_point_residual: float
    wall_time: float
    iter_count: int
    algorithm: str
    eps: float
    monitor_violations: list = field(default_factory=list)
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status == SolveStatus.CONVERGED_STATIONARY

    def final_f(self) -> float:
        return self.iterations[-1].f_val if self.iterations else np.nan


# ---------------------------------------------------------------------------
# Subproblem construction.
# ---------------------------------------------------------------------------

def _linearized_constraint(c: DCPair, xk) -> ConvexQuadratic:
    """u(x) - [v(xk) + grad v(xk)'(x - xk)] as one convex quadratic."""
    gv = grad_quadratic(c.v, xk)
    q = c.u.q - gv
    r = c.u.r - eval_quadratic(c.v, xk) + float(gv @ xk)
    return ConvexQuadratic(c.u.Q, q, r)


def _program_objective(p: DCProgram, xk, dc_objective: bool) -> ConvexQuadratic:
    f1, f2 = p.objective.u, p.objective.v
    if not dc_objective:
        if not f2.is_zero:
            raise ValueError("objective has a nonzero concave part; "
                             "build with dc_objective=True")
        return f1
    gv = grad_quadratic(f2, xk)
    q = f1.q - gv
    r = f1.r - eval_quadratic(f2, xk) + float(gv @ xk)
    return ConvexQuadratic(f1.Q, q, r)


def build_scp_subproblem(p: DCProgram, xk, *, mu: Optional[float] = None,
                         rho: float = 0.0,
                         dc_objective: bool = False) -> ConvexSubproblem:
    """Convex subproblem at linearization point ``xk``.

    ``mu`` is None for the plain (feasible-path) subproblem; a positive
    value appends one slack per constraint, relaxes each row to
    ``... <= s_i``, and adds ``mu * sum(s)`` to the objective.  ``rho``
    adds the proximal term ``rho/2 ||x - xk||^2``.  Constants are kept, so
    objective values are comparable across iterations.
    """
    xk = np.asarray(xk, dtype=float)
    if xk.shape != (p.dim,):
        raise ValueError("xk has shape %r, expected (%d,)" % (xk.shape, p.dim))
    if mu is not None and not mu > 0:
        raise ValueError("mu must be positive for the relaxed subproblem")
    if mu is None and p.omega.violation(xk) > 1e-8:
        raise ValueError("plain subproblem needs xk in Omega "
                         "(violation %.3e)" % p.omega.violation(xk))

    n = p.dim
    m = p.m
    obj = _program_objective(p, xk, dc_objective)
    if rho:
        Qr = SymMatrix.from_lower(obj.Q.data + rho * np.eye(n))
        obj = ConvexQuadratic(Qr, obj.q - rho * xk, obj.r + 0.5 * rho * float(xk @ xk))

    qcs = [_linearized_constraint(c, xk) for c in p.constraints]

    om = p.omega
    if mu is None:
        return ConvexSubproblem(
            objective=obj, qcs=tuple(qcs),
            lin_ineq=(om.A, om.b) if om.A is not None else None,
            lin_eq=(om.E, om.d) if om.E is not None else None,
            lb=om.lb, ub=om.ub,
            constraint_origin=tuple(range(m)))

    # relaxed: variables (x, s), one slack per DC constraint.  The stored
    # objective is (f + mu * sum s) / max(1, mu) so large penalties do not
    # wreck the barrier scaling; multipliers are rescaled on readout.
    nt = n + m
    scale = max(1.0, mu)
    Qx = np.zeros((nt, nt))
    Qx[:n, :n] = obj.Q.data / scale
    q_obj = np.concatenate([obj.q / scale, np.full(m, mu / scale)])
    obj_ext = ConvexQuadratic(SymMatrix.from_lower(Qx), q_obj, obj.r / scale)
    qcs_ext = []
    for i, c in enumerate(qcs):
        Qc = np.zeros((nt, nt))
        Qc[:n, :n] = c.Q.data
        qc = np.zeros(nt)
        qc[:n] = c.q
        qc[n + i] = -1.0
        qcs_ext.append(ConvexQuadratic(SymMatrix.from_lower(Qc), qc, c.r))
    lin_ineq = None
    if om.A is not None:
        lin_ineq = (np.hstack([om.A, np.zeros((om.A.shape[0], m))]), om.b)
    lin_eq = None
    if om.E is not None:
        lin_eq = (np.hstack([om.E, np.zeros((om.E.shape[0], m))]), om.d)
    lb = np.concatenate([om.lb, np.zeros(m)])
    ub = np.concatenate([om.ub, np.full(m, np.inf)])
    return ConvexSubproblem(
        objective=obj_ext, qcs=tuple(qcs_ext), lin_ineq=lin_ineq,
        lin_eq=lin_eq, lb=lb, ub=ub,
        slack_index_range=range(n, n + m),
        constraint_origin=tuple(range(m)), objective_scale=scale)


# ---------------------------------------------------------------------------
# Shared helpers.
# ---------------------------------------------------------------------------

def _program_rhos(p: DCProgram):
    rho_f = (strong_convexity_param(p.objective.u)
             + strong_convexity_param(p.objective.v))
    rho_u = np.array([strong_convexity_param(c.u) for c in p.constraints])
    rho_v = np.array([strong_convexity_param(c.v) for c in p.constraints])
    return rho_f, rho_u, rho_v


def project_onto_omega(p: DCProgram, x0, cfg: SolverConfig) -> np.ndarray:
    """Euclidean projection of ``x0`` onto Omega (a convex QP)."""
    x0 = np.asarray(x0, dtype=float)
    om = p.omega
    obj = ConvexQuadratic(SymMatrix(2.0 * np.eye(p.dim)), -2.0 * x0,
                          float(x0 @ x0))
    sp = ConvexSubproblem(
        objective=obj,
        lin_ineq=(om.A, om.b) if om.A is not None else None,
        lin_eq=(om.E, om.d) if om.E is not None else None,
        lb=om.lb, ub=om.ub)
    sol = solve_subproblem(sp, inner_tol=cfg.inner_tol, max_newton=cfg.max_newton)
    if sol.status == InnerStatus.INFEASIBLE:
        raise ValidationError(["omega: set appears empty (projection infeasible)"])
    if sol.status == InnerStatus.NUMERICAL_FAILURE:
        raise RuntimeError("projection onto Omega failed: %s" % sol.message)
    return sol.z


def _prepare_x0(p: DCProgram, x0, cfg: SolverConfig) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (p.dim,):
        raise ValueError("x0 has shape %r, expected (%d,)" % (x0.shape, p.dim))
    if p.omega.violation(x0) > 1e-8:
        log.info("x0 outside Omega (violation %.2e); projecting",
                 p.omega.violation(x0))
        x0 = project_onto_omega(p, x0, cfg)
    return x0


def _validate(p: DCProgram) -> None:
    diags = validate_program(p)
    if diags:
        raise ValidationError(diags)


def _monitor_tol(f_prev: float) -> float:
    return 1e-6 * (1.0 + abs(f_prev))


def check_descent(prev: IterationRecord, curr: IterationRecord,
                  p: DCProgram):
    """Does the step into ``curr`` satisfy the descent inequality?

    Returns ``(ok, margin)`` with ``margin = lhs - rhs`` (so ``ok`` is
    ``margin >= -monitor_tol``).  Uses f_mu at the current penalty value
    when the run carries slacks; strong-convexity parameters come from the
    cached values on the program's quadratics, plus any proximal weight
    recorded for the step.
    """
    rho_f, rho_u, rho_v = _program_rhos(p)
    relaxed = curr.s.size > 0
    if relaxed:
        lhs = ((prev.f_val + curr.mu_used * float(prev.s.sum()))
               - (curr.f_val + curr.mu_used * float(curr.s.sum())))
    else:
        lhs = prev.f_val - curr.f_val
    rhs = 0.5 * (rho_f + curr.rho_used
                 + float(rho_u @ curr.lam)) * curr.step_norm ** 2
    rhs += 0.5 * float(rho_v @ curr.lam) * prev.step_norm ** 2
    margin = lhs - rhs
    return margin >= -_monitor_tol(prev.f_val), margin


def _descent_sides(p, rho_f, rho_u, rho_v, lam, step, prev_step, rho_used,
                   f_prev, f_curr):
    lhs = f_prev - f_curr
    rhs = 0.5 * (rho_f + rho_used + float(rho_u @ lam)) * step ** 2
    rhs += 0.5 * float(rho_v @ lam) * prev_step ** 2
    return lhs, rhs


def _run_monitors(p, cfg, rec: IterationRecord, f_prev: float,
                  violations: list, feasible_path: bool, rho_v) -> None:
    tol = _monitor_tol(f_prev)
    if cfg.monitor_descent and rec.descent_lhs - rec.descent_rhs < -tol:
        msg = ("descent violated at k=%d: lhs=%.6e rhs=%.6e"
               % (rec.k, rec.descent_lhs, rec.descent_rhs))
        violations.append(msg)
        log.warning(msg)
    if cfg.monitor_feasibility and feasible_path:
        gvals = p.g_values(rec.x)
        bound = 10.0 * cfg.inner_tol
        for i, gi in enumerate(gvals):
            limit = bound
            if rho_v[i] > 0:
                limit = -0.5 * rho_v[i] * rec.step_norm ** 2 + bound
            if gi > limit:
                msg = ("feasible-path bound violated at k=%d, %s: g=%.6e"
                       % (rec.k, p.label(i), gi))
                violations.append(msg)
                log.warning(msg)


def _subproblem_lambda(p: DCProgram, sp: ConvexSubproblem,
                       sol: InnerSolution) -> np.ndarray:
    lam = np.zeros(p.m)
    for j, i in enumerate(sp.constraint_origin):
        lam[i] += sol.lambda_qc[j] * sp.objective_scale
    return lam


def _omega_interior_point(p: DCProgram, cfg: SolverConfig):
    """A deep interior point of Omega, or None (thin or empty interior)."""
    from .inner_solver import phase1_point

    om = p.omega
    sp = ConvexSubproblem(
        objective=ConvexQuadratic.zero(p.dim),
        lin_ineq=(om.A, om.b) if om.A is not None else None,
        lin_eq=(om.E, om.d) if om.E is not None else None,
        lb=om.lb, ub=om.ub)
    return phase1_point(sp, inner_tol=cfg.inner_tol, max_newton=cfg.max_newton)


def _blend_inside(x_prev, anchor, theta=1e-3):
    """Pull x_prev a small step toward an interior anchor.

    Both points satisfy the affine rows, so the blend does too; convexity
    gives it a strict margin proportional to theta wherever the anchor has
    one.  Keeps warm starts off the barrier walls without a phase-1 run."""
    if anchor is None:
        return x_prev
    return (1.0 - theta) * x_prev + theta * anchor


def _relaxed_warm_start(sp: ConvexSubproblem, x_part) -> np.ndarray:
    """(x_part, s) with s one above each row's value at slack zero."""
    n = x_part.shape[0]
    m = len(sp.qcs)
    z = np.concatenate([x_part, np.zeros(m)])
    vals = np.array([eval_quadratic(c, z) for c in sp.qcs])
    s = np.maximum(vals, 0.0) + 1.0
    return np.concatenate([x_part, s])


# ---------------------------------------------------------------------------
# Algorithm drivers.
# ---------------------------------------------------------------------------

def _finalize(report: SolveReport, p, cfg, mu_for_check) -> SolveReport:
    if report.converged and report.final_x is not None:
        try:
            report.kkt_fixed_point_residual = kkt_fixed_point_residual(
                p, report.final_x, cfg, mu=mu_for_check)
        except Exception as exc:
            log.warning("fixed-point check failed: %s", exc)
            report.kkt_fixed_point_residual = np.inf
    return report


def solve_scp(p: DCProgram, x0, cfg: SolverConfig) -> SolveReport:
    """Feasible-path SCP iteration (stop when the step norm falls to eps).

    The reported ``iter_count`` follows the convention that the final
    confirming solve (the one whose step passes the stop test) is the
    stationarity check, not a productive iteration; a run that stops at
    its k-th solve reports k - 1 iterations.
    """
    cfg.check(relaxed=False)
    _validate(p)
    t0 = time.perf_counter()
    x = _prepare_x0(p, x0, cfg)
    dc_obj = not p.objective.v.is_zero
    rho_f, rho_u, rho_v = _program_rhos(p)
    records: list = []
    violations: list = []
    status = SolveStatus.MAX_ITER
    message = ""
    f_prev = p.f_value(x)
    prev_step = 0.0
    # the descent bound substitutes the previous point into the current
    # subproblem, which at k = 1 requires a DC-feasible x0
    x0_dc_feasible = p.feasgap(x) <= 10.0 * cfg.inner_tol

    for k in range(1, cfg.max_iter + 1):
        rho_used = cfg.rho_reg if cfg.reg_trigger == "always" else 0.0
        sp = build_scp_subproblem(p, x, rho=rho_used, dc_objective=dc_obj)
        sol = solve_subproblem(sp, warm_start=x, inner_tol=cfg.inner_tol,
                               max_newton=cfg.max_newton)
        if sol.status == InnerStatus.NUMERICAL_FAILURE:
            sol = solve_subproblem(sp, inner_tol=cfg.inner_tol,
                                   max_newton=cfg.max_newton)
        if sol.status == InnerStatus.INFEASIBLE:
            status = SolveStatus.SUBPROBLEM_INFEASIBLE
            message = ("linearized subproblem infeasible at k=%d; "
                       "use solve_rscp for a relaxed run" % k)
            log.warning(message)
            break
        if sol.status == InnerStatus.NUMERICAL_FAILURE:
            status = SolveStatus.NUMERICAL_FAILURE
            message = sol.message
            break
        x_new = sol.z
        inner_iters = sol.iterations
        f_new = p.f_value(x_new)
        if (cfg.reg_trigger == "on_nondecrease" and f_new >= f_prev
                and cfg.rho_reg > 0):
            rho_used = cfg.rho_reg
            sp = build_scp_subproblem(p, x, rho=rho_used, dc_objective=dc_obj)
            sol2 = solve_subproblem(sp, warm_start=x, inner_tol=cfg.inner_tol,
                                    max_newton=cfg.max_newton)
            if sol2.status in (InnerStatus.OPTIMAL, InnerStatus.MAX_ITER):
                sol = sol2
                x_new = sol.z
                f_new = p.f_value(x_new)
                inner_iters += sol2.iterations
        lam = _subproblem_lambda(p, sp, sol)
        step = float(np.linalg.norm(x_new - x))
        lhs, rhs = _descent_sides(p, rho_f, rho_u, rho_v, lam, step,
                                  prev_step, rho_used, f_prev, f_new)
        rec = IterationRecord(
            k=k, x=x_new, lam=lam, s=np.zeros(0), f_val=f_new, f_mu_val=f_new,
            step_norm=step, feasgap=p.feasgap(x_new), descent_lhs=lhs,
            descent_rhs=rhs, mu_used=0.0, rho_used=rho_used,
            inner_iters=inner_iters, inner_status=sol.status.value)
        records.append(rec)
        if k > 1 or x0_dc_feasible:
            _run_monitors(p, cfg, rec, f_prev, violations, True, rho_v)
        log.info("scp k=%d f=%.10g step=%.3e feasgap=%.2e", k, f_new, step,
                 rec.feasgap)
        x, f_prev, prev_step = x_new, f_new, step
        if step <= cfg.eps and sol.status == InnerStatus.OPTIMAL:
            status = SolveStatus.CONVERGED_STATIONARY
            break

    iter_count = len(records)
    if status == SolveStatus.CONVERGED_STATIONARY and iter_count > 0:
        iter_count -= 1
    report = SolveReport(
        status=status, iterations=records, final_x=x,
        final_lambda=records[-1].lam if records else None,
        final_s=np.zeros(0), kkt_fixed_point_residual=np.nan,
        wall_time=time.perf_counter() - t0, iter_count=iter_count,
        algorithm="scp", eps=cfg.eps, monitor_violations=violations,
        message=message)
    return _finalize(report, p, cfg, None)


def solve_rscp(p: DCProgram, x0, cfg: SolverConfig) -> SolveReport:
    """Relaxed SCP: slack variables plus an exact L1 penalty ``mu``.

    Stops when both the step norm and ``||s||`` fall below eps.  The
    subproblems are feasible for any point of Omega, so an infeasible
    status can only mean Omega itself is empty, which is reported as a
    configuration error rather than a solver status.
    """
    cfg.check(relaxed=True)
    _validate(p)
    t0 = time.perf_counter()
    x = _prepare_x0(p, x0, cfg)
    dc_obj = not p.objective.v.is_zero
    rho_f, rho_u, rho_v = _program_rhos(p)
    mu = cfg.mu0
    records: list = []
    violations: list = []
    status = SolveStatus.MAX_ITER
    message = ""
    f_prev = p.f_value(x)
    s_prev = np.maximum(p.g_values(x), 0.0)   # smallest feasible slack at x0
    prev_step = 0.0
    last_mu_raise = 0
    anchor = _omega_interior_point(p, cfg)

    for k in range(1, cfg.max_iter + 1):
        sp = build_scp_subproblem(p, x, mu=mu, dc_objective=dc_obj)
        warm = _relaxed_warm_start(sp, _blend_inside(x, anchor))
        sol = solve_subproblem(sp, warm_start=warm, inner_tol=cfg.inner_tol,
                               max_newton=cfg.max_newton)
        if sol.status == InnerStatus.NUMERICAL_FAILURE:
            sol = solve_subproblem(sp, inner_tol=cfg.inner_tol,
                                   max_newton=cfg.max_newton)
        if sol.status == InnerStatus.INFEASIBLE:
            raise ValidationError(
                ["omega: relaxed subproblem infeasible, the convex set "
                 "itself appears empty"])
        if sol.status == InnerStatus.NUMERICAL_FAILURE:
            status = SolveStatus.NUMERICAL_FAILURE
            message = sol.message
            break
        n = p.dim
        x_new = sol.z[:n]
        s_new = sol.z[n:]
        lam = _subproblem_lambda(p, sp, sol)
        step = float(np.linalg.norm(x_new - x))
        f_new = p.f_value(x_new)
        fmu_prev = f_prev + mu * float(s_prev.sum())
        fmu_new = f_new + mu * float(s_new.sum())
        lhs, rhs = _descent_sides(p, rho_f, rho_u, rho_v, lam, step,
                                  prev_step, 0.0, fmu_prev, fmu_new)
        rec = IterationRecord(
            k=k, x=x_new, lam=lam, s=s_new, f_val=f_new, f_mu_val=fmu_new,
            step_norm=step, feasgap=p.feasgap(x_new), descent_lhs=lhs,
            descent_rhs=rhs, mu_used=mu, rho_used=0.0,
            inner_iters=sol.iterations, inner_status=sol.status.value)
        records.append(rec)
        _run_monitors(p, cfg, rec, fmu_prev, violations, False, rho_v)
        s_norm = float(np.linalg.norm(s_new))
        log.info("rscp k=%d f=%.10g step=%.3e |s|=%.3e mu=%g", k, f_new,
                 step, s_norm, mu)
        stop = (step <= cfg.eps and s_norm <= cfg.eps
                and sol.status == InnerStatus.OPTIMAL)
        if not stop and cfg.mu_update == "geometric":
            # a raise jolts the iterate and transiently grows ||s||, so the
            # growth trigger honors a short cooldown (and a deadband: slack
            # jitter at roundoff scale must not escalate the penalty)
            settled = k - last_mu_raise >= 3
            grew = (k >= 2 and settled and s_norm > cfg.eps
                    and s_norm > float(np.linalg.norm(s_prev)))
            stalled = step <= cfg.eps and s_norm > cfg.eps
            if grew or stalled:
                new_mu = min(mu * cfg.mu_factor, cfg.mu_cap)
                if new_mu != mu:
                    log.info("rscp: raising mu %g -> %g at k=%d", mu, new_mu, k)
                    mu = new_mu
                    last_mu_raise = k
        x, f_prev, s_prev, prev_step = x_new, f_new, s_new, step
        if stop:
            status = SolveStatus.CONVERGED_STATIONARY
            break

    iter_count = len(records)
    if status == SolveStatus.CONVERGED_STATIONARY and iter_count > 0:
        iter_count -= 1
    report = SolveReport(
        status=status, iterations=records, final_x=x,
        final_lambda=records[-1].lam if records else None,
        final_s=s_prev, kkt_fixed_point_residual=np.nan,
        wall_time=time.perf_counter() - t0, iter_count=iter_count,
        algorithm="rscp", eps=cfg.eps, monitor_violations=violations,
        message=message)
    mu_check = mu
    if report.final_lambda is not None:
        mu_check = max(mu, float(np.abs(report.final_lambda).max(initial=0.0)) + 1.0)
    return _finalize(report, p, cfg, mu_check)


def _build_dca_subproblem(p: DCProgram, xk, mu: float) -> ConvexSubproblem:
    """Epigraph form of   min  f(x) + mu sum_i max(u_i, v_i)(x) - grad v_mu(xk)'x.

    Variables (x, t); rows u_i(x) - t_i <= 0 and v_i(x) - t_i <= 0 encode
    the max.  The linear term keeps the value of the true penalized
    objective at xk, so consecutive objective values are comparable.
    """
    n = p.dim
    m = p.m
    nt = n + m
    f1 = _program_objective(p, xk, dc_objective=not p.objective.v.is_zero)
    # gradient of v_mu = mu * sum v_i at xk, and its linearization constant
    gv = np.zeros(n)
    const = 0.0
    for c in p.constraints:
        gv += grad_quadratic(c.v, xk)
        const += eval_quadratic(c.v, xk)
    gv *= mu
    const *= mu
    scale = max(1.0, mu)
    Q = np.zeros((nt, nt))
    Q[:n, :n] = f1.Q.data / scale
    q = np.zeros(nt)
    q[:n] = (f1.q - gv) / scale
    q[n:] = mu / scale
    r = (f1.r - const + float(gv @ xk)) / scale
    obj = ConvexQuadratic(SymMatrix.from_lower(Q), q, r)

    qcs = []
    origin = []
    for i, c in enumerate(p.constraints):
        for part in (c.u, c.v):
            Qc = np.zeros((nt, nt))
            Qc[:n, :n] = part.Q.data
            qc = np.zeros(nt)
            qc[:n] = part.q
            qc[n + i] = -1.0
            qcs.append(ConvexQuadratic(SymMatrix.from_lower(Qc), qc, part.r))
            origin.append(i)

    om = p.omega
    lin_ineq = None
    if om.A is not None:
        lin_ineq = (np.hstack([om.A, np.zeros((om.A.shape[0], m))]), om.b)
    lin_eq = None
    if om.E is not None:
        lin_eq = (np.hstack([om.E, np.zeros((om.E.shape[0], m))]), om.d)
    lb = np.concatenate([om.lb, np.full(m, -np.inf)])
    ub = np.concatenate([om.ub, np.full(m, np.inf)])
    return ConvexSubproblem(objective=obj, qcs=tuple(qcs), lin_ineq=lin_ineq,
                            lin_eq=lin_eq, lb=lb, ub=ub,
                            slack_index_range=range(n, n + m),
                            constraint_origin=tuple(origin),
                            objective_scale=scale)


def _l1_penalty_value(p: DCProgram, x, mu: float) -> float:
    gvals = p.g_values(x)
    return p.f_value(x) + mu * float(np.maximum(gvals, 0.0).sum())


def solve_dca(p: DCProgram, x0, mu: float, cfg: SolverConfig) -> SolveReport:
    """Penalty-DCA baseline: DCA applied to f + mu ||[g]_+||_1 over Omega.

    ``mu`` stays fixed for the whole run.  The monitored quantity is the
    penalized objective, which DCA decreases monotonically; ``feasgap``
    exposes a penalty that was chosen below its exact threshold.
    """
    if not mu > 0:
        raise ValueError("mu must be positive for DCA")
    cfg.check(relaxed=True)
    _validate(p)
    t0 = time.perf_counter()
    x = _prepare_x0(p, x0, cfg)
    records: list = []
    violations: list = []
    status = SolveStatus.MAX_ITER
    message = ""
    phi_prev = _l1_penalty_value(p, x, mu)
    n = p.dim
    anchor = _omega_interior_point(p, cfg)

    for k in range(1, cfg.max_iter + 1):
        sp = _build_dca_subproblem(p, x, mu)
        xb = _blend_inside(x, anchor)
        tvals = np.array([max(eval_quadratic(c.u, xb), eval_quadratic(c.v, xb))
                          for c in p.constraints])
        warm = np.concatenate([xb, tvals + 1.0])
        sol = solve_subproblem(sp, warm_start=warm, inner_tol=cfg.inner_tol,
                               max_newton=cfg.max_newton)
        if sol.status == InnerStatus.NUMERICAL_FAILURE:
            sol = solve_subproblem(sp, inner_tol=cfg.inner_tol,
                                   max_newton=cfg.max_newton)
        if sol.status == InnerStatus.INFEASIBLE:
            raise ValidationError(["omega: DCA subproblem infeasible, the "
                                   "convex set itself appears empty"])
        if sol.status == InnerStatus.NUMERICAL_FAILURE:
            status = SolveStatus.NUMERICAL_FAILURE
            message = sol.message
            break
        x_new = sol.z[:n]
        lam = _subproblem_lambda(p, sp, sol)
        step = float(np.linalg.norm(x_new - x))
        phi_new = _l1_penalty_value(p, x_new, mu)
        rec = IterationRecord(
            k=k, x=x_new, lam=lam, s=np.zeros(0), f_val=p.f_value(x_new),
            f_mu_val=phi_new, step_norm=step, feasgap=p.feasgap(x_new),
            descent_lhs=phi_prev - phi_new, descent_rhs=0.0,
            mu_used=mu, rho_used=0.0, inner_iters=sol.iterations,
            inner_status=sol.status.value)
        records.append(rec)
        if cfg.monitor_descent and phi_new > phi_prev + _monitor_tol(phi_prev):
            msg = ("penalty objective increased at k=%d: %.6e -> %.6e"
                   % (k, phi_prev, phi_new))
            violations.append(msg)
            log.warning(msg)
        log.info("dca k=%d phi=%.10g step=%.3e feasgap=%.2e", k, phi_new,
                 step, rec.feasgap)
        x, phi_prev = x_new, phi_new
        if step <= cfg.eps and sol.status == InnerStatus.OPTIMAL:
            status = SolveStatus.CONVERGED_STATIONARY
            break

    iter_count = len(records)
    if status == SolveStatus.CONVERGED_STATIONARY and iter_count > 0:
        iter_count -= 1
    report = SolveReport(
        status=status, iterations=records, final_x=x,
        final_lambda=records[-1].lam if records else None,
        final_s=np.zeros(0), kkt_fixed_point_residual=np.nan,
        wall_time=time.perf_counter() - t0, iter_count=iter_count,
        algorithm="dca", eps=cfg.eps, monitor_violations=violations,
        message=message)
    return _finalize(report, p, cfg, mu)


# ---------------------------------------------------------------------------
# Stationarity certificate.
# ---------------------------------------------------------------------------

def _original_kkt_residual(p: DCProgram, sp: ConvexSubproblem,
                           sol: InnerSolution, x_hat) -> float:
    """One-problem KKT residual at the subproblem solution.

    At a fixed point the subproblem's optimality system coincides with the
    stationarity condition of the original program, so this recomputation
    doubles as the direct certificate; primal feasibility is measured
    against the original constraints.
    """
    res = inner_kkt_residual(sp, sol)
    gap = p.feasgap(x_hat)
    om_viol = p.omega.violation(x_hat)
    return max(res, gap, om_viol)


def kkt_fixed_point_residual(p: DCProgram, x, cfg: SolverConfig,
                             mu: Optional[float] = None) -> float:
    """Stationarity test: re-solve the subproblem built at ``x``.

    Returns the max of ``||x_hat - x||`` and the recomputed KKT residual
    of the solve (measured against the original constraint values).  A
    value below eps certifies ``x`` as a stationary point.  Falls back to
    the relaxed subproblem when the plain one is infeasible; ``mu`` forces
    the relaxed build outright.
    """
    x = np.asarray(x, dtype=float)
    if p.omega.violation(x) > 1e-6:
        raise ValueError("x violates Omega by %.3e" % p.omega.violation(x))
    dc_obj = not p.objective.v.is_zero

    sol = None
    sp = None
    if mu is None:
        if p.omega.violation(x) <= 1e-8:
            sp = build_scp_subproblem(p, x, dc_objective=dc_obj)
            sol = solve_subproblem(sp, warm_start=x, inner_tol=cfg.inner_tol,
                                   max_newton=cfg.max_newton)
            if sol.status in (InnerStatus.INFEASIBLE,
                              InnerStatus.NUMERICAL_FAILURE):
                sol = None
        if sol is None:
            mu = cfg.mu0
    if sol is None:
        sp = build_scp_subproblem(p, x, mu=mu, dc_objective=dc_obj)
        sol = solve_subproblem(sp, warm_start=_relaxed_warm_start(sp, x),
                               inner_tol=cfg.inner_tol,
                               max_newton=cfg.max_newton)
        if sol.status != InnerStatus.OPTIMAL:
            sol = solve_subproblem(sp, inner_tol=cfg.inner_tol,
                                   max_newton=cfg.max_newton)
        if sol.status in (InnerStatus.NUMERICAL_FAILURE, InnerStatus.INFEASIBLE):
            raise RuntimeError("relaxed inner solve failed: %s" % sol.message)
    x_hat = sol.z[:p.dim]
    fp = float(np.linalg.norm(x_hat - x))
    direct = _original_kkt_residual(p, sp, sol, x_hat)
    return max(fp, direct)
