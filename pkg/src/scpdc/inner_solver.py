"""Convex QCQP inner solver: primal log-barrier with Newton centering.

Solves

    minimize    0.5 z'Q0 z + q0'z + r0
    subject to  c_i(z) = 0.5 z'Qi z + qi'z + ri <= 0     (PSD Qi)
                A z <= b,   E z = d,   lb <= z <= ub

which covers every subproblem the outer algorithms produce.  Equality
constraints are eliminated onto their null space (an orthonormal basis
from an SVD of E); if the equality block is severely ill-conditioned the
solver falls back to stepping on the full KKT system instead.

The barrier loop uses t <- 10 t from t = 1, Newton centering with
backtracking (alpha = 0.25, beta = 0.5), and stops once the duality-gap
bound m/t and the Newton decrement are both below ``inner_tol / 2``.
Constraint multipliers are read off the central point as
``lambda_i = 1 / (t * (-c_i(z)))``.  Every "optimal" result is
re-certified by an independent KKT recomputation before it is reported.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import _kernels
from .dc_model import ConvexQuadratic

__all__ = [
    "InnerStatus",
    "ConvexSubproblem",
    "LinMultipliers",
    "InnerSolution",
    "solve_subproblem",
    "phase1_point",
    "inner_kkt_residual",
]

log = logging.getLogger("scpdc.inner")

DEFAULT_INNER_TOL = 1e-8
DEFAULT_MAX_NEWTON = 800

_ALPHA = 0.25          # Armijo fraction
_BETA = 0.5            # backtracking factor
_T_FACTOR = 10.0       # barrier parameter growth
_REG_LADDER = (0.0, 1e-10, 1e-8, 1e-6)   # Newton regularization retries
_EQ_COND_LIMIT = 1e12  # switch from null-space elimination to KKT steps
_PHASE1_MARGIN = 1e-3  # strict-feasibility depth phase 1 aims for; points
                       # this deep keep the first centering from crawling
                       # along a barrier wall (thin sets still succeed via
                       # the run-to-completion fallback)


class InnerStatus(str, Enum):
    OPTIMAL = "optimal"
    MAX_ITER = "max_iter"
    INFEASIBLE = "infeasible"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class ConvexSubproblem:
    """One convex QCQP instance, possibly with appended slack variables.

    ``objective_scale`` records a positive factor the true objective was
    divided by before storage (used to keep huge-penalty subproblems well
    scaled); multipliers of the stored problem times this factor recover
    the multipliers of the unscaled one.  The minimizer is unaffected.
    """

    objective: ConvexQuadratic
    qcs: tuple = ()
    lin_ineq: Optional[tuple] = None   # (A, b)
    lin_eq: Optional[tuple] = None     # (E, d)
    lb: Optional[np.ndarray] = None
    ub: Optional[np.ndarray] = None
    slack_index_range: range = range(0)
    constraint_origin: tuple = ()
    objective_scale: float = 1.0

    def __post_init__(self):
        n = self.objective.dim
        lb = np.full(n, -np.inf) if self.lb is None else np.array(self.lb, dtype=float)
        ub = np.full(n, np.inf) if self.ub is None else np.array(self.ub, dtype=float)
        lb.setflags(write=False)
        ub.setflags(write=False)
        object.__setattr__(self, "lb", lb)
        object.__setattr__(self, "ub", ub)
        object.__setattr__(self, "qcs", tuple(self.qcs))
        object.__setattr__(self, "constraint_origin", tuple(self.constraint_origin))

    @property
    def dim_total(self) -> int:
        return self.objective.dim

    def validate(self) -> None:
        n = self.dim_total
        if self.lb.shape != (n,) or self.ub.shape != (n,):
            raise ValueError("box bounds have wrong length")
        if np.any(self.lb > self.ub):
            raise ValueError("empty box: lb > ub")
        for i, c in enumerate(self.qcs):
            if c.dim != n:
                raise ValueError("qcs[%d] has dim %d, expected %d" % (i, c.dim, n))
        for name, pair in (("lin_ineq", self.lin_ineq), ("lin_eq", self.lin_eq)):
            if pair is not None:
                M, v = pair
                if M.ndim != 2 or M.shape[1] != n or M.shape[0] != v.shape[0]:
                    raise ValueError("%s has inconsistent shape" % name)
                if not (np.isfinite(M).all() and np.isfinite(v).all()):
                    raise ValueError("%s has non-finite entries" % name)
        if self.constraint_origin and len(self.constraint_origin) != len(self.qcs):
            raise ValueError("constraint_origin length mismatch")


@dataclass
class LinMultipliers:
    """Multipliers for the affine parts: A-rows, E-rows, and box edges."""

    ineq: np.ndarray
    eq: np.ndarray
    box_lo: np.ndarray
    box_up: np.ndarray


@dataclass
class InnerSolution:
    z: np.ndarray
    lambda_qc: np.ndarray
    mult_lin: LinMultipliers
    status: InnerStatus
    kkt_residual: float
    iterations: int
    stage_objectives: tuple = ()
    message: str = ""


class _Budget:
    def __init__(self, total):
        self.left = int(total)

    def spend(self, k=1):
        self.left -= k

    @property
    def exhausted(self):
        return self.left <= 0


class _Barrier:
    """Workspace for one subproblem; holds flattened arrays and the
    equality-elimination data.  Not reusable across concurrent solves."""

    def __init__(self, sp: ConvexSubproblem, inner_tol: float):
        n = sp.dim_total
        self.n = n
        self.tol = inner_tol
        self.Q0 = sp.objective.Q.data
        self.q0 = sp.objective.q
        self.r0 = sp.objective.r

        mq = len(sp.qcs)
        if mq:
            self.Qs = np.ascontiguousarray(np.stack([c.Q.data for c in sp.qcs]))
            self.qls = np.ascontiguousarray(np.stack([c.q for c in sp.qcs]))
            self.rcs = np.array([c.r for c in sp.qcs])
        else:
            self.Qs = np.zeros((0, n, n))
            self.qls = np.zeros((0, n))
            self.rcs = np.zeros(0)
        self.mq = mq

        if sp.lin_ineq is not None:
            self.A = np.asarray(sp.lin_ineq[0], dtype=float)
            self.b = np.asarray(sp.lin_ineq[1], dtype=float)
        else:
            self.A = np.zeros((0, n))
            self.b = np.zeros(0)

        self.lb = sp.lb.copy()
        self.ub = sp.ub.copy()
        degenerate = (np.isfinite(self.lb) & np.isfinite(self.ub)
                      & (self.lb == self.ub))
        self.degenerate = degenerate
        self.flo = np.isfinite(self.lb) & ~degenerate
        self.fup = np.isfinite(self.ub) & ~degenerate

        if sp.lin_eq is not None:
            E = np.asarray(sp.lin_eq[0], dtype=float)
            d = np.asarray(sp.lin_eq[1], dtype=float)
        else:
            E = np.zeros((0, n))
            d = np.zeros(0)
        self.me_orig = E.shape[0]
        if degenerate.any():
            rows = np.eye(n)[degenerate]
            E = np.vstack([E, rows])
            d = np.concatenate([d, self.lb[degenerate]])
        self.E = E
        self.d = d

        self.m_bar = (self.mq + self.A.shape[0]
                      + int(self.flo.sum()) + int(self.fup.sum()))

        # magnitude of the problem data; the KKT certificate can only be
        # driven to roundoff relative to this
        self.data_scale = 1.0
        for arr in (self.Q0, self.q0, self.Qs, self.qls, self.rcs,
                    self.A, self.b):
            if arr.size:
                self.data_scale = max(self.data_scale,
                                      float(np.abs(arr).max()))

        self.eq_inconsistent = False
        self.kkt_mode = False
        if E.shape[0]:
            U, S, Vt = np.linalg.svd(E, full_matrices=True)
            cutoff = (S[0] if S.size else 0.0) * max(E.shape) * np.finfo(float).eps
            rank = int((S > cutoff).sum())
            self.z_part = np.linalg.lstsq(E, d, rcond=None)[0]
            scale = 1.0 + float(np.abs(d).max(initial=0.0))
            if np.abs(E @ self.z_part - d).max(initial=0.0) > 1e-9 * scale:
                self.eq_inconsistent = True
            self.N = Vt[rank:].T            # orthonormal null-space basis
            cond = S[0] / S[rank - 1] if rank else 1.0
            if cond > _EQ_COND_LIMIT:
                self.kkt_mode = True
        else:
            self.z_part = np.zeros(n)
            self.N = None

    # -- evaluation -------------------------------------------------------

    def objective_value(self, z):
        return float(0.5 * z @ (self.Q0 @ z) + self.q0 @ z + self.r0)

    def slacks(self, z):
        """All positive-margin quantities the barrier takes logs of."""
        cvals, cgrads = _kernels.qc_eval(self.Qs, self.qls, self.rcs, z)
        rA = self.b - self.A @ z if self.A.shape[0] else np.zeros(0)
        slo = (z - self.lb)[self.flo]
        sup = (self.ub - z)[self.fup]
        return cvals, cgrads, rA, slo, sup

    def max_violation(self, z) -> float:
        """Largest inequality violation at ``z`` (-inf when no inequalities)."""
        worst = -np.inf
        cvals, _, rA, slo, sup = self.slacks(z)
        if cvals.size:
            worst = max(worst, float(cvals.max()))
        if rA.size:
            worst = max(worst, float((-rA).max()))
        if slo.size:
            worst = max(worst, float((-slo).max()))
        if sup.size:
            worst = max(worst, float((-sup).max()))
        return worst

    def in_domain(self, z) -> bool:
        cvals, _, rA, slo, sup = self.slacks(z)
        return (np.all(cvals < 0.0) and np.all(rA > 0.0)
                and np.all(slo > 0.0) and np.all(sup > 0.0))

    def barrier_value(self, z, t):
        cvals, _, rA, slo, sup = self.slacks(z)
        if (np.any(cvals >= 0.0) or np.any(rA <= 0.0)
                or np.any(slo <= 0.0) or np.any(sup <= 0.0)):
            return np.inf
        val = t * self.objective_value(z)
        if cvals.size:
            val -= float(np.log(-cvals).sum())
        if rA.size:
            val -= float(np.log(rA).sum())
        if slo.size:
            val -= float(np.log(slo).sum())
        if sup.size:
            val -= float(np.log(sup).sum())
        return val

    def grad_hess(self, z, t):
        cvals, cgrads, rA, slo, sup = self.slacks(z)
        g = t * (self.Q0 @ z + self.q0)
        H = t * self.Q0.copy()
        if self.mq:
            w_lin = 1.0 / (-cvals)
            g += cgrads.T @ w_lin
            _kernels.qc_hess_accum(self.Qs, cgrads, w_lin, w_lin * w_lin, H)
        if rA.size:
            inv = 1.0 / rA
            g += self.A.T @ inv
            H += self.A.T @ (self.A * (inv * inv)[:, None])
        diag = np.zeros(self.n)
        if slo.size:
            inv = 1.0 / slo
            g[self.flo] -= inv
            diag[self.flo] += inv * inv
        if sup.size:
            inv = 1.0 / sup
            g[self.fup] += inv
            diag[self.fup] += inv * inv
        H[np.diag_indices(self.n)] += diag
        return g, H

    # -- Newton machinery -------------------------------------------------

    def _reduced_step(self, g, H):
        """Newton step in the eliminated space.  Returns (dz, dec2) or None."""
        if self.N is not None and not self.kkt_mode:
            gr = self.N.T @ g
            Hr = self.N.T @ H @ self.N
        else:
            gr = g
            Hr = H
        if gr.size == 0:
            return np.zeros(self.n), 0.0
        scale = 1.0 + float(np.abs(np.diag(Hr)).max(initial=0.0))
        for reg in _REG_LADDER:
            try:
                M = Hr if reg == 0.0 else Hr + (reg * scale) * np.eye(Hr.shape[0])
                np.linalg.cholesky(M)
                dr = np.linalg.solve(M, -gr)
                break
            except np.linalg.LinAlgError:
                dr = None
        if dr is None:
            return None
        dec2 = float(-gr @ dr)
        if dec2 < 0.0:
            dec2 = 0.0
        if self.N is not None and not self.kkt_mode:
            dz = self.N @ dr
        else:
            dz = dr
        return dz, dec2

    def _kkt_step(self, g, H):
        """Equality-constrained Newton step via the full KKT system."""
        me = self.E.shape[0]
        K = np.zeros((self.n + me, self.n + me))
        K[:self.n, :self.n] = H
        K[:self.n, self.n:] = self.E.T
        K[self.n:, :self.n] = self.E
        rhs = np.concatenate([-g, np.zeros(me)])
        scale = 1.0 + float(np.abs(np.diag(H)).max(initial=0.0))
        for reg in _REG_LADDER:
            Kr = K.copy()
            if reg:
                Kr[:self.n, :self.n] += (reg * scale) * np.eye(self.n)
            try:
                sol = np.linalg.lstsq(Kr, rhs, rcond=None)[0]
                break
            except np.linalg.LinAlgError:
                sol = None
        if sol is None:
            return None
        dz = sol[:self.n]
        dec2 = max(float(dz @ H @ dz), 0.0)
        return dz, dec2

    def center(self, z, t, budget: _Budget, stop_when=None):
        """Newton-center at barrier parameter ``t``.

        Returns (z, code) with code one of 'ok', 'found', 'budget',
        'factor_failure', 'stall'.
        """
        dec_target = self.tol  # decrement^2 <= tol means gap estimate <= tol/2
        prev_dec2 = np.inf
        while True:
            if stop_when is not None and stop_when(z):
                return z, "found"
            if budget.exhausted:
                return z, "budget"
            g, H = self.grad_hess(z, t)
            if self.kkt_mode and self.E.shape[0]:
                step = self._kkt_step(g, H)
            else:
                step = self._reduced_step(g, H)
            if step is None:
                return z, "factor_failure"
            dz, dec2 = step
            if dec2 <= dec_target:
                return z, "ok"
            if dec2 <= math.sqrt(self.tol) and dec2 > 0.5 * prev_dec2:
                return z, "ok"    # decrement floored by roundoff near center
            prev_dec2 = dec2
            budget.spend()
            if dec2 <= 0.1:
                # quadratic convergence region: undamped steps, no Armijo
                # (the barrier value changes by less than roundoff here)
                cand = z + dz
                if np.array_equal(cand, z):
                    return z, "ok"    # step below float resolution
                if self.in_domain(cand):
                    z = cand
                    continue
            base = self.barrier_value(z, t)
            guard = 10.0 * np.finfo(float).eps * abs(base)
            s = 1.0
            gdz = float(g @ dz)
            accepted = False
            while s > 1e-16:
                cand = z + s * dz
                val = self.barrier_value(cand, t)
                if np.isfinite(val) and val <= base + _ALPHA * s * gdz + guard:
                    if np.array_equal(cand, z):
                        return z, "ok"    # step below float resolution
                    z = cand
                    accepted = True
                    break
                s *= _BETA
            if not accepted:
                if dec2 <= math.sqrt(self.tol):
                    return z, "ok"   # stalled in roundoff but essentially centered
                return z, "stall"

    def solve_path(self, z0, budget: _Budget, stop_when=None):
        """Run the barrier path from strictly feasible ``z0``.

        Returns (z, t, stage_objectives, code).
        """
        z = np.asarray(z0, dtype=float).copy()
        t = 1.0
        stages = []
        while True:
            final = self.m_bar == 0 or self.m_bar / t <= 0.5 * self.tol
            z, code = self.center(z, t, budget, stop_when=stop_when)
            stages.append(self.objective_value(z))
            log.debug("barrier stage t=%.1e newton_left=%d code=%s f=%.12g",
                      t, budget.left, code, stages[-1])
            if code != "ok":
                return z, t, stages, code
            if final:
                return z, t, stages, "ok"
            t *= _T_FACTOR

    # -- multipliers ------------------------------------------------------

    def multipliers(self, z, t):
        cvals, cgrads, rA, slo, sup = self.slacks(z)
        lam = 1.0 / (t * (-cvals)) if cvals.size else np.zeros(0)
        nu = 1.0 / (t * rA) if rA.size else np.zeros(0)
        box_lo = np.zeros(self.n)
        box_up = np.zeros(self.n)
        if slo.size:
            box_lo[self.flo] = 1.0 / (t * slo)
        if sup.size:
            box_up[self.fup] = 1.0 / (t * sup)

        # residual so far, to be absorbed by equality / pinned-coordinate rows
        res = self.Q0 @ z + self.q0
        if cvals.size:
            res += cgrads.T @ lam
        if rA.size:
            res += self.A.T @ nu
        res += box_up - box_lo

        eta = np.zeros(self.me_orig)
        if self.E.shape[0]:
            zeta = np.linalg.lstsq(self.E.T, -res, rcond=None)[0]
            eta = zeta[:self.me_orig]
            beta = zeta[self.me_orig:]   # net multipliers of pinned coordinates
            idx = np.flatnonzero(self.degenerate)
            for j, i in enumerate(idx):
                if beta[j] >= 0.0:
                    box_up[i] += beta[j]
                else:
                    box_lo[i] += -beta[j]
        return lam, LinMultipliers(ineq=nu, eq=eta, box_lo=box_lo, box_up=box_up)

    def refined_multipliers(self, z, t, lam, ml):
        """Active-set least-squares refit of the barrier multipliers.

        Multipliers read off the central point as 1/(t * slack) inherit
        the relative error of the tiny slack; a refit against the
        stationarity system removes it.  Inactive rows keep their
        (negligible) barrier values.
        """
        cvals, cgrads, _rA, _slo, _sup = self.slacks(z)
        act_qc = np.flatnonzero(lam >= self.tol)
        act_A = np.flatnonzero(ml.ineq >= self.tol)
        act_lo = np.flatnonzero(ml.box_lo >= self.tol)
        act_up = np.flatnonzero(ml.box_up >= self.tol)

        cols = []
        for i in act_qc:
            cols.append(cgrads[i])
        for j in act_A:
            cols.append(self.A[j])
        eye = np.eye(self.n)
        for i in act_lo:
            cols.append(-eye[i])
        for i in act_up:
            cols.append(eye[i])
        n_ineq_cols = len(cols)
        for row in self.E:            # includes pinned-coordinate rows
            cols.append(row)
        if not cols:
            return lam, ml

        base = self.Q0 @ z + self.q0
        inact_lam = lam.copy()
        inact_lam[act_qc] = 0.0
        if self.mq:
            base += cgrads.T @ inact_lam
        inact_nu = ml.ineq.copy()
        inact_nu[act_A] = 0.0
        if self.A.shape[0]:
            base += self.A.T @ inact_nu
        inact_lo = ml.box_lo.copy()
        inact_lo[act_lo] = 0.0
        inact_lo[self.degenerate] = 0.0
        inact_up = ml.box_up.copy()
        inact_up[act_up] = 0.0
        inact_up[self.degenerate] = 0.0
        base += inact_up - inact_lo

        # ridge refit anchored at the barrier values: near-parallel active
        # columns (complementarity corners) make the min-norm least-squares
        # split arbitrary, and clamping such a split wrecks the balance
        M = np.column_stack(cols)
        anchor = np.empty(M.shape[1])
        k = 0
        for i in act_qc:
            anchor[k] = lam[i]
            k += 1
        for j in act_A:
            anchor[k] = ml.ineq[j]
            k += 1
        for i in act_lo:
            anchor[k] = ml.box_lo[i]
            k += 1
        for i in act_up:
            anchor[k] = ml.box_up[i]
            k += 1
        anchor[k:k + self.me_orig] = ml.eq
        anchor[k + self.me_orig:] = 0.0
        G = M.T @ M
        delta = 1e-8 * (1.0 + float(np.abs(G).max()))
        G[np.diag_indices(G.shape[0])] += delta
        rhs = M.T @ (-base) + delta * anchor
        try:
            xi = np.linalg.solve(G, rhs)
        except np.linalg.LinAlgError:
            return lam, ml
        xi[:n_ineq_cols] = np.maximum(xi[:n_ineq_cols], 0.0)

        lam2 = lam.copy()
        nu2 = ml.ineq.copy()
        lo2 = inact_lo.copy()
        up2 = inact_up.copy()
        k = 0
        for i in act_qc:
            lam2[i] = xi[k]
            k += 1
        for j in act_A:
            nu2[j] = xi[k]
            k += 1
        for i in act_lo:
            lo2[i] = xi[k]
            k += 1
        for i in act_up:
            up2[i] = xi[k]
            k += 1
        eta2 = xi[k:k + self.me_orig]
        beta = xi[k + self.me_orig:]
        for j, i in enumerate(np.flatnonzero(self.degenerate)):
            if beta[j] >= 0.0:
                up2[i] += beta[j]
            else:
                lo2[i] += -beta[j]
        return lam2, LinMultipliers(ineq=nu2, eq=eta2, box_lo=lo2, box_up=up2)


def inner_kkt_residual(sp: ConvexSubproblem, sol: InnerSolution) -> float:
    """Independent KKT recomputation at ``sol``: max of stationarity,
    primal violation, complementarity, and multiplier negativity."""
    return _kkt_residual_arrays(sp, sol.z, sol.lambda_qc, sol.mult_lin)


def _kkt_residual_arrays(sp: ConvexSubproblem, z, lam, ml) -> float:
    z = np.asarray(z, dtype=float)
    n = sp.dim_total
    if z.shape != (n,):
        raise ValueError("solution has wrong dimension")
    lam = np.asarray(lam, dtype=float)

    from .dc_model import eval_quadratic, grad_quadratic

    stat = sp.objective.Q.data @ z + sp.objective.q
    worst = 0.0
    for i, c in enumerate(sp.qcs):
        ci = eval_quadratic(c, z)
        stat += lam[i] * grad_quadratic(c, z)
        worst = max(worst, ci, abs(lam[i] * ci), -lam[i])
    if sp.lin_ineq is not None:
        A, b = sp.lin_ineq
        rA = A @ z - b
        stat += A.T @ ml.ineq
        if rA.size:
            worst = max(worst, float(rA.max()),
                        float(np.abs(ml.ineq * rA).max()),
                        float((-ml.ineq).max()))
    if sp.lin_eq is not None:
        E, d = sp.lin_eq
        stat += E.T @ ml.eq
        if d.size:
            worst = max(worst, float(np.abs(E @ z - d).max()))
    stat += ml.box_up - ml.box_lo
    lo_gap = z - sp.lb
    up_gap = sp.ub - z
    fin_lo = np.isfinite(sp.lb)
    fin_up = np.isfinite(sp.ub)
    if fin_lo.any():
        worst = max(worst, float((-lo_gap[fin_lo]).max()),
                    float(np.abs(ml.box_lo[fin_lo] * lo_gap[fin_lo]).max()),
                    float((-ml.box_lo).max()))
    if fin_up.any():
        worst = max(worst, float((-up_gap[fin_up]).max()),
                    float(np.abs(ml.box_up[fin_up] * up_gap[fin_up]).max()),
                    float((-ml.box_up).max()))
    worst = max(worst, float(np.abs(stat).max(initial=0.0)))
    return worst


def _strict_margin(bar: _Barrier) -> float:
    scale = 1.0 + float(np.abs(bar.rcs).max(initial=0.0)) \
        + float(np.abs(bar.b).max(initial=0.0))
    return 1e-12 * scale


def _initial_guess(bar: _Barrier, sp: ConvexSubproblem) -> np.ndarray:
    """Box midpoint (clamped for infinite edges), projected onto E z = d."""
    lo, up = bar.lb, bar.ub
    mid = np.zeros(bar.n)
    both = np.isfinite(lo) & np.isfinite(up)
    mid[both] = 0.5 * (lo[both] + up[both])
    only_lo = np.isfinite(lo) & ~np.isfinite(up)
    mid[only_lo] = lo[only_lo] + 1.0
    only_up = ~np.isfinite(lo) & np.isfinite(up)
    mid[only_up] = up[only_up] - 1.0
    if bar.N is not None:
        mid = bar.z_part + bar.N @ (bar.N.T @ (mid - bar.z_part))
    return mid


def _phase1_subproblem(sp: ConvexSubproblem, bar: _Barrier,
                       z0: np.ndarray) -> ConvexSubproblem:
    """Relax every inequality of ``sp`` by one scalar w; minimize w.

    The original box edges become relaxed rows; harmless artificial bounds
    (wide relative to the data and to ``z0``) keep the barrier bounded in
    the recession directions the relaxation opens up.  A strict point
    found inside them satisfies the original constraints regardless.
    """
    from .dc_model import SymMatrix

    n = bar.n
    nn = n + 1
    zerosQ = SymMatrix.zeros(nn)
    q_obj = np.zeros(nn)
    q_obj[n] = 1.0
    objective = ConvexQuadratic(zerosQ, q_obj, 0.0, rho=0.0)

    span = 1.0 + float(np.abs(z0).max(initial=0.0))
    for bound in (bar.lb, bar.ub):
        finite = np.isfinite(bound)
        if finite.any():
            span = max(span, float(np.abs(bound[finite]).max()))
    radius = 1e4 * span

    qcs = []
    for c in sp.qcs:
        Q = np.zeros((nn, nn))
        Q[:n, :n] = c.Q.data
        q = np.zeros(nn)
        q[:n] = c.q
        q[n] = -1.0
        qcs.append(ConvexQuadratic(SymMatrix.from_lower(Q), q, c.r))

    rows = []
    rhs = []
    if bar.A.shape[0]:
        blk = np.hstack([bar.A, -np.ones((bar.A.shape[0], 1))])
        rows.append(blk)
        rhs.append(bar.b)
    for i in np.flatnonzero(bar.flo):
        row = np.zeros(nn)
        row[i] = -1.0
        row[n] = -1.0
        rows.append(row[None, :])
        rhs.append(np.array([-bar.lb[i]]))
    for i in np.flatnonzero(bar.fup):
        row = np.zeros(nn)
        row[i] = 1.0
        row[n] = -1.0
        rows.append(row[None, :])
        rhs.append(np.array([bar.ub[i]]))
    lin_ineq = None
    if rows:
        lin_ineq = (np.vstack(rows), np.concatenate(rhs))

    lin_eq = None
    if bar.E.shape[0]:
        Eext = np.hstack([bar.E, np.zeros((bar.E.shape[0], 1))])
        lin_eq = (Eext, bar.d)

    lb = np.full(nn, -np.inf)
    ub = np.full(nn, np.inf)
    lb[:n] = np.minimum(np.where(np.isfinite(bar.lb), bar.lb, z0), z0) - radius
    ub[:n] = np.maximum(np.where(np.isfinite(bar.ub), bar.ub, z0), z0) + radius
    lb[n] = -1.0
    return ConvexSubproblem(objective=objective, qcs=tuple(qcs),
                            lin_ineq=lin_ineq, lin_eq=lin_eq, lb=lb, ub=ub)


def phase1_point(sp: ConvexSubproblem,
                 inner_tol: float = DEFAULT_INNER_TOL,
                 max_newton: int = DEFAULT_MAX_NEWTON) -> Optional[np.ndarray]:
    """A strictly feasible point of ``sp``, or None when none is found.

    None means the phase-1 optimum left residual violation above
    ``inner_tol`` (inconsistent constraints) or no usable strict margin
    exists; it is a value, not an error.
    """
    sp.validate()
    bar = _Barrier(sp, inner_tol)
    if bar.eq_inconsistent:
        return None
    z0 = _initial_guess(bar, sp)
    margin = _PHASE1_MARGIN * bar.data_scale
    v0 = bar.max_violation(z0)
    if v0 <= -margin:
        return z0

    sp1 = _phase1_subproblem(sp, bar, z0)
    bar1 = _Barrier(sp1, inner_tol)
    if bar1.eq_inconsistent:
        return None
    n = bar.n
    start = np.zeros(n + 1)
    start[:n] = z0
    start[n] = max(v0, -0.5) + 1.0

    found = {}

    def stop(zw):
        if bar.max_violation(zw[:n]) <= -margin:
            found["z"] = zw[:n].copy()
            return True
        return False

    budget = _Budget(max_newton)
    zw, _t, _stages, code = bar1.solve_path(start, budget, stop_when=stop)
    if "z" in found:
        return found["z"]
    z = zw[:n]
    v = bar.max_violation(z)
    if v < -1e-12:
        return z.copy()     # thin interior: strictly feasible, small margin
    log.debug("phase-1 finished code=%s residual=%.3e", code, v)
    return None


def solve_subproblem(sp: ConvexSubproblem,
                     warm_start=None,
                     inner_tol: float = DEFAULT_INNER_TOL,
                     max_newton: int = DEFAULT_MAX_NEWTON) -> InnerSolution:
    """Solve one convex subproblem.

    ``warm_start`` is used only if it is strictly feasible; otherwise a
    strictly feasible point is constructed by phase 1.  An ``optimal``
    status is only reported after ``inner_kkt_residual`` re-certifies the
    returned point at ``inner_tol``.
    """
    sp.validate()
    bar = _Barrier(sp, inner_tol)

    def failure(status, msg):
        empty = LinMultipliers(ineq=np.zeros(bar.A.shape[0]),
                               eq=np.zeros(bar.me_orig),
                               box_lo=np.zeros(bar.n), box_up=np.zeros(bar.n))
        return InnerSolution(z=np.full(bar.n, np.nan),
                             lambda_qc=np.zeros(bar.mq), mult_lin=empty,
                             status=status, kkt_residual=np.inf,
                             iterations=0, message=msg)

    if bar.eq_inconsistent:
        return failure(InnerStatus.INFEASIBLE, "inconsistent equality rows")

    strict = _strict_margin(bar)
    z0 = None
    if warm_start is not None:
        ws = np.asarray(warm_start, dtype=float)
        if ws.shape == (bar.n,) and np.isfinite(ws).all():
            if bar.E.shape[0]:
                eq_res = float(np.abs(bar.E @ ws - bar.d).max(initial=0.0))
                if eq_res <= 1e-9 * (1.0 + float(np.abs(bar.d).max(initial=0.0))):
                    ws = bar.z_part + bar.N @ (bar.N.T @ (ws - bar.z_part))
                else:
                    ws = None
            if ws is not None and bar.max_violation(ws) < -strict:
                z0 = ws
    if z0 is None:
        z0 = phase1_point(sp, inner_tol=inner_tol, max_newton=max_newton)
        if z0 is None:
            return failure(InnerStatus.INFEASIBLE,
                           "phase 1 found no strictly feasible point")

    budget = _Budget(max_newton)
    z, t, stages, code = bar.solve_path(z0, budget)
    used = max_newton - budget.left

    lam, ml = bar.multipliers(z, t)
    res = _kkt_residual_arrays(sp, z, lam, ml)
    lam2, ml2 = bar.refined_multipliers(z, t, lam, ml)
    res2 = _kkt_residual_arrays(sp, z, lam2, ml2)
    if res2 < res:
        lam, ml, res = lam2, ml2, res2
    sol = InnerSolution(z=z, lambda_qc=lam, mult_lin=ml,
                        status=InnerStatus.OPTIMAL, kkt_residual=res,
                        iterations=used, stage_objectives=tuple(stages))

    # the recomputed certificate is meaningful relative to the data scale;
    # demanding absolute 1e-8 of O(100) data would be below float64 noise
    tol_cert = inner_tol * bar.data_scale
    if code == "ok" and sol.kkt_residual <= tol_cert:
        return sol
    if code == "budget":
        if sol.kkt_residual <= 100.0 * tol_cert:
            sol.status = InnerStatus.MAX_ITER
            sol.message = "Newton budget exhausted"
        else:
            # a budget-exhausted point with a wild certificate is not a
            # usable step; callers must not walk onto it silently
            sol.status = InnerStatus.NUMERICAL_FAILURE
            sol.message = ("Newton budget exhausted, certificate %.3e"
                           % sol.kkt_residual)
    elif code == "factor_failure":
        sol.status = InnerStatus.NUMERICAL_FAILURE
        sol.message = "Newton system factorization failed after regularization"
    elif sol.kkt_residual > tol_cert:
        if sol.kkt_residual <= 100.0 * tol_cert:
            # centered but marginally above the certificate: treat honestly
            sol.status = InnerStatus.MAX_ITER
            sol.message = "certificate %.3e above tolerance" % sol.kkt_residual
        else:
            sol.status = InnerStatus.NUMERICAL_FAILURE
            sol.message = "KKT certificate %.3e" % sol.kkt_residual
    else:
        sol.status = InnerStatus.NUMERICAL_FAILURE
        sol.message = "line search stalled"
    return sol
