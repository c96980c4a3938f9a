"""Problem builders, seeded generators, and independent oracles.

The generators draw from a self-contained SplitMix64 stream (documented
below) instead of any platform RNG, so a seed pins the produced instance
bit for bit across machines and releases.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dc_model import (ConvexQuadratic, ConvexSetOmega, DCPair, DCProgram,
                       SymMatrix, eval_quadratic, spectral_dc_split)
from .inner_solver import (ConvexSubproblem, InnerStatus, solve_subproblem)

__all__ = [
    "SplitMix64",
    "build_small_example",
    "gen_random_ncvqcqp",
    "MpccData",
    "MpccIndexMap",
    "build_mpcc",
    "mpcc_oracle",
    "gen_random_mpcc",
    "BilinearNmpcData",
    "build_bilinear_nmpc",
    "build_slow_dca_instance",
    "find_dc_feasible_point",
]


class SplitMix64:
    """SplitMix64 stream.  State advance and output mix:

        state = (state + 0x9E3779B97F4A7C15) mod 2^64
        z = state
        z = (z XOR (z >> 30)) * 0xBF58476D1CE4E5B9   (mod 2^64)
        z = (z XOR (z >> 27)) * 0x94D049BB133111EB   (mod 2^64)
        z = z XOR (z >> 31)

    Doubles are ``(z >> 11) * 2^-53`` in [0, 1).  Arrays fill row-major.
    """

    _MASK = (1 << 64) - 1
    _GAMMA = 0x9E3779B97F4A7C15

    def __init__(self, seed: int):
        self.state = int(seed) & self._MASK

    def next_u64(self) -> int:
        self.state = (self.state + self._GAMMA) & self._MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self._MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self._MASK
        return z ^ (z >> 31)

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        u = (self.next_u64() >> 11) * 2.0 ** -53
        return lo + (hi - lo) * u

    def uniform_array(self, shape, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
        size = int(np.prod(shape))
        out = np.empty(size)
        for i in range(size):
            out[i] = self.uniform(lo, hi)
        return out.reshape(shape)


# ---------------------------------------------------------------------------
# The 2-D illustrative example.
# ---------------------------------------------------------------------------

def build_small_example(case) -> DCProgram:
    """minimize -4 x1 + x2  s.t.  x1^2 - x2^2 - 4 <= 0,  x in [-3,3]x[-2,2].

    Case 1 splits the constraint as u = x1^2 - 4, v = x2^2 (both merely
    convex); case 2 as u = x1^2 + x2^2 - 4, v = 2 x2^2 (u strongly convex
    with parameter 2).  Both represent the same g.
    """
    case = int(case)
    if case not in (1, 2):
        raise ValueError("case must be 1 or 2")
    f1 = ConvexQuadratic(SymMatrix.zeros(2), np.array([-4.0, 1.0]), 0.0)
    objective = DCPair(f1, ConvexQuadratic.zero(2))
    if case == 1:
        u = ConvexQuadratic(SymMatrix(np.diag([2.0, 0.0])), np.zeros(2), -4.0)
        v = ConvexQuadratic(SymMatrix(np.diag([0.0, 2.0])), np.zeros(2), 0.0)
    else:
        u = ConvexQuadratic(SymMatrix(2.0 * np.eye(2)), np.zeros(2), -4.0)
        v = ConvexQuadratic(SymMatrix(np.diag([0.0, 4.0])), np.zeros(2), 0.0)
    omega = ConvexSetOmega.box([-3.0, -2.0], [3.0, 2.0])
    return DCProgram(dim=2, objective=objective, constraints=(DCPair(u, v),),
                     omega=omega, labels=("dc",))


# ---------------------------------------------------------------------------
# Random nonconvex QCQP.
# ---------------------------------------------------------------------------

def gen_random_ncvqcqp(n: int, m2: int, seed: int) -> DCProgram:
    """Random indefinite QCQP instance.

    Objective 0.5 x'Qx + q'x with Q = M'M + 0.5 I; one DC constraint from
    the spectral split of a symmetrized random P (u gets the linear term
    and the level -alpha with alpha = 10); m2 random linear rows; box
    [-5, 10]^n.  All raw entries uniform in [-10, 10], drawn in the order
    M, q, p, P_r, A, b.
    """
    if n < 1 or m2 < 0:
        raise ValueError("need n >= 1 and m2 >= 0")
    rng = SplitMix64(seed)
    M = rng.uniform_array((n, n), -10.0, 10.0)
    q = rng.uniform_array((n,), -10.0, 10.0)
    pvec = rng.uniform_array((n,), -10.0, 10.0)
    Pr = rng.uniform_array((n, n), -10.0, 10.0)
    A = rng.uniform_array((m2, n), -10.0, 10.0) if m2 else None
    b = rng.uniform_array((m2,), -10.0, 10.0) if m2 else None
    alpha = 10.0

    Q = SymMatrix.from_lower(M.T @ M + 0.5 * np.eye(n))
    objective = DCPair(ConvexQuadratic(Q, q, 0.0), ConvexQuadratic.zero(n))

    P = SymMatrix.symmetrize(Pr)
    P1, P2 = spectral_dc_split(P)
    u = ConvexQuadratic(P1, pvec, -alpha)
    v = ConvexQuadratic(P2, np.zeros(n), 0.0)

    omega = ConvexSetOmega(lb=np.full(n, -5.0), ub=np.full(n, 10.0), A=A, b=b)
    return DCProgram(dim=n, objective=objective, constraints=(DCPair(u, v),),
                     omega=omega, labels=("indefinite-quadratic",))


# ---------------------------------------------------------------------------
# MPCC reformulation.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MpccData:
    """min f(x, y)  s.t.  Ax + By <= a,
    x >= 0, Cx + Dy + e >= 0, x'(Cx + Dy + e) = 0, boxes on x and y."""

    nx: int
    ny: int
    objective: ConvexQuadratic       # over (x, y)
    C: np.ndarray
    D: np.ndarray
    e: np.ndarray
    A: Optional[np.ndarray] = None
    B: Optional[np.ndarray] = None
    a: Optional[np.ndarray] = None
    x_lb: Optional[np.ndarray] = None
    x_ub: Optional[np.ndarray] = None
    y_lb: Optional[np.ndarray] = None
    y_ub: Optional[np.ndarray] = None

    def __post_init__(self):
        nx, ny = self.nx, self.ny
        C = np.asarray(self.C, dtype=float).reshape(nx, nx)
        D = np.asarray(self.D, dtype=float).reshape(nx, ny)
        e = np.asarray(self.e, dtype=float).reshape(nx)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "e", e)
        if self.objective.dim != nx + ny:
            raise ValueError("objective must be over (x, y)")

    def x_bounds(self):
        lb = np.zeros(self.nx) if self.x_lb is None \
            else np.maximum(np.asarray(self.x_lb, dtype=float), 0.0)
        ub = np.full(self.nx, np.inf) if self.x_ub is None \
            else np.asarray(self.x_ub, dtype=float)
        return lb, ub

    def y_bounds(self):
        lb = np.full(self.ny, -np.inf) if self.y_lb is None \
            else np.asarray(self.y_lb, dtype=float)
        ub = np.full(self.ny, np.inf) if self.y_ub is None \
            else np.asarray(self.y_ub, dtype=float)
        return lb, ub


@dataclass(frozen=True)
class MpccIndexMap:
    x: slice
    y: slice
    z: slice

    def split(self, w):
        w = np.asarray(w)
        return w[self.x], w[self.y], w[self.z]


def build_mpcc(d: MpccData):
    """Reformulate the complementarity program over w = (x, y, z).

    The slack z carries Cx + Dy + e; complementarity becomes the single DC
    inequality ||(x, y, z)||^2 - (||x - z||^2 + ||y||^2) <= 0, i.e.
    2 x'z <= 0, whose u-part is strongly convex with parameter 2.
    """
    nx, ny = d.nx, d.ny
    nw = 2 * nx + ny
    idx = MpccIndexMap(x=slice(0, nx), y=slice(nx, nx + ny),
                       z=slice(nx + ny, nw))

    Qf = np.zeros((nw, nw))
    Qf[:nx + ny, :nx + ny] = d.objective.Q.data
    qf = np.zeros(nw)
    qf[:nx + ny] = d.objective.q
    objective = DCPair(
        ConvexQuadratic(SymMatrix.from_lower(Qf), qf, d.objective.r),
        ConvexQuadratic.zero(nw))

    u = ConvexQuadratic(SymMatrix(2.0 * np.eye(nw)), np.zeros(nw), 0.0)
    Qv = np.zeros((nw, nw))
    Qv[idx.x, idx.x] = 2.0 * np.eye(nx)
    Qv[idx.z, idx.z] = 2.0 * np.eye(nx)
    Qv[idx.x, idx.z] = -2.0 * np.eye(nx)
    Qv[idx.z, idx.x] = -2.0 * np.eye(nx)
    Qv[idx.y, idx.y] = 2.0 * np.eye(ny)
    v = ConvexQuadratic(SymMatrix.from_lower(Qv), np.zeros(nw), 0.0)

    rows_A = None
    rhs_a = None
    if d.A is not None:
        A = np.asarray(d.A, dtype=float)
        B = np.asarray(d.B, dtype=float).reshape(A.shape[0], ny)
        rows_A = np.hstack([A, B, np.zeros((A.shape[0], nx))])
        rhs_a = np.asarray(d.a, dtype=float)

    E = np.hstack([d.C, d.D, -np.eye(nx)])
    dvec = -d.e

    x_lb, x_ub = d.x_bounds()
    y_lb, y_ub = d.y_bounds()
    lb = np.concatenate([x_lb, y_lb, np.zeros(nx)])
    ub = np.concatenate([x_ub, y_ub, np.full(nx, np.inf)])

    omega = ConvexSetOmega(lb=lb, ub=ub, A=rows_A, b=rhs_a, E=E, d=dvec)
    program = DCProgram(dim=nw, objective=objective,
                        constraints=(DCPair(u, v),), omega=omega,
                        labels=("complementarity",))
    return program, idx


def _branch_subproblem(d: MpccData, pattern: int) -> ConvexSubproblem:
    """Convex QP in (x, y): bit i of ``pattern`` pins x_i = 0, otherwise
    (Cx + Dy + e)_i = 0; the untouched side stays an inequality."""
    nx, ny = d.nx, d.ny
    n = nx + ny
    x_lb, x_ub = d.x_bounds()
    y_lb, y_ub = d.y_bounds()
    lb = np.concatenate([x_lb, y_lb])
    ub = np.concatenate([x_ub, y_ub])

    CD = np.hstack([d.C, d.D])
    eq_rows = []
    eq_rhs = []
    ineq_rows = []
    ineq_rhs = []
    for i in range(nx):
        if pattern & (1 << i):
            lb[i] = 0.0            # pin x_i = 0 through the box
            ub[i] = 0.0
            ineq_rows.append(-CD[i])      # keep (Cx+Dy+e)_i >= 0
            ineq_rhs.append(d.e[i])
        else:
            eq_rows.append(CD[i])
            eq_rhs.append(-d.e[i])
    if d.A is not None:
        for j in range(d.A.shape[0]):
            ineq_rows.append(np.hstack([d.A[j], d.B[j]]))
            ineq_rhs.append(d.a[j])
    lin_ineq = (np.array(ineq_rows), np.array(ineq_rhs)) if ineq_rows else None
    lin_eq = (np.array(eq_rows), np.array(eq_rhs)) if eq_rows else None
    return ConvexSubproblem(objective=d.objective, lin_ineq=lin_ineq,
                            lin_eq=lin_eq, lb=lb, ub=ub)


def mpcc_oracle(d: MpccData, inner_tol: float = 1e-8):
    """Global optimum by enumerating all 2^nx complementarity branches.

    Each branch is a convex QP; the best feasible branch value is the
    global optimum of the complementarity program.  Returns (f*, w*) with
    w* = (x*, y*, z*); raises when every branch is infeasible.
    """
    if d.nx > 12:
        raise ValueError("branch enumeration limited to nx <= 12")
    best = None
    for pattern in range(1 << d.nx):
        sp = _branch_subproblem(d, pattern)
        sol = solve_subproblem(sp, inner_tol=inner_tol)
        if sol.status not in (InnerStatus.OPTIMAL, InnerStatus.MAX_ITER):
            continue
        val = eval_quadratic(d.objective, sol.z)
        if best is None or val < best[0]:
            best = (val, sol.z.copy())
    if best is None:
        raise ValueError("all complementarity branches are infeasible")
    fstar, xy = best
    x = xy[:d.nx]
    y = xy[d.nx:]
    z = d.C @ x + d.D @ y + d.e
    return fstar, np.concatenate([x, y, z])


def mpcc_branch_point(d: MpccData, pattern: int):
    """Feasible point of the complementarity program on one branch.

    Solves the branch QP and completes z from the equality rows; returns
    None when that branch is infeasible."""
    sp = _branch_subproblem(d, pattern)
    sol = solve_subproblem(sp)
    if sol.status not in (InnerStatus.OPTIMAL, InnerStatus.MAX_ITER):
        return None
    x = sol.z[:d.nx]
    y = sol.z[d.nx:]
    return np.concatenate([x, y, d.C @ x + d.D @ y + d.e])


def solve_mpcc_rscp(d: MpccData, cfg=None):
    """Relaxed SCP driver for complementarity programs.

    Runs rSCP-DC from the projection of the origin; if that run stalls
    (slow penalty tail or an infeasible-stationary trap), reads the
    complementarity pattern off its final point, solves the corresponding
    branch QP, and restarts rSCP from that feasible point.  Returns
    ``(program, index_map, report)``.
    """
    from .scp_engine import SolveStatus, SolverConfig, solve_rscp

    if cfg is None:
        cfg = SolverConfig(eps=1e-5, mu0=1.0, mu_update="geometric",
                           max_iter=1000)
    prog, idx = build_mpcc(d)
    rep = solve_rscp(prog, np.zeros(prog.dim), cfg)
    if rep.status == SolveStatus.CONVERGED_STATIONARY:
        return prog, idx, rep
    x, _, z = idx.split(rep.final_x)
    pattern = 0
    for i in range(d.nx):
        if x[i] <= z[i]:
            pattern |= 1 << i
    w0 = mpcc_branch_point(d, pattern)
    if w0 is None:
        return prog, idx, rep
    # first try a penalty matching the observed multiplier scale (anything
    # smaller immediately pulls the iterate off a degenerate branch point),
    # then fall back to the configured base penalty
    mu_restart = cfg.mu0
    if rep.final_lambda is not None:
        mu_restart = max(mu_restart,
                         10.0 ** np.ceil(np.log10(
                             float(np.abs(rep.final_lambda).max()) + 1.0)))
    import dataclasses
    for mu0 in dict.fromkeys((float(mu_restart), float(cfg.mu0))):
        cfg2 = dataclasses.replace(cfg, mu0=mu0)
        rep2 = solve_rscp(prog, w0, cfg2)
        if rep2.status == SolveStatus.CONVERGED_STATIONARY:
            return prog, idx, rep2
    return prog, idx, rep2


def gen_random_mpcc(nx: int, ny: int, seed: int) -> MpccData:
    """Seeded random complementarity instance.

    Strongly convex objective pulling x toward positive targets (so the
    complementarity constraint binds), a couple of mild coupling rows, and
    e > 0 (so the branch x = 0 is always feasible).
    """
    rng = SplitMix64(seed)
    n = nx + ny
    M = rng.uniform_array((n, n), -1.0, 1.0)
    target = np.concatenate([rng.uniform_array((nx,), 0.5, 2.0),
                             rng.uniform_array((ny,), -1.0, 1.0)])
    Q = M.T @ M + np.eye(n)
    objective = ConvexQuadratic(SymMatrix.from_lower(2.0 * Q), -2.0 * Q @ target,
                                float(target @ Q @ target))
    C = rng.uniform_array((nx, nx), -1.0, 1.0) + 2.0 * np.eye(nx)
    D = rng.uniform_array((nx, ny), -1.0, 1.0)
    e = rng.uniform_array((nx,), 0.1, 1.0)
    A = rng.uniform_array((2, nx), -1.0, 1.0)
    B = rng.uniform_array((2, ny), -1.0, 1.0)
    a = rng.uniform_array((2,), 1.0, 3.0)
    return MpccData(nx=nx, ny=ny, objective=objective, C=C, D=D, e=e,
                    A=A, B=B, a=a,
                    x_ub=np.full(nx, 10.0),
                    y_lb=np.full(ny, -10.0), y_ub=np.full(ny, 10.0))


# ---------------------------------------------------------------------------
# Bilinear NMPC reformulation.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BilinearNmpcData:
    """Horizon-Hp optimal control of x_{k+1} = A x_k + B[x_k, u_k] + C u_k.

    ``B_bilinear[j, :, :]`` holds the coefficients of the bilinear form in
    component j: B[x, u]_j = x' B_bilinear[j] u.  Weights are PSD; r_f is
    the radius of the terminal region x_Hp' We x_Hp <= r_f.
    """

    nx: int
    nu: int
    Hp: int
    A: np.ndarray
    C: np.ndarray
    B_bilinear: np.ndarray
    Wx: np.ndarray
    Wu: np.ndarray
    We: np.ndarray
    x_init: np.ndarray
    x_lb: np.ndarray
    x_ub: np.ndarray
    u_lb: np.ndarray
    u_ub: np.ndarray
    r_f: float

    def __post_init__(self):
        nx, nu = self.nx, self.nu
        for name, shape in (("A", (nx, nx)), ("C", (nx, nu)),
                            ("B_bilinear", (nx, nx, nu)), ("Wx", (nx, nx)),
                            ("Wu", (nu, nu)), ("We", (nx, nx)),
                            ("x_init", (nx,)), ("x_lb", (nx,)),
                            ("x_ub", (nx,)), ("u_lb", (nu,)),
                            ("u_ub", (nu,))):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(shape)
            object.__setattr__(self, name, arr)
        if not self.r_f > 0:
            raise ValueError("r_f must be positive")
        if self.Hp < 1:
            raise ValueError("Hp must be >= 1")


def build_bilinear_nmpc(d: BilinearNmpcData) -> DCProgram:
    """Stack w = (x_0..x_Hp, u_0..u_{Hp-1}) and write each dynamic equality
    as a pair of DC inequalities from the spectral split of its quadratic.

    The terminal region becomes one convex DC pair (zero concave part);
    the initial state and the per-stage boxes go into Omega.
    """
    nx, nu, Hp = d.nx, d.nu, d.Hp
    nw = (Hp + 1) * nx + Hp * nu

    def x_off(k):
        return k * nx

    def u_off(k):
        return (Hp + 1) * nx + k * nu

    H = np.zeros((nw, nw))
    for k in range(Hp):
        H[x_off(k):x_off(k) + nx, x_off(k):x_off(k) + nx] = d.Wx
        H[u_off(k):u_off(k) + nu, u_off(k):u_off(k) + nu] = d.Wu
    H[x_off(Hp):x_off(Hp) + nx, x_off(Hp):x_off(Hp) + nx] = d.We
    objective = DCPair(
        ConvexQuadratic(SymMatrix.from_lower(H), np.zeros(nw), 0.0),
        ConvexQuadratic.zero(nw))

    constraints = []
    labels = []
    for k in range(Hp):
        for j in range(nx):
            # x_{k+1,j} - (A x_k)_j - x_k' Bj u_k - (C u_k)_j = 0
            P = np.zeros((nw, nw))
            Bj = d.B_bilinear[j]
            P[x_off(k):x_off(k) + nx, u_off(k):u_off(k) + nu] = -0.5 * Bj
            P[u_off(k):u_off(k) + nu, x_off(k):x_off(k) + nx] = -0.5 * Bj.T
            qvec = np.zeros(nw)
            qvec[x_off(k):x_off(k) + nx] = -d.A[j]
            qvec[u_off(k):u_off(k) + nu] = -d.C[j]
            qvec[x_off(k + 1) + j] += 1.0
            P1, P2 = spectral_dc_split(SymMatrix.from_lower(P))
            Q1 = SymMatrix.from_lower(2.0 * P1.data)
            Q2 = SymMatrix.from_lower(2.0 * P2.data)
            fwd = DCPair(ConvexQuadratic(Q1, qvec, 0.0),
                         ConvexQuadratic(Q2, np.zeros(nw), 0.0))
            bwd = DCPair(ConvexQuadratic(Q2, -qvec, 0.0),
                         ConvexQuadratic(Q1, np.zeros(nw), 0.0))
            constraints += [fwd, bwd]
            labels += ["dyn[%d,%d]+" % (k, j), "dyn[%d,%d]-" % (k, j)]

    Qterm = np.zeros((nw, nw))
    Qterm[x_off(Hp):x_off(Hp) + nx, x_off(Hp):x_off(Hp) + nx] = 2.0 * d.We
    constraints.append(DCPair(
        ConvexQuadratic(SymMatrix.from_lower(Qterm), np.zeros(nw), -d.r_f),
        ConvexQuadratic.zero(nw)))
    labels.append("terminal")

    lb = np.empty(nw)
    ub = np.empty(nw)
    for k in range(Hp + 1):
        lb[x_off(k):x_off(k) + nx] = d.x_lb
        ub[x_off(k):x_off(k) + nx] = d.x_ub
    for k in range(Hp):
        lb[u_off(k):u_off(k) + nu] = d.u_lb
        ub[u_off(k):u_off(k) + nu] = d.u_ub
    E = np.zeros((nx, nw))
    E[:, :nx] = np.eye(nx)
    omega = ConvexSetOmega(lb=lb, ub=ub, E=E, d=d.x_init.copy())
    return DCProgram(dim=nw, objective=objective,
                     constraints=tuple(constraints), omega=omega,
                     labels=tuple(labels))


# ---------------------------------------------------------------------------
# DCA comparison instance and feasibility helpers.
# ---------------------------------------------------------------------------

def build_slow_dca_instance(n: int = 3, seed: int = 1) -> DCProgram:
    """Ball-constrained strongly-convex-v instance on which penalty DCA crawls.

    minimize 0.5 ||x - c||^2 subject to ||x||^2 <= 1 written as the DC
    pair u = x'x - 1/2 (parameter 2), v = 0.5 x'x (parameter 1), with c
    of norm 2 so the constraint binds at the solution c / ||c||.
    """
    rng = SplitMix64(seed)
    direction = rng.uniform_array((n,), -1.0, 1.0)
    direction /= np.linalg.norm(direction)
    c = 2.0 * direction
    f1 = ConvexQuadratic(SymMatrix(np.eye(n)), -c, 0.5 * float(c @ c))
    objective = DCPair(f1, ConvexQuadratic.zero(n))
    u = ConvexQuadratic(SymMatrix(2.0 * np.eye(n)), np.zeros(n), -0.5)
    v = ConvexQuadratic(SymMatrix(np.eye(n)), np.zeros(n), 0.0)
    omega = ConvexSetOmega.box(np.full(n, -10.0), np.full(n, 10.0))
    return DCProgram(dim=n, objective=objective, constraints=(DCPair(u, v),),
                     omega=omega, labels=("ball",))


def find_dc_feasible_point(p: DCProgram, inner_tol: float = 1e-8) -> Optional[np.ndarray]:
    """A point of Omega where every convex majorant u_i is nonpositive.

    Minimizes sum_i max(u_i(x), 0) over Omega via epigraph variables; if
    the optimum is (numerically) zero the returned x satisfies
    g_i = u_i - v_i <= u_i <= 0, i.e. it is DC-feasible.  Returns None
    when the certificate fails (which does not prove infeasibility).
    """
    n = p.dim
    m = p.m
    om = p.omega
    if m == 0:
        mid = om.midpoint()
        return mid if om.contains(mid) else None
    nt = n + m
    q = np.zeros(nt)
    q[n:] = 1.0
    obj = ConvexQuadratic(SymMatrix.zeros(nt), q, 0.0)
    qcs = []
    for i, c in enumerate(p.constraints):
        Qc = np.zeros((nt, nt))
        Qc[:n, :n] = c.u.Q.data
        qc = np.zeros(nt)
        qc[:n] = c.u.q
        qc[n + i] = -1.0
        qcs.append(ConvexQuadratic(SymMatrix.from_lower(Qc), qc, c.u.r))
    lin_ineq = None
    if om.A is not None:
        lin_ineq = (np.hstack([om.A, np.zeros((om.A.shape[0], m))]), om.b)
    lin_eq = None
    if om.E is not None:
        lin_eq = (np.hstack([om.E, np.zeros((om.E.shape[0], m))]), om.d)
    lb = np.concatenate([om.lb, np.zeros(m)])
    ub = np.concatenate([om.ub, np.full(m, np.inf)])
    sp = ConvexSubproblem(objective=obj, qcs=tuple(qcs), lin_ineq=lin_ineq,
                          lin_eq=lin_eq, lb=lb, ub=ub)
    sol = solve_subproblem(sp, inner_tol=inner_tol)
    if sol.status not in (InnerStatus.OPTIMAL, InnerStatus.MAX_ITER):
        return None
    x = sol.z[:n]
    if all(eval_quadratic(c.u, x) <= 1e-9 for c in p.constraints):
        return x
    return None
