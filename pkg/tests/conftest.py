"""Shared fixtures and corpus builders for the test suite."""

import numpy as np
import pytest

from scpdc.dc_model import ConvexQuadratic, SymMatrix, eval_quadratic
from scpdc.inner_solver import ConvexSubproblem


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger JIT compilation once so timed tests measure the solver."""
    from scpdc.jacobi import eigh_symmetric
    from scpdc.inner_solver import solve_subproblem

    eigh_symmetric(np.array([[2.0, 1.0], [1.0, 2.0]]))
    obj = ConvexQuadratic(SymMatrix(np.eye(2)), np.zeros(2), 0.0)
    qc = ConvexQuadratic(SymMatrix(np.eye(2)), np.zeros(2), -1.0)
    sp = ConvexSubproblem(objective=obj, qcs=(qc,),
                          lb=np.full(2, -5.0), ub=np.full(2, 5.0))
    solve_subproblem(sp)


def random_psd(rng, n, shift=0.0):
    m = rng.normal(size=(n, n))
    return SymMatrix.from_lower(m.T @ m / n + shift * np.eye(n))


def random_qcqp_subproblem(rng, n, m_qc=1, m_lin=2, with_eq=False,
                           box_half=5.0):
    """Random convex QCQP with a certified strictly feasible interior point.

    Returns (subproblem, z_interior).  Every quadratic constraint is given
    a margin of at least 0.5 at z_interior; linear rows likewise.
    """
    obj = ConvexQuadratic(random_psd(rng, n, shift=0.5),
                          rng.normal(size=n), float(rng.normal()))
    lb = np.full(n, -box_half)
    ub = np.full(n, box_half)
    z_int = rng.uniform(-0.5 * box_half, 0.5 * box_half, n)
    qcs = []
    for _ in range(m_qc):
        Q = random_psd(rng, n)
        q = rng.normal(size=n)
        probe = ConvexQuadratic(Q, q, 0.0)
        r = -(eval_quadratic(probe, z_int) + rng.uniform(0.5, 2.0))
        qcs.append(ConvexQuadratic(Q, q, r))
    lin = None
    if m_lin:
        A = rng.normal(size=(m_lin, n))
        b = A @ z_int + rng.uniform(0.5, 2.0, m_lin)
        lin = (A, b)
    eq = None
    if with_eq:
        E = rng.normal(size=(1, n))
        eq = (E, E @ z_int)
    sp = ConvexSubproblem(objective=obj, qcs=tuple(qcs), lin_ineq=lin,
                          lin_eq=eq, lb=lb, ub=ub)
    return sp, z_int


def sample_feasible(rng, sp, z_int, count):
    """Feasible points of ``sp`` by shrinking box samples toward z_int."""
    from scpdc.dc_model import eval_quadratic as ev

    n = sp.dim_total
    out = []
    while len(out) < count:
        y = rng.uniform(sp.lb, sp.ub)
        if sp.lin_eq is not None:
            E, d = sp.lin_eq
            # project the candidate onto the equality rows
            y = y - E.T @ np.linalg.lstsq(E @ E.T, E @ y - d, rcond=None)[0]
        for _ in range(40):
            ok = np.all(y >= sp.lb - 1e-12) and np.all(y <= sp.ub + 1e-12)
            if ok and sp.lin_ineq is not None:
                A, b = sp.lin_ineq
                ok = np.all(A @ y <= b)
            if ok:
                ok = all(ev(c, y) <= 0.0 for c in sp.qcs)
            if ok:
                out.append(y.copy())
                break
            y = z_int + 0.5 * (y - z_int)
    return out
