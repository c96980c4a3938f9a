"""Problem representation: convex quadratics, DC pairs, and whole programs.

Every function in this library is a structured convex quadratic
``0.5 x'Qx + q'x + r`` with positive semidefinite ``Q`` (affine functions
have ``Q = 0``).  A nonconvex constraint ``g(x) <= 0`` is carried as a
pair ``(u, v)`` of such quadratics with ``g = u - v``; the solver only
ever linearizes ``v``, which keeps every subproblem convex.

All types are immutable after construction (arrays are frozen), so
program data can be shared freely across concurrent solves.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .jacobi import eigh_symmetric

__all__ = [
    "SymMatrix",
    "ConvexQuadratic",
    "DCPair",
    "ConvexSetOmega",
    "DCProgram",
    "ValidationError",
    "eval_quadratic",
    "grad_quadratic",
    "strong_convexity_param",
    "spectral_dc_split",
    "shift_dc_pair",
    "validate_program",
    "psd_tolerance",
]


def _frozen(a, shape=None) -> np.ndarray:
    arr = np.array(a, dtype=float, copy=True)
    if shape is not None:
        arr = arr.reshape(shape)
    arr.setflags(write=False)
    return arr


class ValidationError(ValueError):
    """A program failed validation; ``diagnostics`` lists the violations."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("invalid program: " + "; ".join(self.diagnostics))


@dataclass(frozen=True)
class SymMatrix:
    """Dense symmetric matrix; the lower triangle is authoritative.

    Constructors mirror the lower triangle, so ``data[i, j] == data[j, i]``
    holds exactly (bit for bit), not merely to roundoff.
    """

    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError("SymMatrix needs a square array, got %r" % (d.shape,))
        if not np.isfinite(d).all():
            raise ValueError("SymMatrix entries must be finite")
        if not np.array_equal(d, d.T):
            raise ValueError("SymMatrix entries must be exactly symmetric; "
                             "use from_lower/symmetrize to construct")
        object.__setattr__(self, "data", _frozen(d))

    @classmethod
    def from_lower(cls, m) -> "SymMatrix":
        """Build from the lower triangle of ``m`` (upper triangle ignored)."""
        m = np.asarray(m, dtype=float)
        low = np.tril(m)
        return cls(low + np.tril(m, -1).T)

    @classmethod
    def symmetrize(cls, m) -> "SymMatrix":
        """Build from ``0.5 (m + m')``."""
        m = np.asarray(m, dtype=float)
        return cls.from_lower(0.5 * (m + m.T))

    @classmethod
    def zeros(cls, dim: int) -> "SymMatrix":
        return cls(np.zeros((dim, dim)))

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def max_abs(self) -> float:
        return float(np.abs(self.data).max()) if self.dim else 0.0


def psd_tolerance(Q: SymMatrix) -> float:
    """Default slack allowed on the smallest eigenvalue of a PSD check."""
    return 1e-9 * (1.0 + Q.max_abs())


@dataclass(frozen=True)
class ConvexQuadratic:
    """The function ``0.5 x'Qx + q'x + r`` with PSD ``Q``.

    ``rho`` caches the strong-convexity parameter ``max(lambda_min(Q), 0)``;
    it is filled on first call to :func:`strong_convexity_param`.
    """

    Q: SymMatrix
    q: np.ndarray
    r: float
    rho: Optional[float] = field(default=None, compare=False)

    def __post_init__(self):
        q = _frozen(self.q).reshape(-1)
        if q.shape[0] != self.Q.dim:
            raise ValueError("q has length %d, Q has dim %d" % (q.shape[0], self.Q.dim))
        if not np.isfinite(q).all() or not np.isfinite(self.r):
            raise ValueError("quadratic coefficients must be finite")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "r", float(self.r))

    @classmethod
    def zero(cls, dim: int) -> "ConvexQuadratic":
        return cls(SymMatrix.zeros(dim), np.zeros(dim), 0.0, rho=0.0)

    @property
    def dim(self) -> int:
        return self.Q.dim

    @property
    def is_zero(self) -> bool:
        return self.Q.max_abs() == 0.0 and not self.q.any() and self.r == 0.0


def eval_quadratic(f: ConvexQuadratic, x) -> float:
    """Value ``0.5 x'Qx + q'x + r``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (f.dim,):
        raise ValueError("x has shape %r, expected (%d,)" % (x.shape, f.dim))
    return float(0.5 * x @ (f.Q.data @ x) + f.q @ x + f.r)


def grad_quadratic(f: ConvexQuadratic, x) -> np.ndarray:
    """Gradient ``Qx + q`` (the unique subgradient for this class)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (f.dim,):
        raise ValueError("x has shape %r, expected (%d,)" % (x.shape, f.dim))
    return f.Q.data @ x + f.q


def strong_convexity_param(f: ConvexQuadratic) -> float:
    """``max(lambda_min(Q), 0)``, computed by the in-repo eigensolver.

    The value is cached on the quadratic.  Eigensolver failure raises; it
    is never reported as a silent zero.
    """
    if f.rho is not None:
        return f.rho
    if f.Q.max_abs() == 0.0:
        rho = 0.0
    else:
        w, _ = eigh_symmetric(f.Q.data)
        rho = max(float(w[0]), 0.0)
    object.__setattr__(f, "rho", rho)
    return rho


def spectral_dc_split(P: SymMatrix):
    """Split ``P = P1 - P2`` with both parts PSD, via eigendecomposition.

    Positive eigenvalues go to ``P1``, the absolute values of negative
    ones to ``P2``; the shared eigenbasis makes ``P1 @ P2`` vanish.
    """
    w, V = eigh_symmetric(P.data)
    pos = np.maximum(w, 0.0)
    neg = np.maximum(-w, 0.0)
    P1 = SymMatrix.from_lower((V * pos) @ V.T)
    P2 = SymMatrix.from_lower((V * neg) @ V.T)
    return P1, P2


@dataclass(frozen=True)
class DCPair:
    """A function ``g = u - v`` with both parts convex quadratics."""

    u: ConvexQuadratic
    v: ConvexQuadratic

    def __post_init__(self):
        if self.u.dim != self.v.dim:
            raise ValueError("u and v have different dims (%d vs %d)"
                             % (self.u.dim, self.v.dim))

    @property
    def dim(self) -> int:
        return self.u.dim

    def value(self, x) -> float:
        return eval_quadratic(self.u, x) - eval_quadratic(self.v, x)

    def difference(self):
        """Assembled coefficients ``(Qu - Qv, qu - qv, ru - rv)``."""
        return (self.u.Q.data - self.v.Q.data,
                self.u.q - self.v.q,
                self.u.r - self.v.r)


def shift_dc_pair(g: DCPair, rho: float) -> DCPair:
    """Add ``rho/2 ||x||^2`` to both parts; the difference is unchanged.

    Useful to make both parts strongly convex with parameter >= rho.
    """
    if not rho > 0:
        raise ValueError("rho must be positive, got %r" % (rho,))
    dim = g.dim
    shift = rho * np.eye(dim)
    u = ConvexQuadratic(SymMatrix.from_lower(g.u.Q.data + shift), g.u.q, g.u.r)
    v = ConvexQuadratic(SymMatrix.from_lower(g.v.Q.data + shift), g.v.q, g.v.r)
    return DCPair(u, v)


@dataclass(frozen=True)
class ConvexSetOmega:
    """Box plus optional linear inequalities ``Ax <= b`` and equalities ``Ex = d``.

    Box bounds may be +-inf componentwise.
    """

    lb: np.ndarray
    ub: np.ndarray
    A: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None
    E: Optional[np.ndarray] = None
    d: Optional[np.ndarray] = None

    def __post_init__(self):
        lb = np.array(self.lb, dtype=float).reshape(-1)
        ub = np.array(self.ub, dtype=float).reshape(-1)
        lb.setflags(write=False)
        ub.setflags(write=False)
        object.__setattr__(self, "lb", lb)
        object.__setattr__(self, "ub", ub)
        for mat_name, vec_name in (("A", "b"), ("E", "d")):
            mat = getattr(self, mat_name)
            vec = getattr(self, vec_name)
            if (mat is None) != (vec is None):
                raise ValueError("%s and %s must be given together" % (mat_name, vec_name))
            if mat is not None:
                mat = _frozen(mat)
                if mat.ndim != 2:
                    raise ValueError("%s must be a matrix" % mat_name)
                vec = _frozen(vec).reshape(-1)
                if vec.shape[0] != mat.shape[0]:
                    raise ValueError("%s has %d rows but %s has length %d"
                                     % (mat_name, mat.shape[0], vec_name, vec.shape[0]))
                object.__setattr__(self, mat_name, mat)
                object.__setattr__(self, vec_name, vec)

    @classmethod
    def box(cls, lb, ub) -> "ConvexSetOmega":
        return cls(lb=np.asarray(lb, dtype=float), ub=np.asarray(ub, dtype=float))

    @property
    def dim(self) -> int:
        return self.lb.shape[0]

    def midpoint(self) -> np.ndarray:
        """Box midpoint, clamped for infinite bounds."""
        lo = self.lb
        up = self.ub
        mid = np.zeros(self.dim)
        both = np.isfinite(lo) & np.isfinite(up)
        mid[both] = 0.5 * (lo[both] + up[both])
        only_lo = np.isfinite(lo) & ~np.isfinite(up)
        mid[only_lo] = lo[only_lo] + 1.0
        only_up = ~np.isfinite(lo) & np.isfinite(up)
        mid[only_up] = up[only_up] - 1.0
        return mid

    def violation(self, x) -> float:
        """Largest constraint violation of ``x`` against this set (0 if inside)."""
        x = np.asarray(x, dtype=float)
        viol = 0.0
        viol = max(viol, float(np.max(self.lb - x, initial=-np.inf)))
        viol = max(viol, float(np.max(x - self.ub, initial=-np.inf)))
        if self.A is not None:
            viol = max(viol, float(np.max(self.A @ x - self.b, initial=-np.inf)))
        if self.E is not None:
            viol = max(viol, float(np.max(np.abs(self.E @ x - self.d), initial=0.0)))
        return max(viol, 0.0)

    def contains(self, x, tol=1e-8) -> bool:
        return self.violation(x) <= tol


@dataclass(frozen=True)
class DCProgram:
    """minimize ``f(x)`` subject to ``g_i(x) <= 0`` and ``x in Omega``.

    ``objective`` is a DC pair as well; a zero second part recovers a
    plainly convex objective.
    """

    dim: int
    objective: DCPair
    constraints: tuple
    omega: ConvexSetOmega
    labels: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != len(self.constraints):
                raise ValueError("labels length does not match constraints")
            object.__setattr__(self, "labels", labels)

    @property
    def m(self) -> int:
        return len(self.constraints)

    def label(self, i: int) -> str:
        if self.labels is not None:
            return self.labels[i]
        return "g[%d]" % i

    def f_value(self, x) -> float:
        return self.objective.value(x)

    def g_values(self, x) -> np.ndarray:
        return np.array([c.value(x) for c in self.constraints])

    def feasgap(self, x) -> float:
        """``max(0, max_i g_i(x))``."""
        if not self.constraints:
            return 0.0
        return max(0.0, float(self.g_values(x).max()))


def _check_psd(Q: SymMatrix, tol: Optional[float], name: str, out: list):
    t = psd_tolerance(Q) if tol is None else tol
    if Q.max_abs() == 0.0:
        return
    try:
        w, _ = eigh_symmetric(Q.data)
    except Exception as exc:  # eigensolver failure is itself a diagnostic
        out.append("%s: eigensolver failed (%s)" % (name, exc))
        return
    if w[0] < -t:
        out.append("%s: not PSD (lambda_min = %.3e)" % (name, w[0]))


def validate_program(p: DCProgram, psd_tol: Optional[float] = None) -> list:
    """Return a list of named violations; empty means the program is clean."""
    out: list = []
    dim = p.dim
    if dim <= 0:
        out.append("dim: must be positive")

    def check_dim(d, name):
        if d != dim:
            out.append("%s: dim %d does not match program dim %d" % (name, d, dim))

    check_dim(p.objective.dim, "objective")
    _check_psd(p.objective.u.Q, psd_tol, "objective.f1.Q", out)
    _check_psd(p.objective.v.Q, psd_tol, "objective.f2.Q", out)
    for i, c in enumerate(p.constraints):
        name = p.label(i)
        check_dim(c.dim, name)
        _check_psd(c.u.Q, psd_tol, name + ".u.Q", out)
        _check_psd(c.v.Q, psd_tol, name + ".v.Q", out)

    om = p.omega
    check_dim(om.dim, "omega")
    if np.any(om.lb > om.ub):
        out.append("omega: empty box (lb > ub componentwise)")
    if np.any(np.isnan(om.lb)) or np.any(np.isnan(om.ub)):
        out.append("omega: NaN in box bounds")
    for mat_name, vec_name in (("A", "b"), ("E", "d")):
        mat = getattr(om, mat_name)
        vec = getattr(om, vec_name)
        if mat is not None:
            if not np.isfinite(mat).all() or not np.isfinite(vec).all():
                out.append("omega.%s: non-finite row data" % mat_name)
            if mat.shape[1] != dim:
                out.append("omega.%s: %d columns, expected %d"
                           % (mat_name, mat.shape[1], dim))
    return out
