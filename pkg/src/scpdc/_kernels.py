"""Hot numeric kernels, with numba-jitted and pure-numpy implementations.

Two kernel families dominate solver runtime: the cyclic Jacobi
eigendecomposition sweeps (every strong-convexity parameter and spectral
split goes through them) and the batched evaluation of quadratic
constraints inside the barrier Newton loop.

Backend selection is controlled by the environment variable
``SCPDC_NUMBA``:

* ``auto`` (default): use numba when importable, else numpy.
* ``1`` / ``on``:     require numba; raise if it cannot be imported.
* ``0`` / ``off``:    force the pure-numpy implementations.

Both implementations of each kernel are always exported through
``IMPLEMENTATIONS`` so the benchmark harness can time them side by side.
"""

from __future__ import annotations

import math
import os

import numpy as np

__all__ = [
    "BACKEND",
    "NUMBA_AVAILABLE",
    "IMPLEMENTATIONS",
    "jacobi_cycle",
    "qc_eval",
    "qc_hess_accum",
]


# ---------------------------------------------------------------------------
# Reference implementations (plain Python loops; these are what numba jits).
# ---------------------------------------------------------------------------

def _jacobi_cycle_loops(a, v, off_tol, max_sweeps):
    """Cyclic-by-row Jacobi sweeps on the symmetric matrix ``a`` (in place).

    ``v`` accumulates the rotations (columns end up as eigenvectors).
    Returns the number of sweeps performed, or -1 if the off-diagonal
    Frobenius norm is still above ``off_tol`` after ``max_sweeps`` sweeps.
    """
    n = a.shape[0]
    for sweep in range(max_sweeps + 1):
        off_sq = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off_sq += a[p, q] * a[p, q]
        if math.sqrt(2.0 * off_sq) <= off_tol:
            return sweep
        if sweep == max_sweeps:
            return -1
        # entries below skip cannot push the off-norm above off_tol
        skip = off_tol / n
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= skip:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                theta = (aqq - app) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + math.sqrt(1.0 + theta * theta))
                else:
                    t = -1.0 / (-theta + math.sqrt(1.0 + theta * theta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                tau = s / (1.0 + c)
                for i in range(n):
                    if i != p and i != q:
                        aip = a[i, p]
                        aiq = a[i, q]
                        a[i, p] = aip - s * (aiq + tau * aip)
                        a[p, i] = a[i, p]
                        a[i, q] = aiq + s * (aip - tau * aiq)
                        a[q, i] = a[i, q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for i in range(n):
                    vip = v[i, p]
                    viq = v[i, q]
                    v[i, p] = vip - s * (viq + tau * vip)
                    v[i, q] = viq + s * (vip - tau * viq)
    return -1


def _qc_eval_loops(Qs, qs, rs, z):
    """Values and gradients of m quadratics 0.5 z'Q z + q'z + r at ``z``."""
    m = Qs.shape[0]
    n = z.shape[0]
    vals = np.empty(m)
    grads = np.empty((m, n))
    for i in range(m):
        acc = 0.0
        for j in range(n):
            qz = 0.0
            for k in range(n):
                qz += Qs[i, j, k] * z[k]
            grads[i, j] = qz + qs[i, j]
            acc += z[j] * qz
        vals[i] = 0.5 * acc
        for j in range(n):
            vals[i] += qs[i, j] * z[j]
        vals[i] += rs[i]
    return vals, grads


def _qc_hess_accum_loops(Qs, grads, w_lin, w_quad, out):
    """out += sum_i w_lin[i]*Qs[i] + w_quad[i]*grads[i] grads[i]'."""
    m = Qs.shape[0]
    n = out.shape[0]
    for i in range(m):
        wl = w_lin[i]
        wq = w_quad[i]
        for j in range(n):
            gj = grads[i, j]
            for k in range(n):
                out[j, k] += wl * Qs[i, j, k] + wq * gj * grads[i, k]


# ---------------------------------------------------------------------------
# Vectorized numpy fallbacks.
# ---------------------------------------------------------------------------

def _jacobi_cycle_numpy(a, v, off_tol, max_sweeps):
    n = a.shape[0]
    for sweep in range(max_sweeps + 1):
        off = math.sqrt(2.0) * np.linalg.norm(np.triu(a, 1))
        if off <= off_tol:
            return sweep
        if sweep == max_sweeps:
            return -1
        skip = off_tol / n
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= skip:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                theta = (aqq - app) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + math.sqrt(1.0 + theta * theta))
                else:
                    t = -1.0 / (-theta + math.sqrt(1.0 + theta * theta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                tau = s / (1.0 + c)
                colp = a[:, p].copy()
                colq = a[:, q].copy()
                newp = colp - s * (colq + tau * colp)
                newq = colq + s * (colp - tau * colq)
                a[:, p] = newp
                a[:, q] = newq
                a[p, :] = newp
                a[q, :] = newq
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = vp - s * (vq + tau * vp)
                v[:, q] = vq + s * (vp - tau * vq)
    return -1


def _qc_eval_numpy(Qs, qs, rs, z):
    if Qs.shape[0] == 0:
        return np.zeros(0), np.zeros((0, z.shape[0]))
    Qz = Qs @ z
    vals = 0.5 * (Qz @ z) + qs @ z + rs
    grads = Qz + qs
    return vals, grads


def _qc_hess_accum_numpy(Qs, grads, w_lin, w_quad, out):
    if Qs.shape[0] == 0:
        return
    out += np.einsum("i,ijk->jk", w_lin, Qs)
    out += grads.T @ (grads * w_quad[:, None])


# ---------------------------------------------------------------------------
# Backend selection.
# ---------------------------------------------------------------------------

def _build_numba_kernels():
    from numba import njit

    jit = njit(cache=True, fastmath=False)
    return {
        "jacobi_cycle": jit(_jacobi_cycle_loops),
        "qc_eval": jit(_qc_eval_loops),
        "qc_hess_accum": jit(_qc_hess_accum_loops),
    }


_NUMPY_KERNELS = {
    "jacobi_cycle": _jacobi_cycle_numpy,
    "qc_eval": _qc_eval_numpy,
    "qc_hess_accum": _qc_hess_accum_numpy,
}

_flag = os.environ.get("SCPDC_NUMBA", "auto").strip().lower()

NUMBA_AVAILABLE = False
_numba_kernels = None
if _flag not in ("0", "off", "false", "numpy"):
    try:
        _numba_kernels = _build_numba_kernels()
        NUMBA_AVAILABLE = True
    except ImportError:
        if _flag in ("1", "on", "true", "numba"):
            raise RuntimeError(
                "SCPDC_NUMBA=%s requires numba, which failed to import" % _flag
            )

if NUMBA_AVAILABLE:
    BACKEND = "numba"
    _active = _numba_kernels
else:
    BACKEND = "numpy"
    _active = _NUMPY_KERNELS

jacobi_cycle = _active["jacobi_cycle"]
qc_eval = _active["qc_eval"]
qc_hess_accum = _active["qc_hess_accum"]

IMPLEMENTATIONS = {"numpy": _NUMPY_KERNELS}
if NUMBA_AVAILABLE:
    IMPLEMENTATIONS["numba"] = _numba_kernels
