"""Dense symmetric eigendecomposition by the cyclic Jacobi method.

This is the library's only eigensolver: spectral splits and
strong-convexity parameters are computed here rather than delegated to
LAPACK, so results are reproducible down to the rotation order.  Intended
for the desk-scale matrices this package works with (dimension up to a
few hundred).
"""

from __future__ import annotations

import numpy as np

from . import _kernels

__all__ = ["EigensolverError", "eigh_symmetric"]

DEFAULT_OFF_TOL_FACTOR = 1e-12
DEFAULT_MAX_SWEEPS = 100


class EigensolverError(RuntimeError):
    """Raised when the Jacobi sweeps fail to reach the off-diagonal target."""


def eigh_symmetric(a, off_tol_factor=DEFAULT_OFF_TOL_FACTOR,
                   max_sweeps=DEFAULT_MAX_SWEEPS):
    """Eigenvalues and eigenvectors of a dense symmetric matrix.

    Parameters
    ----------
    a : (n, n) array_like
        Symmetric matrix.  Only the values are used; the caller is
        responsible for exact symmetry.
    off_tol_factor : float
        Convergence target: off-diagonal Frobenius norm below
        ``off_tol_factor * ||a||_F``.
    max_sweeps : int
        Cap on full cyclic sweeps; exceeding it raises, it never returns
        a silently unconverged result.

    Returns
    -------
    w : (n,) ndarray
        Eigenvalues in ascending order.
    V : (n, n) ndarray
        Orthonormal eigenvectors, ``V[:, i]`` matching ``w[i]``.
    """
    work = np.array(a, dtype=float, order="C", copy=True)
    if work.ndim != 2 or work.shape[0] != work.shape[1]:
        raise ValueError("expected a square matrix, got shape %r" % (work.shape,))
    n = work.shape[0]
    if n == 0:
        return np.zeros(0), np.zeros((0, 0))
    if not np.isfinite(work).all():
        raise ValueError("matrix has non-finite entries")
    v = np.eye(n)
    if n == 1:
        return work.reshape(1).copy(), v

    norm = np.linalg.norm(work)
    if norm == 0.0:
        return np.zeros(n), v
    off_tol = off_tol_factor * norm
    sweeps = _kernels.jacobi_cycle(work, v, off_tol, max_sweeps)
    if sweeps < 0:
        raise EigensolverError(
            "Jacobi sweeps did not converge within %d sweeps (n=%d)"
            % (max_sweeps, n)
        )
    w = np.diag(work).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]
