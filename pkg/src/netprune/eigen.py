"""Jacobi eigendecomposition and PSD projection for symmetric matrices.

The cyclic-by-row Jacobi sweep is the eigensolver backing every cone
projection in the conic solver; it is compiled with numba because it runs
inside the solver's hot loop.
"""

import numpy as np
from numba import njit

MAX_SWEEPS = 100
SWEEP_TOL = 1e-12


@njit(cache=True)
def _jacobi_sweeps(a, v, max_sweeps, rel_tol):
    """Diagonalize symmetric `a` in place, accumulating rotations into `v`.

    Returns the number of sweeps performed. Convergence: off-diagonal
    Frobenius norm below rel_tol times the Frobenius norm of the input.
    """
    d = a.shape[0]
    fro = 0.0
    for i in range(d):
        for j in range(d):
            fro += a[i, j] * a[i, j]
    fro = np.sqrt(fro)
    if fro == 0.0:
        return 0
    thresh = rel_tol * fro
    sweeps = 0
    while sweeps < max_sweeps:
        off = 0.0
        for i in range(d - 1):
            for j in range(i + 1, d):
                off += 2.0 * a[i, j] * a[i, j]
        if np.sqrt(off) <= thresh:
            break
        sweeps += 1
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                for k in range(d):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(d):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                for k in range(d):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    return sweeps


def _check_symmetric(a):
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 0.0)
    if float(np.max(np.abs(a - a.T))) > 1e-10 * scale:
        raise ValueError("matrix is not symmetric")


def jacobi_eigen(matrix):
    """Eigendecomposition of a symmetric matrix via cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors) with eigenvalues sorted descending
    and eigenvectors as the matching orthonormal columns, so that
    matrix == V @ diag(w) @ V.T up to roundoff.
    """
    a = np.array(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    _check_symmetric(a)
    d = a.shape[0]
    if d == 1:
        return a[0].copy(), np.ones((1, 1))
    work = np.ascontiguousarray(0.5 * (a + a.T))
    vecs = np.eye(d)
    _jacobi_sweeps(work, vecs, MAX_SWEEPS, SWEEP_TOL)
    vals = np.diag(work).copy()
    order = np.argsort(-vals, kind="stable")
    return vals[order], np.ascontiguousarray(vecs[:, order])


def project_psd(matrix):
    """Nearest (Frobenius) positive semidefinite matrix: clip negative eigenvalues."""
    vals, vecs = jacobi_eigen(matrix)
    if vals.size == 0 or vals[-1] >= 0.0:
        a = np.asarray(matrix, dtype=np.float64)
        return 0.5 * (a + a.T)
    clipped = np.maximum(vals, 0.0)
    out = (vecs * clipped) @ vecs.T
    return 0.5 * (out + out.T)
