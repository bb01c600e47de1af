# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled geometry kernels; semantics identical to py_kernels."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef double[7] _FACT = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0]


def signed_volume(verts):
    """Signed k-volume of a (k+1, k) simplex: det of edge rows over k!."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] V = np.ascontiguousarray(verts, dtype=np.float64)
    cdef int k = V.shape[1]
    cdef double det
    cdef double a00, a01, a02, a10, a11, a12, a20, a21, a22
    if k == 0:
        return 1.0
    if k == 1:
        det = V[1, 0] - V[0, 0]
    elif k == 2:
        a00 = V[1, 0] - V[0, 0]; a01 = V[1, 1] - V[0, 1]
        a10 = V[2, 0] - V[0, 0]; a11 = V[2, 1] - V[0, 1]
        det = a00 * a11 - a01 * a10
    elif k == 3:
        a00 = V[1, 0] - V[0, 0]; a01 = V[1, 1] - V[0, 1]; a02 = V[1, 2] - V[0, 2]
        a10 = V[2, 0] - V[0, 0]; a11 = V[2, 1] - V[0, 1]; a12 = V[2, 2] - V[0, 2]
        a20 = V[3, 0] - V[0, 0]; a21 = V[3, 1] - V[0, 1]; a22 = V[3, 2] - V[0, 2]
        det = (a00 * (a11 * a22 - a12 * a21)
               - a01 * (a10 * a22 - a12 * a20)
               + a02 * (a10 * a21 - a11 * a20))
    else:
        det = float(np.linalg.det(np.asarray(V[1:]) - np.asarray(V[0])))
    return det / _FACT[k]


def split_simplex(verts, svals, double tol):
    """Split a simplex by {s = 0}; see py_kernels.split_simplex."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] V = np.ascontiguousarray(verts, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] S = np.ascontiguousarray(svals, dtype=np.float64)
    below = []
    above = []
    _split_rec(V, S, tol, below, above)
    return below, above


cdef void _split_rec(cnp.ndarray[cnp.float64_t, ndim=2] verts,
                     cnp.ndarray[cnp.float64_t, ndim=1] svals,
                     double tol, list below, list above):
    cdef int n = svals.shape[0]
    cdef int k = verts.shape[1]
    cdef bint has_neg = False, has_pos = False
    cdef int a, b, i = -1, j = -1, c
    cdef double si, sj, denom
    for a in range(n):
        if svals[a] < -tol:
            has_neg = True
        elif svals[a] > tol:
            has_pos = True
    if not has_pos:
        below.append(verts)
        return
    if not has_neg:
        above.append(verts)
        return
    for a in range(n):
        if i >= 0:
            break
        for b in range(n):
            if svals[a] < -tol and svals[b] > tol:
                i = a
                j = b
                break
    si = svals[i]
    sj = svals[j]
    denom = sj - si
    cdef cnp.ndarray[cnp.float64_t, ndim=2] v1 = verts.copy()
    cdef cnp.ndarray[cnp.float64_t, ndim=2] v2 = verts.copy()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] s1 = svals.copy()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] s2 = svals.copy()
    for c in range(k):
        v1[j, c] = (sj * verts[i, c] - si * verts[j, c]) / denom
        v2[i, c] = v1[j, c]
    s1[j] = 0.0
    s2[i] = 0.0
    _split_rec(v1, s1, tol, below, above)
    _split_rec(v2, s2, tol, below, above)
