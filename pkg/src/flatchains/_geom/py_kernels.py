"""Pure-Python geometry kernels (reference twin of the compiled extension).

A k-simplex is a (k+1, k) float64 array of vertices in plane coordinates.
``split_simplex`` cuts one by the hyperplane {s = 0}, where the caller supplies
the signed values s_i of an affine functional at the vertices; the cut point
on a crossing edge is computed once and shared by the pieces on both sides,
so adjacent output simplices match bit-for-bit.
"""

import numpy as np

_FACT = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0]


def signed_volume(verts):
    """Signed k-volume of a (k+1, k) simplex: det of edge rows over k!."""
    verts = np.asarray(verts, dtype=float)
    k = verts.shape[1]
    if k == 0:
        return 1.0
    E = verts[1:] - verts[0]
    if k == 1:
        det = E[0, 0]
    elif k == 2:
        det = E[0, 0] * E[1, 1] - E[0, 1] * E[1, 0]
    else:
        det = float(np.linalg.det(E))
    return det / _FACT[k]


def split_simplex(verts, svals, tol):
    """Split a simplex by the zero set of an affine functional.

    Returns (below, above): lists of (k+1, k) vertex arrays whose interiors
    partition the input across {s < 0} and {s > 0}. Vertices with |s| <= tol
    count as on the hyperplane. Orientation (sign of the vertex-order
    determinant) is inherited by every piece.
    """
    verts = np.asarray(verts, dtype=float)
    svals = np.asarray(svals, dtype=float)
    below, above = [], []
    _split_rec(verts, svals, float(tol), below, above)
    return below, above


def _split_rec(verts, svals, tol, below, above):
    n = svals.shape[0]
    has_neg = False
    has_pos = False
    for i in range(n):
        if svals[i] < -tol:
            has_neg = True
        elif svals[i] > tol:
            has_pos = True
    if not has_pos:
        below.append(verts)
        return
    if not has_neg:
        above.append(verts)
        return
    # first crossing edge in lexicographic order
    i = j = -1
    for a in range(n):
        if i >= 0:
            break
        for b in range(n):
            if svals[a] < -tol and svals[b] > tol:
                i, j = a, b
                break
    si, sj = svals[i], svals[j]
    x = (sj * verts[i] - si * verts[j]) / (sj - si)
    # replacing an endpoint of the crossing edge by the cut point keeps the
    # sign of the vertex-order determinant on both pieces
    v1 = verts.copy()
    v1[j] = x
    s1 = svals.copy()
    s1[j] = 0.0
    v2 = verts.copy()
    v2[i] = x
    s2 = svals.copy()
    s2[i] = 0.0
    _split_rec(v1, s1, tol, below, above)
    _split_rec(v2, s2, tol, below, above)
