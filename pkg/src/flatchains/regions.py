"""Convex regions used by restrictions and cones: polyhedral norm balls,
their Minkowski neighborhoods, and point-to-polytope distances.

Norm balls are exact polytopes for the l1 / l-infinity / polytope kinds and
inscribed vertex hulls (all vertices exactly at norm distance r) for smooth
norms; the facet count of the smooth surrogate is configurable.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ._opt import golden_section_max, sphere_grid
from .chains import OrientedPolytope
from .foundation import INF, NormedSpace

from . import lp


@dataclass
class ConvexRegion:
    """Convex polytope as inward halfspaces plus vertices."""

    halfspaces: list  # [(a, b)] meaning a.x <= b
    vertices: np.ndarray
    exact: bool  # True when the region equals the norm ball exactly

    def contains(self, x, tol=1e-9):
        x = np.asarray(x, dtype=float)
        return all(a @ x <= b + tol for a, b in self.halfspaces)


def ball_polytope(space: NormedSpace, center, radius, facets=64) -> ConvexRegion:
    """Polytope realization of the closed norm ball B(center, radius)."""
    c = np.asarray(center, dtype=float)
    r = float(radius)
    d = space.dim
    if r <= 0:
        raise ValueError("ball radius must be positive")
    H = space.ball_facets
    if H is not None:
        hs = [(h.copy(), float(h @ c) + r) for h in H]
        from .foundation import _ball_vertices_from_facets

        if d <= 3:
            verts = _ball_vertices_from_facets(H, d) * r + c
        else:
            verts = _ball_vertices_sampled(space, d, facets) * r + c
        return ConvexRegion(hs, verts, exact=True)
    if d == 2:
        t = np.arange(facets) * (2 * math.pi / facets)
        dirs = np.column_stack([np.cos(t), np.sin(t)])
        verts = dirs / space.norm(dirs)[:, None] * r + c
        hs = _polygon_halfspaces(verts)
        return ConvexRegion(hs, verts, exact=False)
    verts = _ball_vertices_sampled(space, d, max(facets, 4 * d * d)) * r + c
    hs = _hull_halfspaces(verts)
    return ConvexRegion(hs, verts, exact=False)


def _ball_vertices_sampled(space, d, n):
    dirs = sphere_grid(d, n)
    return dirs / space.norm(dirs)[:, None]


def _polygon_halfspaces(verts):
    """Inward halfspaces of a convex polygon given in hull order."""
    cen = verts.mean(axis=0)
    ang = np.arctan2(verts[:, 1] - cen[1], verts[:, 0] - cen[0])
    V = verts[np.argsort(ang)]
    hs = []
    m = len(V)
    for i in range(m):
        p, q = V[i], V[(i + 1) % m]
        e = q - p
        n = np.array([e[1], -e[0]])
        b = float(n @ p)
        if n @ cen > b:
            n, b = -n, -b
        hs.append((n, b))
    return hs


def _hull_halfspaces(points):
    from scipy.spatial import ConvexHull

    hull = ConvexHull(points, qhull_options="QJ1e-11")
    hs = []
    seen = set()
    for eq in hull.equations:
        n, off = eq[:-1], eq[-1]
        key = tuple(np.round(np.append(n, off), 9))
        if key in seen:
            continue
        seen.add(key)
        hs.append((n.copy(), float(-off)))
    return hs


def minkowski_polygon(vertsA, vertsB):
    """Vertices of conv(A + B) for convex 2-D vertex sets (hull of sums)."""
    sums = (vertsA[:, None, :] + vertsB[None, :, :]).reshape(-1, 2)
    from scipy.spatial import ConvexHull

    hull = ConvexHull(sums)
    return sums[hull.vertices]


def sublevel_region(space, f, r, facets=64) -> ConvexRegion:
    """The convex region {f <= r} for a distance-function spec (d = 2 for
    polytope targets)."""
    from .slicing import DistToPoint, DistToPolytope

    if isinstance(f, DistToPoint):
        return ball_polytope(space, f.point, r, facets)
    if isinstance(f, DistToPolytope):
        if space.dim != 2:
            raise NotImplementedError("polytope-distance sublevels only in d=2")
        ball = ball_polytope(space, np.zeros(2), r, facets)
        verts = minkowski_polygon(np.asarray(f.target_vertices, dtype=float),
                                  ball.vertices)
        return ConvexRegion(_polygon_halfspaces(verts), verts,
                            exact=ball.exact)
    raise TypeError(f"no sublevel region for {type(f)!r}")


# ---------------------------------------------------------------------------
# point-to-polytope distance in the space norm


def distance_to_polytope(space: NormedSpace, poly, x) -> float:
    """min ||x - y|| over the closed polytope (space norm).

    Euclidean: exact face projection. Polytopal norms: exact linear program.
    Other p-norms: nested golden-section over the simplex pieces.
    """
    x = np.asarray(x, dtype=float)
    if isinstance(poly, OrientedPolytope):
        V = poly.vertices
        tris = poly.triangulation_indices
    else:
        V = np.asarray(poly, dtype=float)
        tris = [tuple(range(V.shape[0]))]
    best = float(np.min(space.norm(V - x)))
    for idx in tris:
        S = V[list(idx)]
        best = min(best, _distance_to_simplex(space, S, x))
    return best


def _distance_to_simplex(space, S, x):
    m = S.shape[0]
    if m == 1:
        return float(space.norm(x - S[0]))
    if space.is_euclidean:
        return _euclid_dist_simplex(S, x)
    if space.ball_facets is not None:
        return _lp_dist_polytope(space, S, x)
    return _golden_dist_simplex(space, S, x)


def _euclid_dist_simplex(S, x):
    # project onto the affine hull, then recurse on faces if outside
    D = S[1:] - S[0]
    G = D @ D.T
    try:
        lam = np.linalg.solve(G, D @ (x - S[0]))
    except np.linalg.LinAlgError:
        lam = np.linalg.lstsq(D, x - S[0], rcond=None)[0]
    full = np.concatenate([[1.0 - lam.sum()], lam])
    if np.all(full >= -1e-12):
        y = full @ S
        return float(np.linalg.norm(x - y))
    best = math.inf
    for i in range(S.shape[0]):
        face = np.delete(S, i, axis=0)
        best = min(best, _euclid_dist_simplex(face, x))
    return best


def _lp_dist_polytope(space, S, x):
    # min t s.t. h_j.(x - S^T lam) <= t, lam in simplex
    H = space.ball_facets
    m, d = S.shape[0], S.shape[1]
    nf = H.shape[0]
    # variables: lam (m), t (1), slacks (nf); rows: nf facet rows + 1 sum row
    A = np.zeros((nf + 1, m + 1 + nf))
    b = np.zeros(nf + 1)
    for j in range(nf):
        A[j, :m] = -(H[j] @ S.T)
        A[j, m] = -1.0
        A[j, m + 1 + j] = 1.0
        b[j] = -float(H[j] @ x)
    A[nf, :m] = 1.0
    b[nf] = 1.0
    c = np.zeros(m + 1 + nf)
    c[m] = 1.0
    res = lp.solve_lp(c, A, b)
    return float(res.value)


def _golden_dist_simplex(space, S, x):
    if S.shape[0] == 2:
        def along(t):
            return -space.norm(x - ((1 - t) * S[0] + t * S[1]))

        _, v = golden_section_max(along, 0.0, 1.0, tol=1e-10)
        return -v
    if S.shape[0] == 3:
        def outer(t1):
            def inner(t2):
                y = (1 - t1) * ((1 - t2) * S[0] + t2 * S[1]) + t1 * S[2]
                return -space.norm(x - y)

            _, v = golden_section_max(inner, 0.0, 1.0, tol=1e-9)
            return v

        _, v = golden_section_max(outer, 0.0, 1.0, tol=1e-9)
        return -v
    # higher faces: sample barycentric grid then refine on the best edge pair
    best = math.inf
    for i in range(S.shape[0]):
        best = min(best, _golden_dist_simplex(space, np.delete(S, i, axis=0), x))
    grid = np.random.default_rng(7).dirichlet(np.ones(S.shape[0]), size=64)
    for lam in grid:
        best = min(best, float(space.norm(x - lam @ S)))
    return best
