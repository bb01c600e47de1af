"""Oriented convex polytopes, polyhedral chain algebra, canonicalization,
boundary, support, and serialization.

Internal normal form: every summand is triangulated (lazily) into simplices
expressed in the canonical coordinates of its affine plane, with vertex order
normalized to positive orientation and the orientation sign absorbed into the
coefficient. Plane frames are canonical functions of the subspace (rounded
reduced row echelon form, then Gram-Schmidt), so summands lying in one plane
always share coordinates bit-for-bit and boundary facets cancel exactly.

Geometric tolerance is 1e-9 relative to the operand's extent; degenerate
summands map to the zero chain.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _geom
from .foundation import CoefficientGroup, DimensionMismatch, NormedSpace

REL_TOL = 1e-9
_KEY_DECIMALS = 9


class ChainError(ValueError):
    pass


class InvariantViolation(ChainError):
    pass


class DegeneratePolytope(ChainError):
    """Summand with zero k-volume; maps to the zero chain at chain level."""


# ---------------------------------------------------------------------------
# canonical plane frames


def _rref(rows, tol=1e-12):
    """Reduced echelon representative of the row space, full pivoting.

    The pivot at each step is the largest remaining entry by magnitude, so a
    near-zero leading component never becomes a divisor; given the pivot
    column set the reduced form is the unique echelon representative of the
    subspace, which makes the result stable under perturbations of the
    spanning set. Rows come back ordered by pivot column.
    """
    A = np.array(rows, dtype=float)
    m, n = A.shape
    scale = max(1.0, np.abs(A).max(initial=0.0))
    pivots = []
    free = list(range(n))
    r = 0
    while r < m and free:
        block = np.abs(A[r:, free])
        flat = int(np.argmax(block))
        ri, ci = divmod(flat, len(free))
        col = free[ci]
        if block[ri, ci] <= tol * scale:
            break
        piv = r + ri
        A[[r, piv]] = A[[piv, r]]
        A[r] = A[r] / A[r, col]
        for i in range(m):
            if i != r:
                A[i] = A[i] - A[i, col] * A[r]
        pivots.append(col)
        free.remove(col)
        r += 1
    order = np.argsort(pivots)
    return A[:r][order]


def _gram_schmidt(rows):
    out = []
    for v in rows:
        w = v.copy()
        for u in out:
            w -= (w @ u) * u
        nrm = np.linalg.norm(w)
        if nrm <= 1e-13:
            continue
        out.append(w / nrm)
    return np.array(out) if out else np.zeros((0, rows.shape[1]))


def _round_key(arr):
    r = np.round(np.asarray(arr, dtype=float), _KEY_DECIMALS) + 0.0
    return tuple(map(tuple, r)) if r.ndim == 2 else tuple(r)


class PlaneKey:
    """Canonical orthonormal basis of a k-dimensional direction subspace.

    Two spanning sets of the same subspace produce the same key: the basis is
    the Gram-Schmidt frame of the rounded reduced row echelon form, which is
    a function of the subspace alone.
    """

    __slots__ = ("basis", "key", "k", "dim")

    def __init__(self, basis: np.ndarray):
        self.basis = basis
        self.k = basis.shape[0]
        self.dim = basis.shape[1]
        self.key = (self.k, self.dim, _round_key(basis))

    @classmethod
    def from_directions(cls, dirs) -> "PlaneKey":
        dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
        R = np.round(_rref(dirs), 12) + 0.0
        U = _gram_schmidt(R)
        if U.shape[0] != dirs.shape[0]:
            raise InvariantViolation("direction vectors are linearly dependent")
        return cls(U)

    def __eq__(self, other):
        return isinstance(other, PlaneKey) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"PlaneKey(k={self.k}, dim={self.dim})"


# ---------------------------------------------------------------------------
# oriented polytopes


class OrientedPolytope:
    """Convex k-polytope in R^d with an explicit ordered orientation basis."""

    def __init__(self, vertices, orientation_basis, validate=True):
        V = np.asarray(vertices, dtype=float)
        B = np.asarray(orientation_basis, dtype=float)
        if V.ndim != 2:
            raise InvariantViolation("vertices must be a 2-D array of points")
        if B.ndim != 2 or B.shape[1] != V.shape[1]:
            B = B.reshape((-1, V.shape[1])) if B.size else np.zeros((0, V.shape[1]))
        self.vertices = V
        self.orientation_basis = B
        if validate:
            self._validate()

    def _validate(self):
        V, B = self.vertices, self.orientation_basis
        k, d = B.shape[0], V.shape[1]
        if k > d:
            raise InvariantViolation(f"k={k} exceeds ambient dimension {d}")
        if V.shape[0] < k + 1:
            raise DegeneratePolytope("too few vertices to span the dimension")
        if k == 0:
            return
        scale = max(1.0, np.abs(V).max())
        s = np.linalg.svd(B, compute_uv=False)
        if s[-1] <= 1e-9 * max(1.0, s[0]):
            raise InvariantViolation("orientation basis is linearly dependent")
        U = self.plane.basis
        rel = V - V[0]
        resid = rel - (rel @ U.T) @ U
        if np.abs(resid).max(initial=0.0) > 10 * REL_TOL * scale:
            raise InvariantViolation("vertices do not lie in one affine k-flat")
        sv = np.linalg.svd(rel @ U.T, compute_uv=False)
        if sv.size < k or sv[k - 1] <= REL_TOL * scale:
            raise DegeneratePolytope("vertex hull has zero k-volume")
        if self.volume <= REL_TOL * scale ** k:
            raise DegeneratePolytope("vertex hull has zero k-volume")

    @property
    def k(self):
        return self.orientation_basis.shape[0]

    @property
    def ambient_dim(self):
        return self.vertices.shape[1]

    @cached_property
    def plane(self) -> PlaneKey:
        if self.k == 0:
            return PlaneKey(np.zeros((0, self.ambient_dim)))
        return PlaneKey.from_directions(self.orientation_basis)

    @cached_property
    def plane_base(self):
        """Canonical base point: orthocomplement component of the flat."""
        U = self.plane.basis
        v0 = self.vertices[0]
        return v0 - (v0 @ U.T) @ U

    @cached_property
    def affine_key(self):
        return (self.plane.key, _round_key(self.plane_base))

    def coords_in(self, U, base):
        return (self.vertices - base) @ U.T

    @cached_property
    def triangulation_indices(self):
        """Vertex-index simplices covering the hull (k <= 3)."""
        k = self.k
        m = self.vertices.shape[0]
        if k == 0:
            return [(0,)]
        if m == k + 1:
            return [tuple(range(k + 1))]
        C = self.coords_in(self.plane.basis, self.plane_base)
        if k == 1:
            order = np.argsort(C[:, 0])
            return [(int(order[0]), int(order[-1]))]
        from scipy.spatial import Delaunay

        tri = Delaunay(C, qhull_options="QJ1e-10")
        out = []
        for simp in tri.simplices:
            verts = C[simp]
            if abs(_geom.signed_volume(verts)) > 1e-13 * max(1.0, np.abs(C).max()) ** k:
                out.append(tuple(int(i) for i in simp))
        if not out:
            raise DegeneratePolytope("triangulation produced no full cells")
        return out

    def cells_in(self, U, base):
        """Positively oriented simplices (plane coords) and the sign carried
        by the polytope's orientation basis in this frame."""
        C = self.coords_in(U, base)
        cells = []
        for idx in self.triangulation_indices:
            verts = np.ascontiguousarray(C[list(idx)])
            if _geom.signed_volume(verts) < 0:
                verts = verts.copy()
                verts[[0, 1]] = verts[[1, 0]]
            cells.append(verts)
        bsign = 1.0 if self.k == 0 else np.sign(np.linalg.det(self.orientation_basis @ U.T))
        return cells, int(bsign if bsign != 0 else 1)

    @cached_property
    def volume(self):
        """Euclidean k-volume of the vertex hull."""
        if self.k == 0:
            return 1.0
        U, base = self.plane.basis, self.plane_base
        C = self.coords_in(U, base)
        total = 0.0
        for idx in self.triangulation_indices:
            total += abs(_geom.signed_volume(C[list(idx)]))
        return total

    @cached_property
    def digest(self):
        return (self.plane.key if self.k else ("pt",), _round_key(self.plane_base) if self.k else (),
                tuple(sorted(_round_key(self.vertices))))

    def centroid(self):
        return self.vertices.mean(axis=0)

    def diameter(self, space: NormedSpace) -> float:
        """Diameter of the closed polytope in the space norm (vertex pairs)."""
        V = self.vertices
        diffs = V[:, None, :] - V[None, :, :]
        return float(np.max(space.norm(diffs.reshape(-1, V.shape[1]))))

    def translated(self, t):
        return OrientedPolytope(self.vertices + np.asarray(t, dtype=float),
                                self.orientation_basis, validate=False)

    def __repr__(self):
        return f"OrientedPolytope(k={self.k}, d={self.ambient_dim}, verts={len(self.vertices)})"


def simplex_polytope(vertices, validate=True) -> OrientedPolytope:
    """Oriented simplex whose orientation is its vertex order."""
    V = np.asarray(vertices, dtype=float)
    B = V[1:] - V[0]
    return OrientedPolytope(V, B, validate=validate)


@dataclass
class SimpleChain:
    """One coefficient-weighted oriented polytope."""

    coeff: object
    poly: OrientedPolytope


@dataclass
class ChainNorms:
    mass: float
    boundary_mass: float

    @property
    def n_value(self):
        return self.mass + self.boundary_mass


class PolyChain:
    """Formal sum of coefficient-weighted oriented convex polytopes."""

    def __init__(self, space: NormedSpace, group: CoefficientGroup, k: int,
                 summands, canonical=False):
        self.space = space
        self.group = group
        self.k = int(k)
        if not (0 <= self.k <= space.dim):
            raise ChainError(f"chain dimension k={k} outside 0..{space.dim}")
        kept = []
        for i, s in enumerate(summands):
            if s.poly.ambient_dim != space.dim:
                raise DimensionMismatch(f"summand {i}: ambient dim mismatch")
            if s.poly.k != self.k:
                raise ChainError(f"summand {i}: polytope dimension {s.poly.k} != k={k}")
            coeff = group.coerce(s.coeff)
            if group.is_zero(coeff):
                continue
            kept.append(SimpleChain(coeff, s.poly))
        self.summands = kept
        self.is_canonical = canonical and len(kept) == len(list(summands))

    @classmethod
    def zero(cls, space, group, k):
        return cls(space, group, k, [], canonical=True)

    @property
    def is_zero(self):
        return not self.summands

    def __len__(self):
        return len(self.summands)

    def __neg__(self):
        out = PolyChain(self.space, self.group, self.k,
                        [SimpleChain(self.group.neg(s.coeff), s.poly) for s in self.summands])
        out.is_canonical = self.is_canonical
        return out

    def __add__(self, other):
        self._check_compatible(other)
        return canonicalize(PolyChain(self.space, self.group, self.k,
                                      self.summands + other.summands))

    def __sub__(self, other):
        return self + (-other)

    def _check_compatible(self, other):
        if not isinstance(other, PolyChain):
            raise ChainError("can only add polyhedral chains")
        self.group.require_same(other.group)
        if self.space != other.space or self.k != other.k:
            raise ChainError("chains live in different spaces or dimensions")

    def scale_extent(self) -> float:
        if self.is_zero:
            return 1.0
        hi = max(np.abs(s.poly.vertices).max() for s in self.summands)
        return max(1.0, float(hi))

    def bounding_box(self):
        if self.is_zero:
            return None
        V = np.vstack([s.poly.vertices for s in self.summands])
        return V.min(axis=0), V.max(axis=0)

    def copy_with(self, summands, canonical=False):
        return PolyChain(self.space, self.group, self.k, summands, canonical=canonical)

    def __repr__(self):
        return (f"PolyChain(k={self.k}, d={self.space.dim}, group={self.group}, "
                f"summands={len(self.summands)})")


# ---------------------------------------------------------------------------
# plane-coordinate cell machinery


def simplex_halfspaces(verts):
    """Inward halfspaces (a, b) with the simplex = {x : a.x <= b}."""
    k = verts.shape[1]
    out = []
    for i in range(k + 1):
        others = [j for j in range(k + 1) if j != i]
        f0 = verts[others[0]]
        if k == 1:
            n = np.array([1.0])
        elif k == 2:
            e = verts[others[1]] - f0
            n = np.array([e[1], -e[0]])
        else:
            e1 = verts[others[1]] - f0
            e2 = verts[others[2]] - f0
            n = np.cross(e1, e2)
        b = float(n @ f0)
        if float(n @ verts[i]) > b:
            n, b = -n, -b
        out.append((n, b))
    return out


def split_by_cell(P, halfspaces, tol):
    """Partition simplex P into (inside, outside) pieces w.r.t. a convex cell
    given by its inward halfspaces."""
    inside = [P]
    outside = []
    for a, b in halfspaces:
        nxt = []
        for S in inside:
            svals = S @ a - b
            below, above = _geom.split_simplex(S, svals, tol)
            outside.extend(above)
            nxt.extend(below)
        inside = nxt
        if not inside:
            break
    return inside, outside


def _cells_volume(cells):
    return sum(abs(_geom.signed_volume(c)) for c in cells)


def _insert_cell(cells, S, g, group, vol_tol, lin_tol):
    """Insert simplex S with coefficient g into a disjoint cell list in place."""
    pieces = [S]
    result = []
    for C, gc in cells:
        if not pieces:
            result.append((C, gc))
            continue
        # cheap bounding-box rejection
        lo, hi = C.min(axis=0), C.max(axis=0)
        hs = None
        still = []
        remnant = [(C, gc)]
        for P in pieces:
            if np.any(P.min(axis=0) > hi + lin_tol) or np.any(P.max(axis=0) < lo - lin_tol):
                still.append(P)
                continue
            if hs is None:
                hs = simplex_halfspaces(C)
            inter, outer = split_by_cell(P, hs, lin_tol)
            if _cells_volume(inter) <= vol_tol:
                still.append(P)
                continue
            still.extend(q for q in outer if abs(_geom.signed_volume(q)) > vol_tol)
            hsP = simplex_halfspaces(P)
            new_remnant = []
            for Cr, gcr in remnant:
                interCr, outerCr = split_by_cell(Cr, hsP, lin_tol)
                if _cells_volume(interCr) <= vol_tol:
                    new_remnant.append((Cr, gcr))
                    continue
                merged = group.add(gcr, g)
                if not group.is_zero(merged, 1e-12):
                    for q in interCr:
                        if abs(_geom.signed_volume(q)) > vol_tol:
                            new_remnant.append((q, merged))
                for q in outerCr:
                    if abs(_geom.signed_volume(q)) > vol_tol:
                        new_remnant.append((q, gcr))
            remnant = new_remnant
        result.extend(remnant)
        pieces = still
    result.extend((P, g) for P in pieces if abs(_geom.signed_volume(P)) > vol_tol)
    cells[:] = result


def _positive(verts):
    if _geom.signed_volume(verts) < 0:
        verts = verts.copy()
        verts[[0, 1]] = verts[[1, 0]]
    return verts


# ---------------------------------------------------------------------------
# canonicalization


def canonicalize(chain: PolyChain, refine: bool = True) -> PolyChain:
    """Canonical representative: pairwise disjoint relative interiors, merged
    coefficients, no zero or degenerate summands. Mass-preserving.

    Duplicate polytopes merge without subdivision; genuinely overlapping
    summands are refined into a common simplicial decomposition of their
    plane. Disjoint summands pass through untouched. ``refine=False`` stops
    after duplicate merging (used where overlapping summands are legitimate
    and exact summand-wise cancellation matters more than disjointness).
    """
    if chain.is_canonical:
        return chain
    group = chain.group
    if chain.k == 0:
        merged = {}
        for s in chain.summands:
            key = _round_key(s.poly.vertices[0])
            if key in merged:
                coeff, poly = merged[key]
                merged[key] = (group.add(coeff, s.coeff), poly)
            else:
                merged[key] = (s.coeff, s.poly)
        out = [SimpleChain(c, p) for c, p in merged.values() if not group.is_zero(c, 1e-12)]
        out.sort(key=lambda s: s.poly.digest)
        return chain.copy_with(out, canonical=True)

    scale = chain.scale_extent()
    lin_tol = REL_TOL * scale
    vol_tol = REL_TOL * scale ** chain.k

    # group by affine plane
    by_plane = {}
    for s in chain.summands:
        by_plane.setdefault(s.poly.affine_key, []).append(s)

    out = []
    for _, members in sorted(by_plane.items(), key=lambda kv: kv[0]):
        # stage A: merge exact-duplicate polytopes (orientation-aware)
        U = members[0].poly.plane.basis
        base = members[0].poly.plane_base
        by_digest = {}
        for s in members:
            d = s.poly.digest
            sgn = np.sign(np.linalg.det(s.poly.orientation_basis @ U.T)) or 1.0
            if d in by_digest:
                coeff, rep, rep_sgn = by_digest[d]
                add = s.coeff if sgn == rep_sgn else group.neg(s.coeff)
                by_digest[d] = (group.add(coeff, add), rep, rep_sgn)
            else:
                by_digest[d] = (s.coeff, s.poly, sgn)
        merged = [(c, p, sg) for c, p, sg in by_digest.values()
                  if not group.is_zero(c, 1e-12)]

        # stage B: find genuinely overlapping clusters
        n = len(merged)
        parent = list(range(n))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        coords = [p.coords_in(U, base) for _, p, _ in merged]
        boxes = [(c.min(axis=0), c.max(axis=0)) for c in coords]
        tris = [p.triangulation_indices for _, p, _ in merged]
        for i in range(n):
            for j in range(i + 1, n):
                if np.any(boxes[i][0] > boxes[j][1] + lin_tol) or \
                   np.any(boxes[i][1] < boxes[j][0] - lin_tol):
                    continue
                if _polys_overlap(coords[i], tris[i], coords[j], tris[j], lin_tol, vol_tol):
                    ri, rj = find(i), find(j)
                    if ri != rj:
                        parent[ri] = rj

        clusters = {}
        for i in range(n):
            clusters.setdefault(find(i), []).append(i)

        for root in sorted(clusters):
            idxs = clusters[root]
            if len(idxs) == 1:
                c, p, _ = merged[idxs[0]]
                out.append(SimpleChain(c, p))
                continue
            cells = []
            for i in idxs:
                coeff, poly, _ = merged[i]
                cls, bsign = poly.cells_in(U, base)
                signed = coeff if bsign > 0 else group.neg(coeff)
                for cell in cls:
                    _insert_cell(cells, cell, signed, group, vol_tol, lin_tol)
            for verts_pc, coeff in cells:
                if group.is_zero(coeff, 1e-12):
                    continue
                amb = base + verts_pc @ U
                out.append(SimpleChain(coeff, OrientedPolytope(amb, U, validate=False)))

    out.sort(key=lambda s: s.poly.digest)
    return chain.copy_with(out, canonical=True)


def _polys_overlap(coordsA, trisA, coordsB, trisB, lin_tol, vol_tol):
    for ib in trisB:
        hs = simplex_halfspaces(_positive(coordsB[list(ib)]))
        for ia in trisA:
            P = _positive(coordsA[list(ia)])
            inter, _ = split_by_cell(P, hs, lin_tol)
            if _cells_volume(inter) > vol_tol:
                return True
    return False


# ---------------------------------------------------------------------------
# boundary, support, pushforward


def boundary(chain: PolyChain) -> PolyChain:
    """Facets with induced orientation and inherited coefficients; dd = 0."""
    if chain.k == 0:
        raise ChainError("0-chains have no boundary")
    group = chain.group
    parts = []
    for s in chain.summands:
        poly = s.poly
        U, base = poly.plane.basis, poly.plane_base
        cells, bsign = poly.cells_in(U, base)
        g_plus = s.coeff if bsign > 0 else group.neg(s.coeff)
        g_minus = group.neg(g_plus)
        for verts_pc in cells:
            amb = base + verts_pc @ U
            for i in range(chain.k + 1):
                fv = np.delete(amb, i, axis=0)
                coeff = g_plus if i % 2 == 0 else g_minus
                if chain.k == 1:
                    fp = OrientedPolytope(fv, np.zeros((0, amb.shape[1])), validate=False)
                else:
                    fp = OrientedPolytope(fv, fv[1:] - fv[0], validate=False)
                parts.append(SimpleChain(coeff, fp))
    raw = PolyChain(chain.space, group, chain.k - 1, parts)
    return canonicalize(raw)


def support(chain: PolyChain):
    """Closed support: the list of (closed) summand polytopes."""
    return [s.poly for s in chain.summands]


def support_distance(space: NormedSpace, chain: PolyChain, x) -> float:
    """Distance (space norm) from a point to the support; inf for zero chain."""
    from .regions import distance_to_polytope

    if chain.is_zero:
        return float("inf")
    return min(distance_to_polytope(space, s.poly, x) for s in chain.summands)


def affine_pushforward(chain: PolyChain, matrix, shift=None) -> PolyChain:
    """Push the chain through x -> A x + t; A must be injective (square)."""
    A = np.asarray(matrix, dtype=float)
    d = chain.space.dim
    if A.shape != (d, d):
        raise ChainError(f"transform must be {d}x{d}")
    if abs(np.linalg.det(A)) <= 1e-12:
        raise ChainError("transform is not injective")
    t = np.zeros(d) if shift is None else np.asarray(shift, dtype=float)
    outs = []
    for s in chain.summands:
        verts = s.poly.vertices @ A.T + t
        basis = s.poly.orientation_basis @ A.T
        outs.append(SimpleChain(s.coeff, OrientedPolytope(verts, basis, validate=False)))
    out = chain.copy_with(outs)
    out.is_canonical = chain.is_canonical
    return out


def scaled(chain: PolyChain, r: float) -> PolyChain:
    return affine_pushforward(chain, np.eye(chain.space.dim) * float(r))


# ---------------------------------------------------------------------------
# halfspace clipping of chains (shared by slicing / cones)


def clip_chain(chain: PolyChain, normal, offset, tol=None):
    """Split a canonical chain by the ambient halfspace {normal.x <= offset}.

    Returns (below, above) as canonical chains; measure-zero overlap on the
    cut hyperplane is immaterial.
    """
    chain = canonicalize(chain)
    a = np.asarray(normal, dtype=float)
    if tol is None:
        tol = REL_TOL * chain.scale_extent() * max(1.0, np.linalg.norm(a))
    group = chain.group
    below_parts, above_parts = [], []
    if chain.k == 0:
        for s in chain.summands:
            val = float(s.poly.vertices[0] @ a) - offset
            (below_parts if val <= tol else above_parts).append(s)
    else:
        vol_tol = REL_TOL * chain.scale_extent() ** chain.k
        for s in chain.summands:
            poly = s.poly
            U, base = poly.plane.basis, poly.plane_base
            a_pc = U @ a
            b_pc = float(offset - a @ base)
            cells, bsign = poly.cells_in(U, base)
            signed = s.coeff if bsign > 0 else group.neg(s.coeff)
            if np.linalg.norm(a_pc) <= tol / max(1.0, float(np.abs(poly.vertices).max())):
                side = below_parts if 0.0 <= b_pc + tol else above_parts
                side.append(s)
                continue
            for verts_pc in cells:
                svals = verts_pc @ a_pc - b_pc
                lo, hi = _geom.split_simplex(verts_pc, svals, tol)
                for piece_list, sink in ((lo, below_parts), (hi, above_parts)):
                    for piece in piece_list:
                        if abs(_geom.signed_volume(piece)) <= vol_tol:
                            continue
                        amb = base + _positive(piece) @ U
                        sink.append(SimpleChain(signed, OrientedPolytope(amb, U, validate=False)))
    below = chain.copy_with(below_parts, canonical=True)
    above = chain.copy_with(above_parts, canonical=True)
    return below, above


def clip_chain_polytope(chain: PolyChain, halfspaces, tol=None):
    """Split a chain by a convex region given as inward ambient halfspaces.

    Returns (inside, outside) canonical chains.
    """
    inside = chain
    outside_parts = []
    for a, b in halfspaces:
        inside, above = clip_chain(inside, a, b, tol=tol)
        outside_parts.extend(above.summands)
        if inside.is_zero:
            break
    outside = chain.copy_with(outside_parts, canonical=True)
    return inside, outside


# ---------------------------------------------------------------------------
# serialization (chain file format)


def chain_to_json(chain: PolyChain) -> dict:
    summands = []
    for s in chain.summands:
        summands.append({
            "coeff": chain.group.coeff_to_json(s.coeff),
            "vertices": [[repr(float(x)) for x in row] for row in s.poly.vertices],
            "orientation_basis": [[repr(float(x)) for x in row]
                                  for row in s.poly.orientation_basis],
        })
    return {
        "space": chain.space.to_json(),
        "group": chain.group.to_json(),
        "k": chain.k,
        "summands": summands,
    }


def chain_from_json(obj) -> PolyChain:
    try:
        space = NormedSpace.from_json(obj["space"])
        group = CoefficientGroup.from_json(obj["group"])
        k = int(obj["k"])
    except (KeyError, TypeError) as exc:
        raise ChainError(f"malformed chain file: {exc}")
    summands = []
    for i, s in enumerate(obj.get("summands", [])):
        try:
            verts = np.array([[float(x) for x in row] for row in s["vertices"]])
            basis = np.array([[float(x) for x in row] for row in s["orientation_basis"]])
            if basis.size == 0:
                basis = np.zeros((0, space.dim))
            coeff = group.coeff_from_json(s["coeff"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ChainError(f"summand {i}: malformed entry ({exc})")
        if group.is_zero(coeff):
            continue  # accepted, canonicalized away
        try:
            poly = OrientedPolytope(verts, basis, validate=True)
        except DegeneratePolytope:
            continue  # degenerate summands map to the zero chain
        except InvariantViolation as exc:
            raise InvariantViolation(f"summand {i}: {exc}")
        summands.append(SimpleChain(coeff, poly))
    return PolyChain(space, group, k, summands)


def write_chain(chain: PolyChain, path):
    with open(path, "w") as fh:
        json.dump(chain_to_json(chain), fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_chain(path) -> PolyChain:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ChainError(f"malformed chain file {path}: {exc}")
    return chain_from_json(obj)


def structurally_equal(a: PolyChain, b: PolyChain) -> bool:
    """Bit-level equality of summand sets (for round-trip checks)."""
    if (a.space != b.space or not a.group.same(b.group) or a.k != b.k
            or len(a.summands) != len(b.summands)):
        return False

    def table(ch):
        return sorted((s.poly.digest, ch.group.coeff_to_json(s.coeff),
                       _round_key(s.poly.orientation_basis)) for s in ch.summands)

    return table(a) == table(b)
