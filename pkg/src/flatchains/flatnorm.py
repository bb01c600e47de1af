"""Computable flat-norm upper bounds: fillings on a background simplicial
complex with independently checkable certificates.

The flat norm F(p) = inf_q M(q) + M(p - dq) is approximated from above by
restricting the filling q to the (k+1)-simplices of a Kuhn triangulation of a
box. Real coefficients give a linear program (split positive/negative parts,
residual basis feasible from the start); integer coefficients go through
branch and bound with a fast path when the relaxation is already integral;
small modular problems are enumerated exhaustively.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import lp
from ._geom import signed_volume
from .chains import (
    REL_TOL,
    ChainError,
    OrientedPolytope,
    PolyChain,
    SimpleChain,
    canonicalize,
    simplex_polytope,
    _round_key,
)
from .foundation import CoefficientGroup, NormedSpace
from .mass import density, mass


class FlatNormError(ChainError):
    pass


@dataclass
class SimplicialComplex:
    """Kuhn triangulation of a box with boundary matrices and cell masses."""

    space: NormedSpace
    lo: np.ndarray
    hi: np.ndarray
    resolution: int
    vertices: np.ndarray            # (nv, d)
    simplices: dict                  # j -> list of sorted vertex tuples
    index: dict                      # j -> {tuple: position}
    boundary_ops: dict               # j -> sparse-ish dense matrix (n_{j-1}, n_j)
    masses: dict = field(default_factory=dict)

    def n_cells(self, j):
        return len(self.simplices.get(j, []))

    def cell_vertices(self, j, i):
        return self.vertices[list(self.simplices[j][i])]

    def cell_mass(self, j, i):
        key = (j, i)
        if key not in self.masses:
            V = self.cell_vertices(j, i)
            if j == 0:
                self.masses[key] = 1.0
            else:
                poly = simplex_polytope(V, validate=False)
                self.masses[key] = density(self.space, poly.plane) * poly.volume
        return self.masses[key]

    def mass_vector(self, j):
        return np.array([self.cell_mass(j, i) for i in range(self.n_cells(j))])


def build_complex(space: NormedSpace, box, resolution: int) -> SimplicialComplex:
    """Kuhn/Freudenthal triangulation of an axis-aligned box at a grid
    resolution; boundary matrices verified (d d = 0) on construction."""
    d = space.dim
    if d > 4:
        raise FlatNormError("complexes supported for ambient dimension <= 4")
    if resolution < 1:
        raise FlatNormError("resolution must be >= 1")
    lo, hi = (np.asarray(b, dtype=float) for b in box)
    if lo.shape != (d,) or hi.shape != (d,) or np.any(hi <= lo):
        raise FlatNormError("box must be (lo, hi) with hi > lo componentwise")
    n = int(resolution)
    axes = [np.linspace(lo[i], hi[i], n + 1) for i in range(d)]
    shape = (n + 1,) * d
    grid_index = {}
    verts = []
    for multi in itertools.product(range(n + 1), repeat=d):
        grid_index[multi] = len(verts)
        verts.append([axes[i][multi[i]] for i in range(d)])
    vertices = np.array(verts)

    top = set()
    for corner in itertools.product(range(n), repeat=d):
        for perm in itertools.permutations(range(d)):
            path = [tuple(corner)]
            cur = list(corner)
            for ax in perm:
                cur[ax] += 1
                path.append(tuple(cur))
            top.add(tuple(sorted(grid_index[p] for p in path)))

    simplices = {d: sorted(top)}
    for j in range(d - 1, -1, -1):
        faces = set()
        for simp in simplices[j + 1]:
            for drop in range(j + 2):
                faces.add(tuple(v for i, v in enumerate(simp) if i != drop))
        simplices[j] = sorted(faces)

    index = {j: {s: i for i, s in enumerate(simplices[j])} for j in simplices}
    boundary_ops = {}
    for j in range(1, d + 1):
        B = np.zeros((len(simplices[j - 1]), len(simplices[j])))
        for col, simp in enumerate(simplices[j]):
            for drop in range(j + 1):
                face = tuple(v for i, v in enumerate(simp) if i != drop)
                B[index[j - 1][face], col] = (-1.0) ** drop
        boundary_ops[j] = B
    for j in range(2, d + 1):
        if np.max(np.abs(boundary_ops[j - 1] @ boundary_ops[j])) > 0:
            raise FlatNormError("boundary of boundary is not zero")
    return SimplicialComplex(space, lo, hi, n, vertices, simplices, index,
                             boundary_ops)


# ---------------------------------------------------------------------------
# embedding polyhedral chains into a complex


@dataclass
class EmbeddingReport:
    exact: bool
    discrepancy: float           # certified flat-distance bound input->embedded
    moved_pieces: int
    dropped_mass: float


def _cut_planes(cx: SimplicialComplex):
    """All hyperplanes of the Kuhn complex: axis planes and difference planes."""
    d = cx.space.dim
    lo, hi, n = cx.lo, cx.hi, cx.resolution
    steps = (hi - lo) / n
    planes = []
    for i in range(d):
        for m in range(n + 1):
            a = np.zeros(d)
            a[i] = 1.0
            planes.append((a, lo[i] + m * steps[i]))
    for i in range(d):
        for j in range(i + 1, d):
            # fractional-part equality: x_i/s_i - x_j/s_j = const
            a = np.zeros(d)
            a[i] = 1.0 / steps[i]
            a[j] = -1.0 / steps[j]
            base = lo[i] / steps[i] - lo[j] / steps[j]
            for m in range(-n, n + 1):
                planes.append((a, base + m))
    return planes


def embed_chain(chain: PolyChain, cx: SimplicialComplex):
    """Express a chain on the complex, snapping within tolerance.

    Summands are subdivided along the complex's cutting planes so every piece
    lies in one Kuhn simplex, then piece vertices snap to vertices of that
    simplex (any vertex subset of a simplex is a face of the complex). The
    report's discrepancy is a certified flat-norm bound on the perturbation:
    the exact mass of the affine homotopy between each moved piece and its
    snapped face plus the mass of its boundary defect.
    """
    chain = canonicalize(chain)
    space, group = chain.space, chain.group
    k = chain.k
    lo, hi = cx.lo, cx.hi
    V = np.vstack([s.poly.vertices for s in chain.summands]) if chain.summands \
        else np.zeros((0, space.dim))
    pad = 1e-9 * max(1.0, float(np.abs(V).max(initial=0.0)))
    if V.size and (np.any(V < lo[None, :] - pad) or np.any(V > hi[None, :] + pad)):
        raise FlatNormError("chain support outside the complex box")
    coeffs = {}
    exact = True
    moved = 0
    disc = 0.0
    dropped = 0.0
    planes = _cut_planes(cx)
    snap_tol = 1e-9 * max(1.0, float(np.max(hi - lo)))
    for s in chain.summands:
        pieces = _subdivide_by_planes(s.poly, planes)
        for piece in pieces:  # ambient simplex vertices, oriented as summand
            targets, face, ids = _snap_piece(piece, cx, k)
            if face is None:
                dropped += group.norm(s.coeff) * _piece_mass(space, piece)
                exact = False
                moved += 1
                continue
            sgn = _orientation_vs_face(piece, targets, ids, k)
            if sgn == 0:
                dropped += group.norm(s.coeff) * _piece_mass(space, piece)
                exact = False
                moved += 1
                continue
            displacement = float(np.max(np.abs(piece - targets)))
            if displacement > snap_tol:
                exact = False
                moved += 1
                disc += group.norm(s.coeff) * _homotopy_bound(space, group,
                                                              piece, targets)
            g = s.coeff if sgn > 0 else group.neg(s.coeff)
            pos = cx.index[k][face]
            coeffs[pos] = group.add(coeffs.get(pos, group.zero()), g)
    vec = _coeff_vector(group, cx.n_cells(k), coeffs)
    report = EmbeddingReport(exact and dropped == 0.0, disc + dropped, moved,
                             dropped)
    return vec, report


def _coeff_vector(group, n, coeffs):
    vec = np.zeros(n, dtype=float if group.kind == "R" else np.int64)
    for pos, g in coeffs.items():
        if not group.is_zero(g, 1e-12):
            vec[pos] = g
    return vec


def _piece_mass(space, piece):
    if piece.shape[0] == 1:
        return 1.0
    poly = simplex_polytope(piece, validate=False)
    try:
        return density(space, poly.plane) * poly.volume
    except ChainError:
        return 0.0


def _subdivide_by_planes(poly: OrientedPolytope, planes):
    """Pieces of the summand, each inside one Kuhn cell, orientation kept."""
    from . import _geom

    if poly.k == 0:
        return [poly.vertices]
    U, base = poly.plane.basis, poly.plane_base
    cells, bsign = poly.cells_in(U, base)
    out_pc = []
    scale = max(1.0, float(np.abs(poly.vertices).max()))
    for cell in cells:
        frontier = [cell]
        for a, b in planes:
            a_pc = U @ a
            if np.linalg.norm(a_pc) * scale < 1e-12 * max(1.0, np.linalg.norm(a)):
                continue
            b_pc = b - float(a @ base)
            nxt = []
            for S in frontier:
                sv = S @ a_pc - b_pc
                below, above = _geom.split_simplex(S, sv, 1e-9 * scale)
                nxt.extend(below)
                nxt.extend(above)
            frontier = nxt
        for S in frontier:
            if abs(_geom.signed_volume(S)) > (1e-9 * scale) ** poly.k * 10:
                if bsign < 0:
                    S = S.copy()
                    S[[0, 1]] = S[[1, 0]]
                out_pc.append(base + S @ U)
    return out_pc


def _snap_piece(piece, cx: SimplicialComplex, k):
    """Nearest complex vertices of the Kuhn simplex containing the piece."""
    d = cx.space.dim
    n = cx.resolution
    lo, hi = cx.lo, cx.hi
    steps = (hi - lo) / n
    centroid = piece.mean(axis=0)
    rel = np.clip((centroid - lo) / steps, 0, n - 1e-12)
    corner = np.floor(rel).astype(int)
    frac = rel - corner
    perm = np.argsort(-frac)  # Kuhn simplex of the cell containing centroid
    path = [corner.copy()]
    cur = corner.copy()
    for ax in perm:
        cur = cur.copy()
        cur[ax] += 1
        path.append(cur)
    # vertex ids via the grid indexing used at build time
    vid = {}
    for p in path:
        key = tuple(int(x) for x in p)
        pos = 0
        mult = 1
        for i in range(d - 1, -1, -1):
            pos += key[i] * mult
            mult *= (n + 1)
        vid[key] = pos
    simplex_vids = [vid[tuple(int(x) for x in p)] for p in path]
    verts = cx.vertices[simplex_vids]
    # independent nearest-vertex snapping, ties broken by vertex id, so a
    # crossing point shared by adjacent pieces snaps identically from both
    # sides and the embedded chain stays a chain; collapsed pieces are the
    # zero chain and are dropped (their mass is charged to the discrepancy)
    targets = []
    chosen = []
    for p in piece:
        d = np.linalg.norm(verts - p, axis=1)
        j = min(range(len(verts)), key=lambda i: (round(d[i], 12), simplex_vids[i]))
        chosen.append(simplex_vids[j])
        targets.append(verts[j])
    if len(set(chosen)) < len(chosen):
        return None, None, None
    face = tuple(sorted(chosen))
    if face not in cx.index[k]:
        return None, None, None
    return np.array(targets), face, chosen


def _orientation_vs_face(piece, targets, ids, k):
    """Sign of the snapped piece against the canonical (sorted-id) face."""
    if k == 0:
        return 1
    perm_sign = _permutation_sign(list(np.argsort(ids)))
    M = targets[1:] - targets[0]
    P = piece[1:] - piece[0]
    s = np.sign(np.linalg.det(M @ P.T))
    return int(perm_sign * (s if s != 0 else 0))


def _permutation_sign(order):
    order = list(order)
    sign = 1
    for i in range(len(order)):
        while order[i] != i:
            j = order[i]
            order[i], order[j] = order[j], order[i]
            sign = -sign
    return sign


def _homotopy_bound(space, group, piece, targets):
    """Certified flat bound between a piece and its snapped face: the mass of
    the prism filling plus the mass of the boundary defect it leaves."""
    from .chains import boundary as chain_boundary

    k = piece.shape[0] - 1
    Zg = CoefficientGroup.integers()
    d = piece.shape[1]

    def simplex_chain(verts_list, dim):
        parts = []
        for coeff, verts in verts_list:
            try:
                if dim == 0:
                    poly = OrientedPolytope(verts, np.zeros((0, d)), validate=False)
                    poly._validate()
                else:
                    poly = simplex_polytope(verts)
            except ChainError:
                continue
            parts.append(SimpleChain(coeff, poly))
        return PolyChain(space, Zg, dim, parts)

    top_bottom = simplex_chain([(1, targets), (-1, piece)], k)
    if k + 1 > d:
        # no room for a homotopy filling: bound by the difference mass
        return mass(top_bottom)
    prism = [((-1) ** j, np.vstack([piece[: j + 1], targets[j:]]))
             for j in range(k + 1)]
    H = canonicalize(simplex_chain(prism, k + 1))
    if H.is_zero:
        defect = top_bottom
    else:
        defect = chain_boundary(H) - top_bottom
    return mass(H) + mass(defect)


# ---------------------------------------------------------------------------
# flat-norm solves


@dataclass
class FlatNormCertificate:
    value: float
    filling: np.ndarray     # coefficients on (k+1)-cells
    residual: np.ndarray    # coefficients on k-cells: p - d(filling)
    mode: str
    optimal: bool
    relaxation_integral: bool
    iterations: int
    k: int

    def recompute(self, cx: SimplicialComplex) -> float:
        mk1 = cx.mass_vector(self.k + 1) if cx.n_cells(self.k + 1) else np.zeros(0)
        mk = cx.mass_vector(self.k)
        gk = _coeff_norms(self.residual)
        gk1 = _coeff_norms(self.filling)
        return float(gk1 @ mk1 + gk @ mk)


def _coeff_norms(vec):
    return np.abs(np.asarray(vec, dtype=float))


def embedded_mass(cx: SimplicialComplex, k: int, vec, group=None) -> float:
    """Mass of a complex chain given by its coefficient vector."""
    vec = np.asarray(vec)
    if group is not None and group.kind == "Zm":
        norms = np.array([group.norm(int(g)) for g in vec])
    else:
        norms = np.abs(vec.astype(float))
    return float(norms @ cx.mass_vector(k))


def flat_norm_upper(p_vec, cx: SimplicialComplex, k: int, group=None,
                    mode: str = "real") -> FlatNormCertificate:
    """Minimize M(q) + M(p - dq) over complex-supported fillings q.

    The result is an upper bound for the flat norm and the exact minimum over
    fillings supported on the complex. ``mode`` 'real' solves the LP; 'int'
    adds integrality by branch and bound (fast path when the relaxation is
    integral); Z/mZ coefficients are enumerated exhaustively on small
    complexes only.
    """
    group = group or CoefficientGroup.reals()
    p_vec = np.asarray(p_vec)
    nk = cx.n_cells(k)
    if p_vec.shape != (nk,):
        raise FlatNormError(f"coefficient vector must have length {nk}")
    if group.kind == "Zm":
        return _flat_norm_modular(p_vec, cx, k, group)
    nk1 = cx.n_cells(k + 1)
    mk = cx.mass_vector(k)
    if nk1 == 0:
        value = float(_coeff_norms(p_vec) @ mk)
        return FlatNormCertificate(value, np.zeros(0), p_vec.astype(float),
                                   mode, True, True, 0, k)
    mk1 = cx.mass_vector(k + 1)
    B = cx.boundary_ops[k + 1]
    # variables: q+ q- s+ s- ; constraint  B(q+ - q-) + s+ - s- = p
    A = np.hstack([B, -B, np.eye(nk), -np.eye(nk)])
    b = np.asarray(p_vec, dtype=float)
    c = np.concatenate([mk1, mk1, mk, mk])
    basis = [2 * nk1 + i if b[i] >= 0 else 2 * nk1 + nk + i for i in range(nk)]
    if mode == "real":
        res = lp.solve_lp(c, A, b, basis=basis)
        q = res.x[:nk1] - res.x[nk1:2 * nk1]
        s = res.x[2 * nk1:2 * nk1 + nk] - res.x[2 * nk1 + nk:]
        frac = np.abs(res.x - np.round(res.x))
        return FlatNormCertificate(float(res.value), q, s, "real",
                                   res.status == lp.OPTIMAL,
                                   bool(frac.max(initial=0.0) <= 1e-6),
                                   res.iterations, k)
    if mode == "int":
        res = lp.solve_ilp(c, A, b, basis=basis)
        q = res.x[:nk1] - res.x[nk1:2 * nk1]
        s = res.x[2 * nk1:2 * nk1 + nk] - res.x[2 * nk1 + nk:]
        return FlatNormCertificate(float(res.value), q.astype(np.int64),
                                   s.astype(np.int64), "int",
                                   res.status == lp.OPTIMAL,
                                   res.relaxation_integral, res.iterations, k)
    raise FlatNormError(f"unknown mode {mode!r}")


_MODULAR_CELL_LIMIT = 20
_MODULAR_STATE_LIMIT = 4_000_000


def _flat_norm_modular(p_vec, cx, k, group):
    m = group.m
    nk1 = cx.n_cells(k + 1)
    if nk1 > _MODULAR_CELL_LIMIT or m > 5:
        raise FlatNormError(
            f"modular flat norms are enumerated exhaustively and need "
            f"<= {_MODULAR_CELL_LIMIT} filling cells and m <= 5 "
            f"(got {nk1} cells, m={m})")
    if m ** nk1 > _MODULAR_STATE_LIMIT:
        raise FlatNormError(
            f"modular enumeration would visit {m}**{nk1} states; "
            f"limit is {_MODULAR_STATE_LIMIT}")
    mk = cx.mass_vector(k)
    mk1 = cx.mass_vector(k + 1) if nk1 else np.zeros(0)
    B = cx.boundary_ops[k + 1].astype(np.int64) if nk1 else None
    p = np.asarray(p_vec, dtype=np.int64) % m
    gnorm = np.minimum(np.arange(m), m - np.arange(m)).astype(float)
    best_val, best_q, best_s = math.inf, None, None
    for q in itertools.product(range(m), repeat=nk1):
        qv = np.array(q, dtype=np.int64)
        s = (p - (B @ qv if nk1 else 0)) % m
        val = float(gnorm[qv] @ mk1 + gnorm[s] @ mk) if nk1 else float(gnorm[s] @ mk)
        if val < best_val - 1e-15:
            best_val, best_q, best_s = val, qv, s
    return FlatNormCertificate(best_val, best_q, best_s, "Zm", True, False,
                               m ** nk1, k)


def flat_distance(a: PolyChain, b: PolyChain, cx: SimplicialComplex,
                  mode: str = "real"):
    """Certificate for F(a - b) on the complex plus the embedding reports."""
    va, ra = embed_chain(a, cx)
    vb, rb = embed_chain(b, cx)
    group = a.group
    if group.kind == "Zm":
        diff = (va - vb) % group.m
    else:
        diff = va - vb
    cert = flat_norm_upper(diff, cx, a.k, group, mode)
    return cert, ra, rb


def refine_sweep(a: PolyChain, b: PolyChain, box, resolutions,
                 mode: str = "real"):
    """Flat-distance certificates at increasing resolutions.

    Values are nonincreasing within solver tolerance plus the embedding
    discrepancies (finer complexes admit every coarser filling).
    """
    out = []
    for res in resolutions:
        cx = build_complex(a.space, box, int(res))
        cert, ra, rb = flat_distance(a, b, cx, mode)
        out.append({"resolution": int(res), "value": cert.value,
                    "discrepancy": ra.discrepancy + rb.discrepancy})
    return out


def chain_from_vector(cx: SimplicialComplex, k, vec, group) -> PolyChain:
    """Materialize a complex chain as a polyhedral chain."""
    parts = []
    for i, g in enumerate(np.asarray(vec)):
        if group.is_zero(g, 1e-12):
            continue
        V = cx.cell_vertices(k, i)
        if k == 0:
            poly = OrientedPolytope(V, np.zeros((0, cx.space.dim)), validate=False)
        else:
            poly = simplex_polytope(V, validate=False)
        parts.append(SimpleChain(group.coerce(g) if group.kind != "R" else float(g),
                                 poly))
    return canonicalize(PolyChain(cx.space, group, k, parts))
