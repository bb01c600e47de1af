"""Slicing-based mass through per-plane volume densities.

The mass of a simple k-chain factors as |g| * sigma(plane) * (Euclidean
k-volume): scaling and shearing invariance force mass restricted to a fixed
plane to be proportional to Euclidean volume, and the density sigma obeys the
recursion

    sigma_1(span u) = ||u||            (Euclidean-unit u)
    sigma_k(W)      = sup_phi sigma_{k-1}(ker phi ^ W) / s(phi)

over plane covectors phi of subspace dual norm s. The supremum is approximated
by a deterministic multi-start optimizer and cached per plane; ``mass_direct``
evaluates the defining slicing integral on an independent path and serves as
the oracle for this reduction.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from . import _geom
from ._opt import compass_max, golden_section_max, maximize_on_sphere, sphere_grid
from .chains import (
    ChainError,
    OrientedPolytope,
    PlaneKey,
    PolyChain,
    SimpleChain,
    canonicalize,
    simplex_polytope,
)
from .foundation import NormedSpace, SubspaceNorm, _null_space_rows

DENSITY_STARTS = 64
DENSITY_TOL = 1e-8

_DENSITY_LOCK = threading.Lock()


def _plane_key_of(plane) -> PlaneKey:
    if isinstance(plane, PlaneKey):
        return plane
    return PlaneKey.from_directions(np.atleast_2d(np.asarray(plane, dtype=float)))


def density(space: NormedSpace, plane, with_report=False):
    """Volume density sigma of a tangent plane; cached per canonical plane.

    Reported values are the optimizer's best found, a lower bound of the true
    supremum. sigma == 1 identically for the Euclidean norm.
    """
    pk = _plane_key_of(plane)
    if not (1 <= pk.k <= space.dim):
        raise ChainError(f"degenerate plane of dimension {pk.k}")
    rec = space._density_cache.get(pk.key)
    if rec is None:
        rec = _compute_density(space, pk.basis)
        with _DENSITY_LOCK:
            rec = space._density_cache.setdefault(pk.key, rec)
    if with_report:
        return rec["sigma"], rec["optimizer_report"]
    return rec["sigma"]


def density_cache(space: NormedSpace) -> dict:
    """The per-plane cache: key -> {sigma, optimizer_report}."""
    return space._density_cache


def _compute_density(space, U):
    sigma, best_p, method, starts = _sigma_sub(SubspaceNorm(space, U))
    return {"sigma": float(sigma),
            "optimizer_report": {"starts": starts,
                                 "best_functional": [float(x) for x in best_p],
                                 "tolerance": DENSITY_TOL if starts else 0.0,
                                 "method": method}}


def _sigma_sub(sub: SubspaceNorm, inner=False):
    """Density of a restricted norm, recursing in plane coordinates.

    Returns (sigma, best covector, method, starts). The plane cache is only
    consulted at the top level; the recursion runs on SubspaceNorm sections
    directly so inner evaluations stay cheap. ``inner`` trims the refinement
    budget for evaluations nested inside a higher-dimensional optimization.
    """
    k = sub.k
    if k == 1:
        return float(sub.value(np.ones(1))), [1.0], "closed-form", 0
    if sub.is_euclidean:
        # every subspace dual sup and every 1-density equals 1
        e = [0.0] * k
        e[0] = 1.0
        return 1.0, e, "euclidean", 0
    if k == 2:
        if inner:
            return _sigma_2d(sub, refine_starts=1, max_iter=70)
        return _sigma_2d(sub)
    return _sigma_kd(sub)


def _dual_sup_grid(sub, P):
    """Vectorized (approximate for smooth norms) dual sups of covector rows."""
    if sub.is_euclidean:
        return np.linalg.norm(P, axis=1)
    V = sub.section_vertices
    if V is not None:
        return np.max(P @ V.T, axis=1)
    X = sphere_grid(sub.k, 512)
    nx = sub.value(X)
    return np.max(np.abs(P @ X.T) / nx[None, :], axis=1)


def _sigma_2d(sub, refine_starts=3, max_iter=200):
    space, U = sub.space, sub.U
    n = DENSITY_STARTS
    t = np.arange(n) * (math.pi / n)
    P = np.column_stack([np.cos(t), np.sin(t)])
    Q = np.column_stack([-P[:, 1], P[:, 0]])  # Euclidean-unit kernels
    num = space.norm(Q @ U)
    den = _dual_sup_grid(sub, P)
    vals = num / den

    def accurate(theta):
        p = np.array([math.cos(theta), math.sin(theta)])
        s = sub.dual_sup(p)
        if s <= 1e-14:
            return -math.inf
        q = np.array([-p[1], p[0]])
        return float(space.norm(q @ U)) / s

    order = np.argsort(vals)[::-1]
    best_v, best_t = -math.inf, 0.0
    for i in order[:refine_starts]:
        th, v = compass_max(lambda x: accurate(x[0]), np.array([t[i]]),
                            math.pi / n, DENSITY_TOL, max_iter=max_iter)
        if v > best_v:
            best_v, best_t = v, th[0]
    return best_v, [math.cos(best_t), math.sin(best_t)], "multi-start", n


def _sigma_kd(sub):
    space, U, k = sub.space, sub.U, sub.k

    def objective(p):
        nrm = np.linalg.norm(p)
        if nrm < 1e-12:
            return -math.inf
        p = p / nrm
        s = sub.dual_sup(p)
        if s <= 1e-14:
            return -math.inf
        W = _null_space_rows(p[None, :]) @ U
        return _sigma_sub(SubspaceNorm(space, W), inner=True)[0] / s

    # axis and corner covectors are the natural candidates for polytopal
    # norms; prepend them so kinked optima are always seeded
    seeds = [np.eye(k)[i] for i in range(k)]
    corners = sphere_grid(k, DENSITY_STARTS - k)
    grid = np.vstack([seeds, corners])
    vals = np.array([objective(u) for u in grid])
    order = np.argsort(vals)[::-1]
    best_u, best_v = grid[order[0]], float(vals[order[0]])
    for i in order[:2]:
        u, v = compass_max(objective, grid[i], 0.2, 1e-6, max_iter=70)
        if v > best_v:
            best_u, best_v = u / np.linalg.norm(u), v
    return best_v, list(best_u), "multi-start", DENSITY_STARTS


# ---------------------------------------------------------------------------
# mass / size / fullness


def mass(chain: PolyChain) -> float:
    """Mass norm: sum of |g| for 0-chains, |g| * sigma * volume otherwise."""
    chain = canonicalize(chain)
    if chain.k == 0:
        return float(sum(chain.group.norm(s.coeff) for s in chain.summands))
    total = 0.0
    for s in chain.summands:
        total += (chain.group.norm(s.coeff)
                  * density(chain.space, s.poly.plane) * s.poly.volume)
    return float(total)


def chain_norms(chain: PolyChain):
    """N(P) = M(P) + M(dP) packaged with its parts."""
    from .chains import ChainNorms, boundary

    m = mass(chain)
    bm = mass(boundary(chain)) if chain.k >= 1 else 0.0
    return ChainNorms(m, bm)


def mass_distance(a: PolyChain, b: PolyChain) -> float:
    return mass(a - b)


def size(chain: PolyChain) -> float:
    """Mass with coefficients stripped: sum of sigma * volume per summand."""
    chain = canonicalize(chain)
    if chain.k == 0:
        return float(len(chain.summands))
    return float(sum(density(chain.space, s.poly.plane) * s.poly.volume
                     for s in chain.summands))


def polytope_size(space: NormedSpace, poly: OrientedPolytope) -> float:
    if poly.k == 0:
        return 1.0
    return density(space, poly.plane) * poly.volume


def support_diameter(space: NormedSpace, polys) -> float:
    V = np.vstack([p.vertices for p in polys])
    diffs = (V[:, None, :] - V[None, :, :]).reshape(-1, V.shape[1])
    return float(np.max(space.norm(diffs)))


def fullness(space: NormedSpace, obj) -> float:
    """Size over the k-th power of the support diameter (space norm)."""
    if isinstance(obj, OrientedPolytope):
        polys, sz, k = [obj], polytope_size(space, obj), obj.k
    elif isinstance(obj, SimpleChain):
        polys, sz, k = [obj.poly], polytope_size(space, obj.poly), obj.poly.k
    elif isinstance(obj, PolyChain):
        if obj.is_zero:
            raise ChainError("fullness of the zero chain is undefined")
        obj = canonicalize(obj)
        polys, sz, k = [s.poly for s in obj.summands], size(obj), obj.k
    else:
        raise TypeError(f"cannot take fullness of {type(obj)!r}")
    if k == 0:
        raise ChainError("fullness requires k >= 1")
    d = support_diameter(space, polys)
    return sz / d ** k


# ---------------------------------------------------------------------------
# full simplices


@dataclass
class FullSimplexResult:
    simplex: OrientedPolytope
    fullness: float
    stages: list


_FULL_SIMPLEX_CACHE = {}


def full_simplex(space: NormedSpace, plane) -> FullSimplexResult:
    pk = _plane_key_of(plane)
    key = (space.signature(), pk.key)
    if key not in _FULL_SIMPLEX_CACHE:
        _FULL_SIMPLEX_CACHE[key] = _full_simplex_uncached(space, pk)
    return _FULL_SIMPLEX_CACHE[key]


def _full_simplex_uncached(space: NormedSpace, plane) -> FullSimplexResult:
    """Constructive full simplex in an affine plane.

    Induction on dimension: scale the current simplex to diameter >= j+1,
    take a unit-subspace-dual functional vanishing on it, and place the apex
    at the minimum-norm point of its level-1 set over the simplex centroid.
    The measured fullness is recorded per stage.
    """
    pk = _plane_key_of(plane)
    U = pk.basis
    k = pk.k
    if not (1 <= k <= space.dim):
        raise ChainError("degenerate plane")

    verts = np.zeros((2, k))
    verts[1, 0] = 1.0
    stages = []

    def norm_pc(c):
        return space.norm(np.atleast_2d(c) @ U)

    def measure(vs):
        j = vs.shape[0] - 1
        plane_rows = _orthonormal_rows(vs[1:] - vs[0]) @ U
        sz = density(space, plane_rows) * abs(_volume_of(vs))
        diffs = (vs[:, None, :] - vs[None, :, :]).reshape(-1, k)
        diam = float(np.max(norm_pc(diffs)))
        return sz, diam, sz / diam ** j

    sz, diam, theta = measure(verts)
    stages.append({"k": 1, "size": sz, "diam": diam, "fullness": theta})

    for j in range(1, k):
        # scale so the current j-simplex has norm-diameter >= j + 1
        _, diam, _ = measure(verts)
        verts = verts * ((j + 1) / diam)
        subU = U[: j + 1]
        sub = SubspaceNorm(space, subU)
        e = np.zeros(j + 1)
        e[j] = 1.0
        s = sub.dual_sup(e)
        apex_local = sub.min_norm_on_level(e, level=s)
        apex = verts.mean(axis=0).copy()
        apex[: j + 1] += apex_local
        verts = np.vstack([verts, apex[None, :]])
        sz, diam, theta = measure(verts)
        stages.append({"k": j + 1, "size": sz, "diam": diam, "fullness": theta,
                       "dual_sup": s})

    simplex = simplex_polytope(verts @ U)
    return FullSimplexResult(simplex, stages[-1]["fullness"], stages)


def _orthonormal_rows(rows):
    Q, _ = np.linalg.qr(np.asarray(rows, dtype=float).T)
    return Q.T[: rows.shape[0]]


def _volume_of(verts):
    return _geom.signed_volume(np.ascontiguousarray(verts))


# ---------------------------------------------------------------------------
# direct evaluation of the slicing definition (the oracle path)


def mass_direct(chain: PolyChain, functional_resolution=96, integral_steps=0) -> float:
    """Direct numerical evaluation of the slicing mass definition.

    Outer maximization of the functional over a deterministic grid of the
    dual unit sphere (with compass refinement), inner 1-D integral of slice
    masses; slice densities are memoized per slice plane. Independent of the
    cached plane densities. Exact per-interval Gauss quadrature by default;
    ``integral_steps`` > 0 switches to a midpoint rule with that many steps.
    """
    chain = canonicalize(chain)
    if chain.k == 0:
        raise ChainError("mass_direct requires k >= 1")
    memo = {}
    total = 0.0
    for s in chain.summands:
        gn = chain.group.norm(s.coeff)
        poly = s.poly
        U, base = poly.plane.basis, poly.plane_base
        cells, _ = poly.cells_in(U, base)
        for verts_pc in cells:
            amb = base + verts_pc @ U
            total += gn * _direct_simplex_mass(chain.space, amb,
                                               functional_resolution,
                                               integral_steps, memo)
    return float(total)


def _direct_simplex_mass(space, amb_verts, n_dirs, integral_steps, memo):
    d = amb_verts.shape[1]
    k = amb_verts.shape[0] - 1

    def objective(w):
        nw = np.linalg.norm(w)
        if nw < 1e-12:
            return -math.inf
        dn = space.dual_norm(w)
        if dn <= 1e-14:
            return -math.inf
        f = np.asarray(w, dtype=float) / dn
        return _f_mass(space, amb_verts, f, k, integral_steps, memo)

    dirs = sphere_grid(d, n_dirs)
    vals = np.array([objective(w) for w in dirs])
    order = np.argsort(vals)[::-1]
    best = float(vals[order[0]])
    for i in order[:3]:
        _, val = compass_max(objective, dirs[i], 0.2, 1e-7)
        best = max(best, val)
    return best


def _f_mass(space, A, f, k, integral_steps, memo):
    t = A @ f
    if k == 1:
        return abs(t[1] - t[0])
    rho = _slice_plane_density(space, A, f, k, memo)
    if rho == 0.0:
        return 0.0

    def section_volume(level):
        pts = _section_points(A, t, level)
        if len(pts) < k:
            return 0.0
        return _hull_volume_km1(np.array(pts), k - 1)

    lo, hi = float(t.min()), float(t.max())
    if hi - lo < 1e-15:
        return 0.0
    if integral_steps and integral_steps > 0:
        xs = lo + (np.arange(integral_steps) + 0.5) * (hi - lo) / integral_steps
        integral = float(np.sum([section_volume(x) for x in xs])) * (hi - lo) / integral_steps
    else:
        # piecewise polynomial of degree k-1 <= 2 between vertex levels:
        # two-point Gauss per interval is exact
        breaks = np.unique(np.sort(t))
        integral = 0.0
        for a, b in zip(breaks[:-1], breaks[1:]):
            if b - a < 1e-14:
                continue
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            x1 = mid - half / math.sqrt(3.0)
            x2 = mid + half / math.sqrt(3.0)
            integral += half * (section_volume(x1) + section_volume(x2))
    return rho * integral


def _slice_plane_density(space, A, f, k, memo):
    """Direct (k-1)-density of the common plane of all slices of A by f."""
    D = A[1:] - A[0]
    P = _orthonormal_rows(D)
    a = P @ f
    if np.linalg.norm(a) < 1e-13:
        return 0.0  # f constant on the cell: empty slices
    W = _null_space_rows(a[None, :]) @ P
    if k - 1 == 1:
        return float(space.norm(W[0]))
    key = PlaneKey.from_directions(W).key
    if key in memo:
        return memo[key]
    ref = np.vstack([np.zeros(A.shape[1]), W])  # unit right triangle in the plane
    val = _direct_simplex_mass(space, ref, 64, 0, memo) / 0.5
    memo[key] = val
    return val


def _section_points(A, t, level):
    """Crossing points of the level hyperplane with the simplex edges."""
    pts = []
    n = len(t)
    for i in range(n):
        if abs(t[i] - level) < 1e-13:
            pts.append(A[i])
    for i in range(n):
        for j in range(i + 1, n):
            ti, tj = t[i], t[j]
            if (ti - level) * (tj - level) < 0:
                lam = (level - ti) / (tj - ti)
                pts.append(A[i] + lam * (A[j] - A[i]))
    return pts


def _hull_volume_km1(pts, dim):
    """Euclidean volume of the hull of points lying in a dim-flat."""
    if dim == 0:
        return 1.0
    rel = pts - pts[0]
    B = _orthonormal_rows_safe(rel, dim)
    if B is None:
        return 0.0
    C = rel @ B.T
    if dim == 1:
        return float(C[:, 0].max() - C[:, 0].min())
    # dim == 2: angle-sorted shoelace
    cen = C.mean(axis=0)
    ang = np.arctan2(C[:, 1] - cen[1], C[:, 0] - cen[0])
    order = np.argsort(ang)
    x, y = C[order, 0], C[order, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def _orthonormal_rows_safe(rel, dim):
    U, s, Vt = np.linalg.svd(rel, full_matrices=False)
    if s.size < dim or s[dim - 1] <= 1e-12 * max(1.0, s[0]):
        return None
    return Vt[:dim]


# ---------------------------------------------------------------------------
# Eilenberg ratio


def eilenberg_ratio(chain: PolyChain, f, r_steps=10000):
    """Integral of slice masses against the level, over Lip(f) * M(P).

    ``f`` is a Lipschitz spec from the slicing module (linear, distance to a
    point, or distance to a polytope). Linear functionals use the exact
    piecewise-Gauss integral; distance functions use midpoint quadrature of
    level-set masses over r_steps levels.
    """
    from . import slicing

    chain = canonicalize(chain)
    m = mass(chain)
    if m == 0.0:
        return {"integral": 0.0, "ratio": 0.0, "lip": f.lip(chain.space), "mass": 0.0}
    lip = f.lip(chain.space)
    if isinstance(f, slicing.LinearF):
        integral = slicing.slice_mass_integral(chain, f.functional(chain.space))
    elif isinstance(f, (slicing.DistToPoint, slicing.DistToPolytope)):
        integral = slicing.level_set_mass_integral(chain, f, r_steps)
    else:
        raise ChainError(f"unsupported Lipschitz function kind {type(f)!r}")
    return {"integral": float(integral), "ratio": float(integral / (lip * m)),
            "lip": float(lip), "mass": float(m)}
