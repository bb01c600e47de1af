"""Finite-dimensional normed spaces, dual norms, functionals, and normed
abelian coefficient groups.

Ambient spaces are R^d (1 <= d <= 6) with one of three norm kinds: p-norms,
weighted p-norms, and polytope norms given by the facet covectors of a
centrally symmetric unit ball. Dual norms are closed-form for the p families
and a small linear program for polytope norms.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import lp

MAX_DIM = 6
INF = float("inf")


class DimensionMismatch(ValueError):
    pass


class NormSpecError(ValueError):
    pass


class GroupMismatch(ValueError):
    pass


def _as_vec(v, dim, what="vector"):
    v = np.asarray(v, dtype=float)
    if v.shape != (dim,):
        raise DimensionMismatch(f"{what} has shape {v.shape}, expected ({dim},)")
    return v


class NormedSpace:
    """R^dim with a pluggable norm: p, weighted_p, or polytope."""

    def __init__(self, dim: int, kind: str, p=None, weights=None, facets=None):
        if not (1 <= dim <= MAX_DIM):
            raise NormSpecError(f"dim must be in 1..{MAX_DIM}, got {dim}")
        self.dim = int(dim)
        self.kind = kind
        self.p = None
        self.weights = None
        self.facets = None
        if kind in ("p", "weighted_p"):
            p = float(p)
            if not (1.0 <= p):
                raise NormSpecError(f"p must be in [1, inf], got {p}")
            self.p = p
            if kind == "weighted_p":
                w = np.asarray(weights, dtype=float)
                if w.shape != (dim,) or np.any(w <= 0):
                    raise NormSpecError("weights must be positive, length dim")
                self.weights = w
        elif kind == "polytope":
            H = np.asarray(facets, dtype=float)
            if H.ndim != 2 or H.shape[1] != dim or H.shape[0] < 2 * dim:
                raise NormSpecError("facets must be an (m, dim) array, m >= 2*dim")
            self.facets = H
            self._check_polytope_ball()
        else:
            raise NormSpecError(f"unknown norm kind {kind!r}")
        self._density_cache = {}

    @classmethod
    def p_norm(cls, dim, p):
        return cls(dim, "p", p=p)

    @classmethod
    def weighted_p_norm(cls, dim, p, weights):
        return cls(dim, "weighted_p", p=p, weights=weights)

    @classmethod
    def polytope_norm(cls, dim, facets):
        return cls(dim, "polytope", facets=facets)

    def _check_polytope_ball(self):
        H = self.facets
        # central symmetry: every facet's negation must be present
        for h in H:
            if np.min(np.linalg.norm(H + h, axis=1)) > 1e-9 * max(1.0, np.linalg.norm(h)):
                raise NormSpecError(f"facet set not centrally symmetric near {h}")
        # bounded ball <=> the facet normals positively span R^d; probe each axis
        for i in range(self.dim):
            for sgn in (1.0, -1.0):
                if np.max(sgn * H[:, i]) <= 1e-12:
                    raise NormSpecError("facets do not bound the unit ball")

    # -- norm evaluation ---------------------------------------------------

    def norm(self, v) -> float:
        """Norm of a single vector or of each row of a 2-D array."""
        v = np.asarray(v, dtype=float)
        single = v.ndim == 1
        V = v[None, :] if single else v
        if V.shape[-1] != self.dim:
            raise DimensionMismatch(f"vector length {V.shape[-1]} != dim {self.dim}")
        out = self._norm_rows(V)
        return float(out[0]) if single else out

    def _norm_rows(self, V):
        if self.kind == "polytope":
            return np.max(V @ self.facets.T, axis=-1)
        W = V * self.weights if self.kind == "weighted_p" else V
        if self.p == INF:
            return np.max(np.abs(W), axis=-1)
        if self.p == 1.0:
            return np.sum(np.abs(W), axis=-1)
        if self.p == 2.0:
            return np.sqrt(np.sum(W * W, axis=-1))
        return np.sum(np.abs(W) ** self.p, axis=-1) ** (1.0 / self.p)

    def dual_norm(self, f) -> float:
        """sup of f(x) over the unit ball; closed form except polytope (LP)."""
        f = _as_vec(f, self.dim, "covector")
        if self.kind == "polytope":
            if np.max(np.abs(f)) == 0.0:
                return 0.0
            return self._polytope_support(f)
        w = self.weights if self.kind == "weighted_p" else np.ones(self.dim)
        if self.p == INF:
            return float(np.sum(np.abs(f) / w))
        if self.p == 1.0:
            return float(np.max(np.abs(f) / w))
        q = self.p / (self.p - 1.0)
        g = np.abs(f) / w ** (1.0 / self.p)
        return float(np.sum(g ** q) ** (1.0 / q))

    def _polytope_support(self, f):
        # maximize f.x over {H x <= 1}: split x = u - v, slack basis is feasible
        H = self.facets
        m, d = H.shape
        A = np.hstack([H, -H, np.eye(m)])
        b = np.ones(m)
        c = np.concatenate([-f, f, np.zeros(m)])
        res = lp.solve_lp(c, A, b, basis=list(range(2 * d, 2 * d + m)))
        if res.status != lp.OPTIMAL:
            raise NormSpecError("polytope ball is unbounded")
        return float(-res.value)

    def functional(self, covector) -> "Functional":
        covector = _as_vec(covector, self.dim, "covector")
        return Functional(covector, self.dual_norm(covector))

    # -- unit-ball facet/vertex structure (used by subspace sections) ------

    @cached_property
    def ball_facets(self):
        """Facet covectors of the unit ball, or None for smooth norms."""
        d = self.dim
        w = self.weights if self.kind == "weighted_p" else np.ones(d)
        if self.kind == "polytope":
            return self.facets
        if self.p == 1.0:
            signs = np.array(list(itertools.product((-1.0, 1.0), repeat=d)))
            return signs * w
        if self.p == INF:
            rows = []
            for i in range(d):
                e = np.zeros(d)
                e[i] = w[i]
                rows.extend([e, -e])
            return np.array(rows)
        return None

    @property
    def is_euclidean(self):
        return self.kind == "p" and self.p == 2.0

    def restricted(self, basis_rows) -> "SubspaceNorm":
        return SubspaceNorm(self, np.asarray(basis_rows, dtype=float))

    # -- identity / serialization ------------------------------------------

    def signature(self):
        if self.kind == "p":
            return ("p", self.dim, self.p)
        if self.kind == "weighted_p":
            return ("weighted_p", self.dim, self.p, tuple(self.weights.tolist()))
        return ("polytope", self.dim, tuple(map(tuple, np.round(self.facets, 12))))

    def __eq__(self, other):
        return isinstance(other, NormedSpace) and self.signature() == other.signature()

    def __hash__(self):
        return hash(self.signature())

    def __repr__(self):
        if self.kind == "p":
            return f"NormedSpace(l{self.p}, dim={self.dim})"
        return f"NormedSpace({self.kind}, dim={self.dim})"

    def to_json(self):
        norm = {"kind": self.kind}
        if self.kind in ("p", "weighted_p"):
            norm["p"] = "inf" if self.p == INF else self.p
        if self.kind == "weighted_p":
            norm["weights"] = self.weights.tolist()
        if self.kind == "polytope":
            norm["facets"] = self.facets.tolist()
        return {"dim": self.dim, "norm": norm}

    @classmethod
    def from_json(cls, obj):
        dim = obj["dim"]
        norm = obj["norm"]
        kind = norm["kind"]
        p = norm.get("p")
        if isinstance(p, str):
            p = INF if p in ("inf", "Infinity") else float(p)
        if kind == "p":
            return cls.p_norm(dim, p)
        if kind == "weighted_p":
            return cls.weighted_p_norm(dim, p, norm["weights"])
        if kind == "polytope":
            return cls.polytope_norm(dim, norm["facets"])
        raise NormSpecError(f"unknown norm kind {kind!r}")


@dataclass(frozen=True)
class Functional:
    """A covector together with its cached dual norm."""

    covector: np.ndarray
    dual_norm: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return x @ self.covector


class SubspaceNorm:
    """The ambient norm restricted to a subspace given by orthonormal rows U.

    Points of the subspace are addressed by plane coordinates c with ambient
    position c @ U. Supplies exact dual evaluation for the polytopal and
    Euclidean kinds and a deterministic optimizer otherwise.
    """

    def __init__(self, space: NormedSpace, U: np.ndarray):
        if U.ndim != 2 or U.shape[1] != space.dim:
            raise DimensionMismatch("subspace basis must be (k, dim)")
        G = U @ U.T
        if not np.allclose(G, np.eye(U.shape[0]), atol=1e-9):
            raise ValueError("subspace basis rows must be orthonormal")
        self.space = space
        self.U = U
        self.k = U.shape[0]

    def value(self, c):
        c = np.asarray(c, dtype=float)
        return self.space.norm(c @ self.U)

    @property
    def is_euclidean(self):
        return self.space.is_euclidean

    @cached_property
    def section_facets(self):
        H = self.space.ball_facets
        if H is None:
            return None
        Hs = H @ self.U.T
        # drop facets whose restriction is (near) zero: they never bind
        keep = np.linalg.norm(Hs, axis=1) > 1e-12
        return Hs[keep]

    @cached_property
    def section_vertices(self):
        """Vertices of the k-dimensional unit-ball section (polytopal kinds)."""
        H = self.section_facets
        if H is None or self.k > 3:
            return None
        return _ball_vertices_from_facets(H, self.k)

    def dual_sup(self, p) -> float:
        """sup of p.c over the section unit ball = dual norm of p on the plane."""
        p = np.asarray(p, dtype=float)
        if np.max(np.abs(p)) == 0.0:
            return 0.0
        if self.is_euclidean:
            return float(np.linalg.norm(p))
        if self.k == 1:
            return float(abs(p[0]) / self.value(np.array([1.0])))
        V = self.section_vertices
        if V is not None:
            return float(np.max(V @ p))
        return self._dual_sup_generic(p)

    def _dual_sup_generic(self, p):
        # Hahn-Banach: the plane dual norm is the minimal dual norm over all
        # ambient extensions f with U f = p; the extension set is the affine
        # space U^T p + ker(U .), and the dual norm is convex along it.
        from ._opt import minimize_convex

        f0 = self.U.T @ p
        N = _null_space_rows(self.U)
        if N.shape[0] == 0:
            return float(self.space.dual_norm(f0))

        def obj(t):
            return self.space.dual_norm(f0 + t @ N)

        scale = max(1.0, float(np.linalg.norm(f0)))
        _, val = minimize_convex(obj, np.zeros(N.shape[0]), step=scale, tol=1e-10)
        return float(val)

    def min_norm_on_level(self, p, level=1.0):
        """argmin of the restricted norm over the hyperplane {p.c = level}."""
        from ._opt import minimize_convex

        p = np.asarray(p, dtype=float)
        c0 = p * (level / (p @ p))
        N = _null_space_rows(p[None, :])
        if N.shape[0] == 0:
            return c0

        def obj(t):
            return self.value(c0 + t @ N)

        t, _ = minimize_convex(obj, np.zeros(N.shape[0]), step=1.0, tol=1e-11)
        return c0 + t @ N


def _null_space_rows(rows):
    """Orthonormal rows spanning the null space of the given row space."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    n = rows.shape[1]
    _, s, Vt = np.linalg.svd(rows)
    rank = int(np.sum(s > 1e-12 * max(1.0, s[0] if s.size else 1.0)))
    return Vt[rank:n]


def _ball_vertices_from_facets(H, k):
    """Vertex enumeration of {x in R^k : H x <= 1} via polarity, k <= 3."""
    if k == 1:
        h = H[:, 0]
        upper = 1.0 / np.min(h[h > 1e-12]) if np.any(h > 1e-12) else None
        lower = 1.0 / np.max(h[h < -1e-12]) if np.any(h < -1e-12) else None
        if upper is None or lower is None:
            raise NormSpecError("unbounded ball section")
        return np.array([[lower], [upper]])
    from scipy.spatial import ConvexHull

    try:
        hull = ConvexHull(H, qhull_options="QJ1e-11")
    except Exception as exc:
        raise NormSpecError(f"ball section vertex enumeration failed: {exc}")
    eqs = hull.equations  # rows (normal, offset), normal.y + offset <= 0 inside
    normals, offsets = eqs[:, :-1], eqs[:, -1]
    if np.any(offsets > -1e-12):
        raise NormSpecError("unbounded ball section")
    verts = normals / (-offsets[:, None])
    # dedupe coplanar-split facets
    key = np.round(verts, 9)
    _, idx = np.unique(key, axis=0, return_index=True)
    return verts[np.sort(idx)]


def subspace_dual_norm(space: NormedSpace, subspace_basis, phi) -> float:
    """Minimal-extension dual norm of a covector defined on a subspace.

    ``phi`` gives the values of the covector on the basis vectors; the result
    is sup phi(w)/||w|| over nonzero w in the span. Deterministic.
    """
    B = np.atleast_2d(np.asarray(subspace_basis, dtype=float))
    if B.shape[1] != space.dim:
        raise DimensionMismatch("basis vectors must have length dim")
    k = B.shape[0]
    _, s, _ = np.linalg.svd(B)
    if s.size < k or s[-1] <= 1e-10 * s[0]:
        raise ValueError("subspace basis is linearly dependent")
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (k,):
        raise DimensionMismatch("phi must give one value per basis vector")
    if np.max(np.abs(phi)) == 0.0:
        return 0.0
    Q, _ = np.linalg.qr(B.T)
    U = Q.T[:k]
    M = B @ U.T  # B = M U
    p = np.linalg.solve(M.T, phi)  # covector in plane coordinates
    return SubspaceNorm(space, U).dual_sup(p)


class CoefficientGroup:
    """Normed abelian coefficient group: Z, Z/mZ, or R.

    Elements are raw payloads (ints for Z and Zm, floats for R); the group
    object supplies the algebra and the norm.
    """

    def __init__(self, kind: str, m: int | None = None):
        if kind not in ("Z", "Zm", "R"):
            raise GroupMismatch(f"unknown group kind {kind!r}")
        if kind == "Zm":
            if m is None or int(m) < 2:
                raise GroupMismatch("Zm requires modulus m >= 2")
            m = int(m)
        else:
            m = None
        self.kind = kind
        self.m = m

    @classmethod
    def integers(cls):
        return cls("Z")

    @classmethod
    def integers_mod(cls, m):
        return cls("Zm", m)

    @classmethod
    def reals(cls):
        return cls("R")

    def coerce(self, g):
        if self.kind == "Z":
            h = int(round(float(g)))
            if abs(float(g) - h) > 1e-9:
                raise GroupMismatch(f"{g!r} is not an integer coefficient")
            return h
        if self.kind == "Zm":
            return int(round(float(g))) % self.m
        return float(g)

    def add(self, g, h):
        if self.kind == "Zm":
            return (g + h) % self.m
        return g + h

    def neg(self, g):
        if self.kind == "Zm":
            return (-g) % self.m
        return -g

    def norm(self, g) -> float:
        if self.kind == "Zm":
            r = g % self.m
            return float(min(r, self.m - r))
        return float(abs(g))

    def is_zero(self, g, tol=0.0) -> bool:
        return self.norm(g) <= tol

    def zero(self):
        return 0 if self.kind in ("Z", "Zm") else 0.0

    def scaled_down(self, g, step):
        """Project toward zero onto the step grid (Reals); identity otherwise.

        Norm-nonincreasing by construction: |pi(g)| <= |g|.
        """
        if self.kind != "R":
            return g
        step = float(step)
        if step <= 0:
            return g
        return math.floor(abs(g) / step) * step * (1.0 if g >= 0 else -1.0)

    def ball_elements(self, d):
        """The ball {|g| <= d} for discrete kinds; None for R (use a grid)."""
        if self.kind == "Zm":
            return [r for r in range(self.m) if self.norm(r) <= d]
        if self.kind == "Z":
            n = int(math.floor(d))
            return list(range(-n, n + 1))
        return None

    def random(self, rng, cap):
        """Deterministic random nonzero-ish element with |g| <= cap."""
        if self.kind == "Z":
            n = max(1, int(cap))
            return int(rng.integers(-n, n + 1))
        if self.kind == "Zm":
            elems = self.ball_elements(cap)
            return int(elems[rng.integers(0, len(elems))])
        return float(rng.uniform(-cap, cap))

    def same(self, other):
        return (self.kind, self.m) == (other.kind, other.m)

    def require_same(self, other):
        if not self.same(other):
            raise GroupMismatch(f"group mismatch: {self} vs {other}")

    def coeff_to_json(self, g):
        return repr(float(g)) if self.kind == "R" else int(g)

    def coeff_from_json(self, v):
        return float(v) if self.kind == "R" else self.coerce(v)

    def to_json(self):
        out = {"kind": self.kind}
        if self.kind == "Zm":
            out["m"] = self.m
        return out

    @classmethod
    def from_json(cls, obj):
        return cls(obj["kind"], obj.get("m"))

    def __eq__(self, other):
        return isinstance(other, CoefficientGroup) and self.same(other)

    def __hash__(self):
        return hash((self.kind, self.m))

    def __repr__(self):
        return {"Z": "Z", "Zm": f"Z/{self.m}", "R": "R"}[self.kind]
