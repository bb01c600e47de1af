"""Cones over polyhedral chains and the quantization operators that make the
compactness argument executable.

``cone_quantize`` deforms a chain onto cones over quantized cell boundaries:
the chain is partitioned into cells by norm balls (processed in fixed center
order, each cell claiming what earlier balls left), cell radii are chosen by
scanning slice masses over candidates in [delta, 2*delta], and each cell piece
is replaced by the cone over its recursively quantized boundary. Error budgets
are certified flat-norm bounds built from exactly computed cone masses, never
from unspecified lemma constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _geom
from .chains import (
    REL_TOL,
    ChainError,
    OrientedPolytope,
    PolyChain,
    SimpleChain,
    boundary,
    canonicalize,
    clip_chain_polytope,
)
from .foundation import NormedSpace
from .mass import mass
from .regions import ball_polytope


class QuantizeError(ChainError):
    pass


@dataclass
class ErrorBudget:
    """Itemized certified bound on the flat distance input -> output."""

    items: list = field(default_factory=list)

    def add(self, description: str, bound: float):
        self.items.append((description, float(bound)))

    @property
    def total(self) -> float:
        return float(sum(b for _, b in self.items))

    def merged(self, other: "ErrorBudget", prefix: str = "") -> "ErrorBudget":
        out = ErrorBudget(list(self.items))
        for desc, b in other.items:
            out.add(prefix + desc, b)
        return out

    def to_json(self):
        return {"items": [{"description": d, "bound": b} for d, b in self.items],
                "total": self.total}


# ---------------------------------------------------------------------------
# cones


def cone(z, chain: PolyChain) -> PolyChain:
    """Cone over the chain at apex z: the (k+1)-chain joining z to every
    summand; faces whose affine hull contains z map to zero. Oriented so the
    boundary of the cone contains the chain with its own orientation."""
    chain = canonicalize(chain)
    z = np.asarray(z, dtype=float)
    space, group = chain.space, chain.group
    k = chain.k
    if k + 1 > space.dim:
        return PolyChain.zero(space, group, min(k + 1, space.dim))
    scale = max(chain.scale_extent(), float(np.abs(z).max(initial=0.0)), 1.0)
    vol_tol = REL_TOL * scale ** (k + 1)
    parts = []
    for s in chain.summands:
        poly = s.poly
        if k == 0:
            ambs = [poly.vertices]
            signed = s.coeff
        else:
            U, base = poly.plane.basis, poly.plane_base
            cells, bsign = poly.cells_in(U, base)
            signed = s.coeff if bsign > 0 else group.neg(s.coeff)
            ambs = [base + c @ U for c in cells]
        for amb in ambs:
            verts = np.vstack([z[None, :], amb])
            basis = amb - z
            vol = _gram_volume(basis)
            if vol <= vol_tol:
                continue  # z in the affine hull of this face: zero by rule
            parts.append(SimpleChain(signed,
                                     OrientedPolytope(verts, basis, validate=False)))
    return canonicalize(PolyChain(space, group, k + 1, parts))


def _gram_volume(basis):
    G = basis @ basis.T
    det = float(np.linalg.det(G))
    if det <= 0:
        return 0.0
    return math.sqrt(det) / math.factorial(basis.shape[0])


def cone_boundary_check(z, chain: PolyChain) -> float:
    """Residual mass of the identity boundary(cone) = chain - cone(boundary)."""
    if chain.k < 1:
        raise ChainError("the cone boundary identity needs k >= 1")
    C = cone(z, chain)
    dC = boundary(C) if not C.is_zero else PolyChain.zero(chain.space, chain.group,
                                                          chain.k)
    resid = dC - chain + cone(z, boundary(chain))
    return mass(resid)


def cone_mass_ratio(z, chain: PolyChain) -> float:
    """mass(cone) / (max distance from z to the support, times mass)."""
    chain = canonicalize(chain)
    if chain.is_zero:
        raise ChainError("cone mass ratio of the zero chain is undefined")
    z = np.asarray(z, dtype=float)
    V = np.vstack([s.poly.vertices for s in chain.summands])
    maxdist = float(np.max(chain.space.norm(V - z)))
    m = mass(chain)
    C = cone(z, chain)
    mc = mass(C) if not C.is_zero else 0.0
    return mc / (maxdist * m)


# ---------------------------------------------------------------------------
# 0-chain quantization


def quantize_zero_chain(chain: PolyChain, centers, delta, coeff_step=None,
                        eps=None):
    """Snap a 0-chain to centers and project coefficients through a finite net.

    Returns (quantized chain, ErrorBudget). The budget is the mass of the
    explicit segment certificate plus the mass of the projection residual,
    which together bound the flat distance. For discrete groups the
    coefficient net is exact; for the reals a grid step is required (taken as
    eps / (4 N) when only eps is given), and the projection truncates toward
    zero so it never increases the norm.
    """
    chain = canonicalize(chain)
    if chain.k != 0:
        raise ChainError("quantize_zero_chain needs a 0-chain")
    space, group = chain.space, chain.group
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    n_centers = centers.shape[0]
    delta = float(delta)
    if group.kind == "R":
        if coeff_step is None:
            if eps is None:
                raise QuantizeError("real coefficients need a grid step or eps")
            coeff_step = eps / (4.0 * n_centers)
    budget = ErrorBudget()
    sums = {}
    cert_mass = 0.0
    tol = 10 * REL_TOL * max(1.0, chain.scale_extent())
    for s in chain.summands:
        x = s.poly.vertices[0]
        dists = space.norm(centers - x)
        j = int(np.argmin(dists))
        if dists[j] > delta + tol:
            raise QuantizeError(
                f"support point {x.tolist()} not covered by any center "
                f"within delta={delta}")
        cert_mass += group.norm(s.coeff) * float(dists[j])
        sums[j] = group.add(sums.get(j, group.zero()), s.coeff)
    parts = []
    resid_mass = 0.0
    for j, g in sorted(sums.items()):
        h = group.scaled_down(g, coeff_step) if group.kind == "R" else g
        resid_mass += group.norm(group.add(h, group.neg(g)))
        if not group.is_zero(h, 1e-15):
            pt = OrientedPolytope(centers[j][None, :],
                                  np.zeros((0, space.dim)), validate=False)
            parts.append(SimpleChain(h, pt))
    budget.add("segment certificate mass", cert_mass)
    budget.add("coefficient projection residual mass", resid_mass)
    out = canonicalize(PolyChain(space, group, 0, parts))
    return out, budget


# ---------------------------------------------------------------------------
# cone-over-balls quantization for k >= 1


def choose_cell_radii(chain: PolyChain, centers, delta, candidates=32,
                      ball_facets=32):
    """Nonexceptional enlarged radii in [delta, 2*delta] per center, picked by
    scanning the mass of the sphere slice over a deterministic candidate grid."""
    space = chain.space
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    gammas = []
    bchain = boundary(chain) if chain.k >= 1 else None
    for c in centers:
        best_gamma, best_mass = None, math.inf
        for gamma in np.linspace(delta, 2 * delta, candidates):
            try:
                ball = ball_polytope(space, c, float(gamma), ball_facets)
                inside, _ = clip_chain_polytope(chain, ball.halfspaces)
                d_in = boundary(inside) if not inside.is_zero else None
                b_in, _ = clip_chain_polytope(bchain, ball.halfspaces)
                slice_mass = 0.0
                if d_in is not None or not b_in.is_zero:
                    left = d_in if d_in is not None else \
                        PolyChain.zero(space, chain.group, chain.k - 1)
                    slice_mass = mass(left - b_in)
            except ChainError:
                continue
            if slice_mass < best_mass - 1e-15:
                best_mass, best_gamma = slice_mass, float(gamma)
        if best_gamma is None:
            raise QuantizeError(
                f"no nonexceptional radius in [{delta}, {2*delta}] for center "
                f"{c.tolist()} at scan resolution {candidates}")
        gammas.append(best_gamma)
    return gammas


def cone_quantize(chain: PolyChain, centers, delta, coeff_step=None, eps=None,
                  ball_facets=32, radius_candidates=32):
    """Deform a chain onto cones over quantized cell boundaries.

    Returns (quantized chain, ErrorBudget). Per cell l with apex z_l the
    budget carries two exactly computed masses: the cone over the cell piece
    (the filling used in the certificate) and the cone over the boundary
    quantization defect; their sum bounds the flat distance input -> output.
    """
    chain = canonicalize(chain)
    if chain.k == 0:
        return quantize_zero_chain(chain, centers, delta, coeff_step, eps)
    space, group = chain.space, chain.group
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    if chain.is_zero:
        return chain, ErrorBudget()
    gammas = choose_cell_radii(chain, centers, delta, radius_candidates,
                               ball_facets)
    remaining = chain
    out_parts = []
    budget = ErrorBudget()
    for l, c in enumerate(centers):
        if remaining.is_zero:
            break
        ball = ball_polytope(space, c, gammas[l], ball_facets)
        cell_chain, remaining = clip_chain_polytope(remaining, ball.halfspaces)
        if cell_chain.is_zero:
            continue
        D = boundary(cell_chain)
        if chain.k - 1 == 0:
            Q_l, _ = quantize_zero_chain(D, centers, delta, coeff_step, eps)
        else:
            Q_l, _ = cone_quantize(D, centers, delta, coeff_step, eps,
                                   ball_facets, radius_candidates)
        item1 = mass(cone(c, cell_chain))
        item2 = mass(cone(c, D - Q_l))
        budget.add(f"cell {l}: cone over cell piece", item1)
        budget.add(f"cell {l}: cone over boundary quantization defect", item2)
        out = cone(c, Q_l)
        out_parts.extend(out.summands)
    if not remaining.is_zero and mass(remaining) > 1e-9:
        raise QuantizeError("support not covered by the center balls")
    output = canonicalize(PolyChain(space, group, chain.k, out_parts))
    return output, budget
