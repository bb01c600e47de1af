"""Polyhedral chain calculus in finite-dimensional normed spaces.

Chains of coefficient-weighted oriented convex polytopes with slicing-based
mass, halfspace and Lipschitz restrictions, cones, simplicial flat-norm
certificates, quantization operators, and a reproducible experiment harness.
"""

from ._geom import BACKEND as GEOMETRY_BACKEND
from .chains import (
    OrientedPolytope,
    PolyChain,
    SimpleChain,
    affine_pushforward,
    boundary,
    canonicalize,
    read_chain,
    simplex_polytope,
    support,
    write_chain,
)
from .foundation import CoefficientGroup, Functional, NormedSpace, subspace_dual_norm

__version__ = "0.1.0"

__all__ = [
    "GEOMETRY_BACKEND",
    "NormedSpace",
    "Functional",
    "CoefficientGroup",
    "subspace_dual_norm",
    "OrientedPolytope",
    "SimpleChain",
    "PolyChain",
    "simplex_polytope",
    "canonicalize",
    "boundary",
    "support",
    "affine_pushforward",
    "read_chain",
    "write_chain",
]
