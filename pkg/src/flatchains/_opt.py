"""Deterministic multi-start optimizers used by the dual-norm and density code.

Everything here is seed-free or takes an explicit seed: the same inputs always
produce the same outputs, so optimizer-backed quantities are reproducible.
"""

from __future__ import annotations

import math

import numpy as np

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


def sphere_grid(k: int, n: int) -> np.ndarray:
    """Deterministic set of ~n unit vectors in R^k covering the sphere.

    k = 1 gives {+1, -1}; k = 2 uses evenly spaced angles; k >= 3 uses a
    golden-spiral construction on S^2 and a Gaussian low-discrepancy fill
    beyond that.
    """
    if k == 1:
        return np.array([[1.0], [-1.0]])
    if k == 2:
        t = np.arange(n) * (2.0 * math.pi / n)
        return np.column_stack([np.cos(t), np.sin(t)])
    if k == 3:
        i = np.arange(n) + 0.5
        phi = np.arccos(1.0 - 2.0 * i / n)
        theta = 2.0 * math.pi * i / GOLDEN
        return np.column_stack(
            [np.sin(phi) * np.cos(theta), np.sin(phi) * np.sin(theta), np.cos(phi)]
        )
    rng = np.random.default_rng(20240 + 131 * k)
    pts = rng.standard_normal((n, k))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return pts


def compass_max(fn, x0: np.ndarray, step: float, tol: float, max_iter: int = 400):
    """Coordinate-wise pattern search maximization of ``fn`` from ``x0``.

    Returns (x_best, value). Deterministic: axes are probed in order and the
    step halves whenever no axis improves.
    """
    x = np.array(x0, dtype=float)
    best = fn(x)
    m = x.size
    it = 0
    while step > tol and it < max_iter:
        it += 1
        improved = False
        for i in range(m):
            for s in (step, -step):
                cand = x.copy()
                cand[i] += s
                val = fn(cand)
                if val > best + 1e-15:
                    x, best = cand, val
                    improved = True
                    break
        if not improved:
            step *= 0.5
    return x, best


def maximize_on_sphere(fn, k: int, starts: int = 64, tol: float = 1e-8):
    """Maximize fn(u) over unit vectors u in R^k.

    Multi-start: deterministic grid, then compass refinement in the ambient
    coordinates with renormalization folded into the objective.
    Returns (u_best, value, n_starts).
    """

    def wrapped(x):
        nrm = np.linalg.norm(x)
        if nrm < 1e-14:
            return -math.inf
        return fn(x / nrm)

    grid = sphere_grid(k, starts)
    vals = np.array([fn(u) for u in grid])
    order = np.argsort(vals)[::-1]
    best_u, best_v = grid[order[0]], vals[order[0]]
    # refine the few best candidates only; the rest are seeds for coverage
    for idx in order[: min(4, len(order))]:
        x, v = compass_max(wrapped, grid[idx], 0.25, tol)
        if v > best_v:
            best_u, best_v = x / np.linalg.norm(x), v
    return best_u, best_v, len(grid)


def minimize_convex(fn, x0: np.ndarray, step: float = 0.5, tol: float = 1e-10,
                    max_iter: int = 600):
    """Compass-search minimizer for convex objectives. Returns (x, value)."""
    x, val = compass_max(lambda y: -fn(y), x0, step, tol, max_iter)
    return x, -val


def golden_section_max(fn, a: float, b: float, tol: float = 1e-10) -> tuple:
    """Golden-section maximization of a unimodal fn on [a, b]."""
    inv = 1.0 / GOLDEN
    c = b - (b - a) * inv
    d = a + (b - a) * inv
    fc, fd = fn(c), fn(d)
    while abs(b - a) > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - (b - a) * inv
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + (b - a) * inv
            fd = fn(d)
    x = 0.5 * (a + b)
    return x, fn(x)
