"""Self-contained dense simplex solver with a best-first branch-and-bound
integer mode.

Solves  min c.x  s.t.  A x = b, x >= 0.  Callers that can supply a feasible
starting basis (both client modules can) skip phase one entirely.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

OPTIMAL = "optimal"
UNBOUNDED = "unbounded"
INFEASIBLE = "infeasible"


class LPError(RuntimeError):
    pass


class LPIterationLimit(LPError):
    """Raised when the pivot budget is exhausted; never swallowed."""

    def __init__(self, iterations):
        super().__init__(f"simplex iteration limit hit after {iterations} pivots")
        self.iterations = iterations


@dataclass
class LPResult:
    x: np.ndarray
    value: float
    status: str
    iterations: int
    basis: list = field(default_factory=list)


def _pivot(T, row, col):
    T[row] = T[row] / T[row, col]
    colv = T[:, col].copy()
    colv[row] = 0.0
    T -= np.outer(colv, T[row])


def _iterate(T, basis, n, maxiter, eps=1e-9):
    """Run primal simplex pivots on tableau T (cost row last). Returns pivots."""
    m = T.shape[0] - 1
    it = 0
    bland_after = max(200, 5 * (m + n))
    while True:
        costs = T[-1, :n]
        neg = np.flatnonzero(costs < -eps)
        if neg.size == 0:
            return it
        if it < bland_after:
            col = neg[np.argmin(costs[neg])]
        else:  # Bland's rule: guaranteed finite
            col = neg[0]
        colvals = T[:m, col]
        pos = np.flatnonzero(colvals > 1e-11)
        if pos.size == 0:
            raise LPError(UNBOUNDED)
        ratios = T[pos, n] / colvals[pos]
        best = ratios.min()
        ties = pos[ratios <= best + 1e-12]
        row = ties[int(np.argmin([basis[i] for i in ties]))]
        _pivot(T, row, col)
        basis[row] = col
        it += 1
        if it >= maxiter:
            raise LPIterationLimit(it)


def solve_lp(c, A, b, basis=None, maxiter=50000) -> LPResult:
    """Minimize c.x subject to A x = b, x >= 0.

    ``basis``: optional list of column indices forming a feasible starting
    basis (B^-1 b >= 0). Without it a phase-one solve with artificials runs
    first. Raises LPError("infeasible"/"unbounded") and LPIterationLimit.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).copy()
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    total_it = 0

    if basis is not None:
        basis = list(basis)
        B = A[:, basis]
        try:
            Binv_A = np.linalg.solve(B, A)
            Binv_b = np.linalg.solve(B, b)
        except np.linalg.LinAlgError:
            basis = None
        else:
            if np.min(Binv_b) < -1e-9:
                basis = None  # caller's basis not actually feasible
            else:
                T = np.zeros((m + 1, n + 1))
                T[:m, :n] = Binv_A
                T[:m, n] = np.maximum(Binv_b, 0.0)
                cb = c[basis]
                T[-1, :n] = c - cb @ Binv_A
                T[-1, n] = -cb @ T[:m, n]

    if basis is None:
        # phase one: flip rows to b >= 0, add artificials
        Af = A.copy()
        bf = b.copy()
        flip = bf < 0
        Af[flip] *= -1.0
        bf[flip] *= -1.0
        T = np.zeros((m + 1, n + m + 1))
        T[:m, :n] = Af
        T[:m, n:n + m] = np.eye(m)
        T[:m, -1] = bf
        basis = list(range(n, n + m))
        # phase-one costs: sum of artificials
        T[-1, :n] = -Af.sum(axis=0)
        T[-1, -1] = -bf.sum()
        total_it += _iterate(T, basis, n + m, maxiter)
        if T[-1, -1] < -1e-7:
            raise LPError(INFEASIBLE)
        # drive remaining artificials out of the basis
        for row in range(m):
            if basis[row] >= n:
                cands = np.flatnonzero(np.abs(T[row, :n]) > 1e-9)
                if cands.size:
                    _pivot(T, row, cands[0])
                    basis[row] = cands[0]
        keep = [r for r in range(m) if basis[r] < n]
        if len(keep) < m:  # redundant rows
            T = np.vstack([T[keep], T[-1:]])
            basis = [basis[r] for r in keep]
            m = len(keep)
        T = np.hstack([T[:, :n], T[:, -1:]])
        cb = np.array([c[j] for j in basis])
        T[-1, :n] = c - cb @ T[:m, :n]
        T[-1, n] = -cb @ T[:m, n]

    try:
        total_it += _iterate(T, basis, n, maxiter - total_it)
    except LPError as exc:
        if str(exc) == UNBOUNDED:
            return LPResult(np.full(n, np.nan), -np.inf, UNBOUNDED, total_it, basis)
        raise

    x = np.zeros(n)
    # recompute basic values from the original data for a clean solution
    B = A[:, basis]
    try:
        xb = np.linalg.solve(B, b)
    except np.linalg.LinAlgError:
        xb = T[:len(basis), n]
    for r, j in enumerate(basis):
        x[j] = max(xb[r], 0.0)
    return LPResult(x, float(c @ x), OPTIMAL, total_it, list(basis))


@dataclass
class ILPResult:
    x: np.ndarray
    value: float
    status: str
    iterations: int
    nodes: int
    relaxation_integral: bool


def solve_ilp(c, A, b, basis=None, integrality_tol=1e-6, node_limit=4000,
              maxiter=50000) -> ILPResult:
    """Branch and bound over the LP relaxation; all variables integer.

    Best-first on the relaxation bound. The fast path (relaxation already
    integral) is flagged in the result.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    n = A.shape[1]

    root = solve_lp(c, A, b, basis=basis, maxiter=maxiter)
    if root.status != OPTIMAL:
        return ILPResult(root.x, root.value, root.status, root.iterations, 1, False)
    frac = np.abs(root.x - np.round(root.x))
    if frac.max(initial=0.0) <= integrality_tol:
        x = np.round(root.x)
        return ILPResult(x, float(c @ x), OPTIMAL, root.iterations, 1, True)

    counter = 0
    heap = [(root.value, counter, [])]  # (bound, tiebreak, extra rows)
    incumbent_x, incumbent_val = None, np.inf
    nodes = 0
    its = root.iterations
    while heap:
        bound, _, extras = heapq.heappop(heap)
        if bound >= incumbent_val - 1e-9:
            continue
        nodes += 1
        if nodes > node_limit:
            raise LPError(f"branch-and-bound node limit ({node_limit}) exceeded")
        # rebuild the system with the branching rows; each row adds one slack
        ne = len(extras)
        Ax = np.zeros((A.shape[0] + ne, n + ne))
        Ax[:A.shape[0], :n] = A
        bx = np.concatenate([b, np.zeros(ne)])
        for i, (var, sense, bnd) in enumerate(extras):
            Ax[A.shape[0] + i, var] = 1.0
            Ax[A.shape[0] + i, n + i] = 1.0 if sense == "le" else -1.0
            bx[A.shape[0] + i] = bnd
        cx = np.concatenate([c, np.zeros(ne)])
        try:
            res = solve_lp(cx, Ax, bx, basis=None, maxiter=maxiter)
        except LPError:
            continue
        its += res.iterations
        if res.status != OPTIMAL or res.value >= incumbent_val - 1e-9:
            continue
        xv = res.x[:n]
        frac = np.abs(xv - np.round(xv))
        j = int(np.argmax(frac))
        if frac[j] <= integrality_tol:
            xint = np.round(xv)
            val = float(c @ xint)
            if val < incumbent_val:
                incumbent_x, incumbent_val = xint, val
            continue
        v = xv[j]
        counter += 1
        heapq.heappush(heap, (res.value, counter, extras + [(j, "le", np.floor(v))]))
        counter += 1
        heapq.heappush(heap, (res.value, counter, extras + [(j, "ge", np.ceil(v))]))

    if incumbent_x is None:
        raise LPError(INFEASIBLE)
    return ILPResult(incumbent_x, incumbent_val, OPTIMAL, its, nodes, False)
