"""Exact 1-Wasserstein distances.

On the line the distance is the integral of ``|F_P - F_Q|``, evaluated
exactly from CDF breakpoints.  On 2-D grids with l1 ground cost it is the
value of a transportation LP, solved here by a network (transportation)
simplex that also returns dual potentials.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .measures import (
    DiscreteMeasure1D,
    FiniteMeasure1D,
    FiniteMeasure2D,
    MixtureMeasure,
)

TOL = 1e-12
DEGENERACY_LIMIT = 50


class TransportError(RuntimeError):
    """Internal solver failure; valid inputs never trigger it."""


def as_measure_1d(m):
    if isinstance(m, (FiniteMeasure1D, DiscreteMeasure1D, MixtureMeasure)):
        return m
    x = np.asarray(m, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empty support")
    ux, counts = np.unique(x, return_counts=True)
    return DiscreteMeasure1D(ux, counts / x.size)


def _abs_linear_integral(d0, d1, h):
    # integral over [0, h] of |linear function from d0 to d1|
    same = d0 * d1 >= 0
    a0, a1 = np.abs(d0), np.abs(d1)
    denom = np.where(same, 1.0, a0 + a1)
    crossing = (d0 * d0 + d1 * d1) / (2 * denom)
    return h * np.where(same, (a0 + a1) / 2, crossing)


def w1_1d(P, Q) -> float:
    """W1 on the line as the exact integral of ``|F_P - F_Q|``.

    ``P`` and ``Q`` may be measure objects or raw arrays of sample positions.
    Between consecutive breakpoints both CDFs are affine, so each segment is
    integrated in closed form, splitting at the sign change when there is one.
    """
    P, Q = as_measure_1d(P), as_measure_1d(Q)
    xs = np.union1d(np.union1d(P.breakpoints(), Q.breakpoints()), [0.0, 1.0])
    a, b = xs[:-1], xs[1:]
    d0 = P.cdf(a) - Q.cdf(a)
    d1 = P.cdf_left(b) - Q.cdf_left(b)
    return float(np.sum(_abs_linear_integral(d0, d1, b - a)))


def w1_grid_counts(p, counts, N: int) -> np.ndarray:
    """W1 between a grid measure ``p`` and empirical measures given by count rows.

    Vectorized form of ``w1_1d`` for many empirical measures on the same
    equidistant grid: ``sum_i |F_hat(x_i) - F(x_i)| / (n - 1)``.
    """
    p = np.asarray(p, dtype=float)
    counts = np.atleast_2d(counts)
    n = p.size
    F = np.cumsum(p)[:-1]
    Fh = np.cumsum(counts, axis=1)[:, :-1] / N
    return np.abs(Fh - F).sum(axis=1) / (n - 1)


# --- transportation simplex -------------------------------------------------

@dataclass(frozen=True)
class TransportPlan:
    """Optimal coupling between two finite measures.

    ``pi[a, b]`` is the mass sent from source atom ``a`` to target atom ``b``
    (atoms in row-major order of their grids).  ``dual_u``/``dual_v`` satisfy
    ``u_a + v_b <= cost[a, b]`` everywhere, with equality where ``pi > 0``.
    """

    pi: np.ndarray
    cost: float
    dual_u: np.ndarray
    dual_v: np.ndarray
    cost_matrix: np.ndarray
    source_shape: tuple
    target_shape: tuple
    pivots: int = 0

    def entries(self):
        """Nonzero entries as ``(from_index, to_index, mass)`` with grid indices."""
        out = []
        for a, b in zip(*np.nonzero(self.pi > 0)):
            fa = tuple(int(v) for v in np.unravel_index(a, self.source_shape))
            tb = tuple(int(v) for v in np.unravel_index(b, self.target_shape))
            out.append((fa, tb, float(self.pi[a, b])))
        return out

    def to_dict(self) -> dict:
        return {
            "cost": self.cost,
            "entries": [{"from": list(f), "to": list(t), "mass": m} for f, t, m in self.entries()],
            "dual_u": np.asarray(self.dual_u).reshape(self.source_shape).tolist(),
            "dual_v": np.asarray(self.dual_v).reshape(self.target_shape).tolist(),
        }


def _northwest_corner(a, b):
    m, k = len(a), len(b)
    a, b = a.copy(), b.copy()
    flow = {}
    i = j = 0
    while True:
        x = min(a[i], b[j])
        flow[(i, j)] = x
        a[i] -= x
        b[j] -= x
        if i == m - 1 and j == k - 1:
            break
        if (a[i] <= b[j] and i < m - 1) or j == k - 1:
            i += 1
        else:
            j += 1
    return flow


def _potentials(basis, C, m, k):
    rows = [[] for _ in range(m)]
    cols = [[] for _ in range(k)]
    for i, j in basis:
        rows[i].append(j)
        cols[j].append(i)
    u = np.full(m, np.nan)
    v = np.full(k, np.nan)
    u[0] = 0.0
    queue = deque([("r", 0)])
    while queue:
        kind, idx = queue.popleft()
        if kind == "r":
            for j in rows[idx]:
                if np.isnan(v[j]):
                    v[j] = C[idx, j] - u[idx]
                    queue.append(("c", j))
        else:
            for i in cols[idx]:
                if np.isnan(u[i]):
                    u[i] = C[i, idx] - v[idx]
                    queue.append(("r", i))
    if np.isnan(u).any() or np.isnan(v).any():
        raise TransportError("basis is not a spanning tree")
    return u, v, rows, cols


def _tree_path(rows, cols, start_row, end_col):
    """Edges on the tree path from row node ``start_row`` to column node ``end_col``."""
    prev = {("r", start_row): None}
    queue = deque([("r", start_row)])
    target = ("c", end_col)
    while queue:
        node = queue.popleft()
        if node == target:
            break
        kind, idx = node
        nbrs = [("c", j) for j in rows[idx]] if kind == "r" else [("r", i) for i in cols[idx]]
        for nb in nbrs:
            if nb not in prev:
                prev[nb] = node
                queue.append(nb)
    if target not in prev:
        raise TransportError("entering cell does not close a cycle")
    edges = []
    node = target
    while prev[node] is not None:
        p = prev[node]
        cell = (p[1], node[1]) if p[0] == "r" else (node[1], p[1])
        edges.append(cell)
        node = p
    edges.reverse()
    return edges


def transport_simplex(a, b, C, tol: float = TOL, max_pivots: int = 100_000):
    """Solve ``min <C, pi>`` over couplings of supplies ``a`` and demands ``b``.

    Entering cell: first cell (row-major) with reduced cost below ``-tol``.
    Leaving cell: first blocking cell met along the cycle; after
    ``DEGENERACY_LIMIT`` consecutive degenerate pivots the lowest-indexed
    blocking cell is taken instead (Bland).
    Returns ``(flow matrix, u, v, pivots)``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    C = np.asarray(C, dtype=float)
    m, k = len(a), len(b)
    flow = _northwest_corner(a, b)
    pivots = 0
    degenerate = 0
    while True:
        u, v, rows, cols = _potentials(flow.keys(), C, m, k)
        red = C - u[:, None] - v[None, :]
        neg = np.flatnonzero(red.ravel() < -tol * max(1.0, np.abs(C).max()))
        if neg.size == 0:
            break
        if pivots >= max_pivots:
            raise TransportError(f"no convergence after {max_pivots} pivots")
        ei, ej = divmod(int(neg[0]), k)
        path = _tree_path(rows, cols, ei, ej)
        minus = path[0::2]
        plus = path[1::2]
        theta = min(flow[c] for c in minus)
        blocking = [c for c in minus if flow[c] <= theta]
        leave = min(blocking) if degenerate >= DEGENERACY_LIMIT else blocking[0]
        for c in minus:
            flow[c] -= theta
        for c in plus:
            flow[c] += theta
        flow[(ei, ej)] = theta
        del flow[leave]
        degenerate = degenerate + 1 if theta <= 0 else 0
        pivots += 1
    pi = np.zeros((m, k))
    for (i, j), x in flow.items():
        pi[i, j] = max(x, 0.0)
    return pi, u, v, pivots


def l1_cost(X, Y) -> np.ndarray:
    X = np.atleast_2d(X)
    Y = np.atleast_2d(Y)
    return np.abs(X[:, None, :] - Y[None, :, :]).sum(axis=2)


def solve_discrete(p, X, q, Y):
    """Optimal transport between atoms ``X`` (weights ``p``) and ``Y`` (weights ``q``).

    Zero-mass atoms are pruned before solving; their potentials are filled in
    by c-transform so the returned duals stay feasible on every atom.
    """
    p = np.asarray(p, dtype=float).ravel()
    q = np.asarray(q, dtype=float).ravel()
    C = l1_cost(X, Y)
    sa = np.flatnonzero(p > 0)
    sb = np.flatnonzero(q > 0)
    if sa.size == 0 or sb.size == 0:
        raise TransportError("a measure with no mass reached the solver")
    sub, u_s, v_s, pivots = transport_simplex(p[sa], q[sb], C[np.ix_(sa, sb)])
    pi = np.zeros((p.size, q.size))
    pi[np.ix_(sa, sb)] = sub
    v = np.empty(q.size)
    v[sb] = v_s
    zb = np.setdiff1d(np.arange(q.size), sb)
    u_full_s = u_s
    if zb.size:
        v[zb] = np.min(C[np.ix_(sa, zb)] - u_full_s[:, None], axis=0)
    u = np.empty(p.size)
    u[sa] = u_s
    za = np.setdiff1d(np.arange(p.size), sa)
    if za.size:
        u[za] = np.min(C[za, :] - v[None, :], axis=1)
    cost = float(np.sum(C * pi))
    return pi, cost, u, v, C, pivots


def w1_grid_lp(P: FiniteMeasure2D, Q: FiniteMeasure2D):
    """l1-cost Wasserstein distance between two grid measures, with its plan."""
    pi, cost, u, v, C, pivots = solve_discrete(P.p, P.coords, Q.p, Q.coords)
    plan = TransportPlan(pi, cost, u, v, C, (P.nx, P.ny), (Q.nx, Q.ny), pivots)
    dual = float(np.dot(u, P.p.ravel()) + np.dot(v, Q.p.ravel()))
    if abs(dual - cost) > 1e-9:
        raise TransportError(f"primal {cost!r} and dual {dual!r} disagree")
    return cost, plan


@dataclass(frozen=True)
class DualCheck:
    gap: float
    max_violation: float
    violation_at: tuple | None

    @property
    def feasible(self) -> bool:
        return self.violation_at is None


def kr_dual_check(P: FiniteMeasure2D, Q: FiniteMeasure2D, plan: TransportPlan, tol: float = 1e-9) -> DualCheck:
    """Duality gap of ``plan`` and feasibility ``u_a + v_b <= cost(a, b)`` on the supports."""
    p, q = P.p.ravel(), Q.p.ravel()
    dual = float(np.dot(plan.dual_u, p) + np.dot(plan.dual_v, q))
    gap = abs(plan.cost - dual)
    sa, sb = np.flatnonzero(p > 0), np.flatnonzero(q > 0)
    slack = plan.dual_u[sa][:, None] + plan.dual_v[sb][None, :] - plan.cost_matrix[np.ix_(sa, sb)]
    worst = float(slack.max())
    where = None
    if worst > tol:
        i, j = np.unravel_index(int(np.argmax(slack)), slack.shape)
        fa = tuple(int(x) for x in np.unravel_index(sa[i], plan.source_shape))
        tb = tuple(int(x) for x in np.unravel_index(sb[j], plan.target_shape))
        where = (fa, tb)
    return DualCheck(gap, worst, where)


def embed_1d(m: FiniteMeasure1D, ny: int = 2) -> FiniteMeasure2D:
    """Place a grid measure on the bottom row of an ``n x ny`` grid."""
    p = np.zeros((m.n, ny))
    p[:, 0] = m.p
    return FiniteMeasure2D(m.n, ny, p)
