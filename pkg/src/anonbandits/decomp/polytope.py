"""The anonymity polytope P_C(S), in exact rational arithmetic.

P_C(S) is the convex hull of 0/1 user-by-arm matrices in which every user
picks at most one arm, every arm of S gets at least C+1 users, and arms
outside S get none.  Its constraint matrix is that of a bipartite
b-matching, hence totally unimodular, so the polytope is cut out exactly by

    0 <= x_ij <= 1,  sum_j x_ij <= 1,  sum_i x_ij >= C+1 (j in S),  sum_i x_ij = 0 (j not in S)

and every face has an integral point, which a flow computation finds.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from anonbandits.decomp.flow import feasible_flow

ABSTAIN = -1


class NotInPolytope(ValueError):
    pass


def fraction_matrix(rows) -> np.ndarray:
    arr = np.array(rows, dtype=object)
    if arr.ndim != 2:
        raise ValueError("expected a matrix")
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        out[idx] = Fraction(v)
    return out


@dataclass(frozen=True, eq=False)
class PolytopePoint:
    entries: np.ndarray  # N x K object array of Fraction
    scope: frozenset[int]

    @classmethod
    def make(cls, rows, scope: Iterable[int]) -> "PolytopePoint":
        return cls(fraction_matrix(rows), frozenset(int(j) for j in scope))

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape


def check_membership(x: PolytopePoint, c: int) -> bool:
    """Exact test of x against the inequality description of P_C(scope)."""
    e = x.entries
    n, k = e.shape
    if any(j < 0 or j >= k for j in x.scope):
        return False
    for v in e.flat:
        if v < 0 or v > 1:
            return False
    for i in range(n):
        if sum(e[i]) > 1:
            return False
    for j in range(k):
        col = sum(e[:, j])
        if j in x.scope:
            if col < c + 1:
                return False
        elif col != 0:
            return False
    return True


def is_integral_vertex(v: np.ndarray, scope: frozenset[int], c: int) -> bool:
    """0/1 matrix with row sums <= 1, columns in scope >= c+1, others empty."""
    v = np.asarray(v)
    if not np.all((v == 0) | (v == 1)):
        return False
    if np.any(v.sum(axis=1) > 1):
        return False
    cols = v.sum(axis=0)
    for j in range(v.shape[1]):
        if (j in scope and cols[j] < c + 1) or (j not in scope and cols[j] != 0):
            return False
    return True


def vertex_to_assignment(v: np.ndarray) -> np.ndarray:
    """Row-wise arm index of a 0/1 vertex, ABSTAIN for empty rows."""
    v = np.asarray(v, dtype=np.int64)
    arm = v.argmax(axis=1)
    return np.where(v.sum(axis=1) > 0, arm, ABSTAIN)


def assignment_to_vertex(arm_of: np.ndarray, n_arms: int) -> np.ndarray:
    arm_of = np.asarray(arm_of)
    v = np.zeros((arm_of.size, n_arms), dtype=np.int64)
    rows = np.flatnonzero(arm_of != ABSTAIN)
    v[rows, arm_of[rows]] = 1
    return v


def face_vertex(x: np.ndarray, scope: frozenset[int], c: int) -> np.ndarray | None:
    """An integral point of P_C(scope) lying on the minimal face that contains x.

    Every constraint tight at x is imposed as an equality; the remaining
    system is a degree-constrained bipartite subgraph problem.
    """
    n, k = x.shape
    arms = sorted(scope)
    src, snk = n + len(arms), n + len(arms) + 1
    edges: list[tuple[int, int, int, int]] = []
    cells: list[tuple[int, int]] = []
    for i in range(n):
        row_tight = sum(x[i]) == 1
        edges.append((src, i, 1 if row_tight else 0, 1))
    for a, j in enumerate(arms):
        for i in range(n):
            if x[i, j] > 0:
                lo = 1 if x[i, j] == 1 else 0
                edges.append((i, n + a, lo, 1))
                cells.append((i, j))
    for a, j in enumerate(arms):
        col_tight = sum(x[:, j]) == c + 1
        edges.append((n + a, snk, c + 1, c + 1 if col_tight else n))
    flows = feasible_flow(n + len(arms) + 2, edges, src, snk)
    if flows is None:
        return None
    v = np.zeros((n, k), dtype=np.int64)
    for (i, j), f in zip(cells, flows[n : n + len(cells)]):
        v[i, j] = f
    return v


def _max_step(x: np.ndarray, d: np.ndarray, scope: frozenset[int], c: int) -> Fraction | None:
    """Largest theta with x + theta*d still satisfying the inequality description."""
    best: Fraction | None = None

    def offer(val: Fraction) -> None:
        nonlocal best
        if best is None or val < best:
            best = val

    n, k = x.shape
    for (i, j), dij in np.ndenumerate(d):
        if dij < 0:
            offer(x[i, j] / -dij)
        elif dij > 0:
            offer((1 - x[i, j]) / dij)
    for i in range(n):
        rd = sum(d[i])
        if rd > 0:
            offer((1 - sum(x[i])) / rd)
    for j in scope:
        cd = sum(d[:, j])
        if cd < 0:
            offer((sum(x[:, j]) - (c + 1)) / -cd)
    return best


def caratheodory_decompose(x: PolytopePoint, c: int) -> list[tuple[Fraction, np.ndarray]]:
    """Write x as a convex combination of at most N*|S| + 1 integral vertices.

    Returns (weight, assignment) pairs; assignments use ABSTAIN for users the
    vertex leaves out.  Weights are exact and sum to one.
    """
    if not check_membership(x, c):
        raise NotInPolytope("point violates the anonymity polytope constraints")
    cur = x.entries.copy()
    mass = Fraction(1)
    out: list[tuple[Fraction, np.ndarray]] = []
    while True:
        if all(v == 0 or v == 1 for v in cur.flat):
            out.append((mass, vertex_to_assignment(cur.astype(np.int64))))
            return out
        v = face_vertex(cur, x.scope, c)
        if v is None:  # cannot happen for a member; the polytope is integral
            raise NotInPolytope("no integral point on the minimal face")
        d = cur - v
        theta = _max_step(cur, d, x.scope, c)
        if theta is None or theta <= 0:
            raise ArithmeticError("degenerate Caratheodory step")
        out.append((mass * theta / (1 + theta), vertex_to_assignment(v)))
        mass = mass / (1 + theta)
        cur = cur + theta * d


def reconstruct(pairs: list[tuple[Fraction, np.ndarray]], n_arms: int) -> np.ndarray:
    """Sum of weight * vertex, as an exact object matrix."""
    n = pairs[0][1].size
    acc = np.full((n, n_arms), Fraction(0), dtype=object)
    for lam, arm_of in pairs:
        acc = acc + lam * assignment_to_vertex(arm_of, n_arms).astype(object)
    return acc
