"""Anonymous decomposition back-ends: greedy, randomized and polytope (LP) based."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from anonbandits.decomp.graph import BatchedGraph, Decomposition, informative_counts
from anonbandits.decomp.polytope import (
    ABSTAIN,
    NotInPolytope,
    PolytopePoint,
    caratheodory_decompose,
    check_membership,
)


class ClusterTooSmall(ValueError):
    pass


def alpha_factor(k: int, c: int, u: int) -> int:
    """Approximation factor max(1, ceil(K(C+1)/U)) of the polytope decomposition."""
    if u < c + 1:
        raise ClusterTooSmall(f"U={u} < C+1={c + 1}; only the greedy decomposition (alpha=K) applies")
    return max(1, -(-k * (c + 1) // u))


def greedy_decompose(graph: BatchedGraph, c: int) -> Decomposition:
    """D copies, per arm j with |B_j| >= C+1, of 'everyone interested in j plays j'."""
    fallback = graph.fallback_arms()
    mask = graph.mask()
    deg = graph.degrees()
    rows = []
    for j in range(graph.n_arms):
        if deg[j] < c + 1:
            continue
        rows.append(np.where(mask[:, j], j, fallback))
    if not rows:
        return Decomposition(np.zeros((0, graph.n_users), dtype=np.int64), graph.n_arms, c)
    return Decomposition(np.repeat(np.array(rows), graph.demand, axis=0), graph.n_arms, c)


def random_decompose(
    graph: BatchedGraph, c: int, rng: np.random.Generator, cap_factor: int = 50, chunk: int = 64
) -> Decomposition:
    """Draw uniform-over-A_i assignments until every demanded pair is covered.

    Stops after ``cap_factor * K * D`` draws and flags a shortfall.
    """
    n, k = graph.n_users, graph.n_arms
    sizes = np.array([len(a) for a in graph.active_sets])
    table = np.zeros((n, max(sizes)), dtype=np.int64)
    for i, a in enumerate(graph.active_sets):
        table[i, : len(a)] = a
    need = np.where(graph.mask(), (-(-graph.demand // sizes))[:, None], 0)
    have = np.zeros((n, k), dtype=np.int64)
    cap = cap_factor * k * graph.demand
    drawn: list[np.ndarray] = []
    total = 0
    rows = np.arange(n)
    while total < cap:
        m = min(chunk, cap - total)
        pick = (rng.random((m, n)) * sizes).astype(np.int64)
        block = table[rows, pick]
        per_arm = np.bincount((block + k * np.arange(m)[:, None]).ravel(), minlength=m * k).reshape(m, k)
        informative = np.take_along_axis(per_arm, block, axis=1) >= c + 1
        # running tally per draw, to stop at the first draw that meets all demand
        gain = np.zeros((m, n, k), dtype=np.int64)
        gain[np.arange(m)[:, None], rows[None, :], block] = informative
        running = have[None] + np.cumsum(gain, axis=0)
        met = np.all((running >= need[None]).reshape(m, -1), axis=1)
        if met.any():
            stop = int(np.argmax(met)) + 1
            drawn.append(block[:stop])
            return Decomposition(np.concatenate(drawn), k, c, meta={"draws": total + stop})
        drawn.append(block)
        have = running[-1]
        total += m
    return Decomposition(np.concatenate(drawn), k, c, shortfall=True, meta={"draws": total})


def _emit(pairs, demand: int, fallback: np.ndarray) -> list[np.ndarray]:
    rows = []
    for lam, arm_of in pairs:
        if np.all(arm_of == ABSTAIN):
            continue
        copies = math.ceil(demand * lam)
        if copies == 0:
            continue
        row = np.where(arm_of == ABSTAIN, fallback, arm_of)
        rows.extend([row] * copies)
    return rows


def block_weights(graph: BatchedGraph, block: list[int]) -> np.ndarray:
    """w^(a)_ij = 1/|A_i ∩ S_a| on A_i ∩ S_a, zero elsewhere."""
    w = np.full((graph.n_users, graph.n_arms), Fraction(0), dtype=object)
    bs = set(block)
    for i, a in enumerate(graph.active_sets):
        inter = [j for j in a if j in bs]
        for j in inter:
            w[i, j] = Fraction(1, len(inter))
    return w


def arm_blocks(arms: list[int], block_size: int) -> list[list[int]]:
    return [arms[q : q + block_size] for q in range(0, len(arms), block_size)]


def lp_decompose(graph: BatchedGraph, c: int, u: int) -> Decomposition:
    """Polytope-based decomposition.

    If the normalized demand w lies in P_C over all demanded arms (always
    true when U >= K(C+1)), one Caratheodory decomposition of w suffices.
    Otherwise arms are split into blocks of floor(U/(C+1)) and each block's
    re-normalized demand is decomposed on its own.  Each vertex of weight
    lambda is used ceil(D * lambda) times.
    """
    if u < c + 1:
        raise ClusterTooSmall(f"U={u} < C+1={c + 1}")
    arms = graph.demanded_arms()
    fallback = graph.fallback_arms()
    w = graph.weights()
    full = PolytopePoint(w, frozenset(arms))
    if check_membership(full, c):
        pairs = caratheodory_decompose(full, c)
        rows = _emit(pairs, graph.demand, fallback)
        blocks = [arms]
    else:
        blocks = arm_blocks(arms, u // (c + 1))
        rows = []
        for block in blocks:
            point = PolytopePoint(block_weights(graph, block), frozenset(block))
            if not check_membership(point, c):
                raise NotInPolytope(f"block {block} demand is not in the anonymity polytope; graph is not {u}-batched")
            rows += _emit(caratheodory_decompose(point, c), graph.demand, fallback)
    assignments = np.array(rows, dtype=np.int64).reshape(len(rows), graph.n_users)
    return Decomposition(assignments, graph.n_arms, c, meta={"blocks": blocks})


def size_bound(graph: BatchedGraph, c: int, u: int, kind: str) -> int:
    if kind == "greedy":
        return graph.n_arms * graph.demand
    a = -(-graph.n_arms // max(1, u // (c + 1)))
    return a * graph.demand + graph.n_users * graph.n_arms + a


__all__ = [
    "ClusterTooSmall",
    "alpha_factor",
    "greedy_decompose",
    "random_decompose",
    "lp_decompose",
    "block_weights",
    "arm_blocks",
    "size_bound",
    "informative_counts",
]
