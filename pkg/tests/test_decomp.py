import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from anonbandits.decomp import (
    ABSTAIN,
    BatchedGraph,
    ClusterTooSmall,
    Decomposition,
    NotInPolytope,
    PolytopePoint,
    alpha_factor,
    arm_blocks,
    block_weights,
    caratheodory_decompose,
    check_membership,
    greedy_decompose,
    informative_counts,
    is_integral_vertex,
    lp_decompose,
    random_decompose,
    reconstruct,
    size_bound,
    validate_decomposition,
)
from anonbandits.decomp.flow import feasible_flow
from anonbandits.decomp.polytope import assignment_to_vertex, vertex_to_assignment
from fuzz import batched_graphs, random_batched_graph, random_member, random_vertex


def all_vertices(n, k, scope, c):
    """Every 0/1 vertex of P_C(scope), by brute force over arm choices."""
    out = []
    choices = [ABSTAIN] + sorted(scope)
    for pick in itertools.product(choices, repeat=n):
        v = assignment_to_vertex(np.array(pick), k)
        if is_integral_vertex(v, frozenset(scope), c):
            out.append(v)
    return out


# ---------------------------------------------------------------- flow


@given(st.integers(0, 2**31))
def test_feasible_flow_matches_lp(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 7))
    edges = []
    for _ in range(int(rng.integers(2, 10))):
        u, v = rng.choice(n, size=2, replace=False)
        lo = int(rng.integers(0, 3))
        edges.append((int(u), int(v), lo, lo + int(rng.integers(0, 3))))
    s, t = 0, n - 1
    flows = feasible_flow(n, edges, s, t)
    # LP oracle: conservation at internal nodes, bounds on edges
    a_eq = np.zeros((n - 2, len(edges)))
    for e, (u, v, _, _) in enumerate(edges):
        if 0 < u < n - 1:
            a_eq[u - 1, e] -= 1
        if 0 < v < n - 1:
            a_eq[v - 1, e] += 1
    # net flow leaves s
    a_ub = np.array([[(u == s) - (v == s) for u, v, _, _ in edges]], dtype=float) * -1
    res = linprog(np.zeros(len(edges)), A_ub=a_ub, b_ub=[0.0], A_eq=a_eq, b_eq=np.zeros(n - 2),
                  bounds=[(lo, hi) for _, _, lo, hi in edges], method="highs")
    assert (flows is not None) == (res.status == 0)
    if flows is not None:
        bal = np.zeros(n)
        for f, (u, v, lo, hi) in zip(flows, edges):
            assert lo <= f <= hi
            bal[u] -= f
            bal[v] += f
        assert np.all(bal[1:-1] == 0)


# ---------------------------------------------------------------- alpha, graph


@pytest.mark.parametrize("k,c,u,expect", [(5, 4, 25, 1), (5, 4, 5, 5), (3, 2, 4, 3), (2, 1, 100, 1)])
def test_alpha_factor(k, c, u, expect):
    assert alpha_factor(k, c, u) == expect


def test_alpha_needs_cluster():
    with pytest.raises(ClusterTooSmall):
        alpha_factor(3, 2, 2)


def test_graph_text_round_trip():
    g = BatchedGraph.make(9, [[0, 2], [1], [0, 1, 2]], 3)
    back, c = BatchedGraph.from_text(g.to_text(4))
    assert back == g and c == 4


def test_graph_rejects_empty_active_set():
    with pytest.raises(ValueError):
        BatchedGraph.make(3, [[0], []], 2)


def test_u_batched_degree_condition():
    g = BatchedGraph.make(3, [[0], [0, 1], [0, 1]], 3)
    assert g.is_u_batched(2) and not g.is_u_batched(3)


# ---------------------------------------------------------------- greedy


def test_greedy_single_arm():
    g = BatchedGraph.make(7, [[0]] * 5, 1)
    dec = greedy_decompose(g, 2)
    assert len(dec) == 7
    assert np.all(dec.assignments == 0)
    assert np.all(dec.informative_counts[:, 0] == 7)


def test_greedy_size_is_kd():
    g = random_batched_graph(np.random.default_rng(0), 20, 3, 4, 10)
    dec = greedy_decompose(g, 2)
    assert len(dec) == 30
    assert validate_decomposition(g, 2, dec).valid


@given(batched_graphs())
def test_greedy_valid_on_fuzz(args):
    g, c, u = args
    dec = greedy_decompose(g, c)
    assert validate_decomposition(g, c, dec).valid
    assert len(dec) <= size_bound(g, c, u, "greedy")


# ---------------------------------------------------------------- random


def test_random_single_arm_takes_d_draws():
    g = BatchedGraph.make(12, [[0]] * 4, 1)
    dec = random_decompose(g, 2, np.random.default_rng(0))
    assert len(dec) == 12 and dec.meta["draws"] == 12 and not dec.shortfall


def test_random_flags_impossible_demand():
    g = BatchedGraph.make(3, [[0], [1], [1], [1]], 2)
    dec = random_decompose(g, 2, np.random.default_rng(0))
    assert dec.shortfall
    assert len(dec) == 50 * 2 * 3


@given(batched_graphs(max_d=60, u_mode="big"), st.integers(0, 2**31))
def test_random_valid_and_short_when_clustered(args, seed):
    g, c, u = args
    dec = random_decompose(g, c, np.random.default_rng(seed))
    assert not dec.shortfall
    assert validate_decomposition(g, c, dec).valid
    assert len(dec) <= 5 * alpha_factor(g.n_arms, c, u) * g.demand + g.n_users * g.n_arms


@pytest.mark.parametrize("density", [0.2, 0.9])
def test_random_draw_load_per_arm(density):
    # with U >= K(C+1) every arm expects at least C+1 users per draw
    rng = np.random.default_rng(1)
    k, c = 3, 2
    g = random_batched_graph(rng, 30, k, k * (c + 1), 2000, density=density)
    dec = random_decompose(g, c, rng)
    load = np.stack([np.bincount(r, minlength=k) for r in dec.assignments])
    expect = np.array([sum(Fraction(1, len(a)) for a in g.active_sets if j in a) for j in range(k)], float)
    assert np.all(expect >= c + 1)
    se = load.std(axis=0) / np.sqrt(len(dec))
    assert np.all(np.abs(load.mean(axis=0) - expect) <= 4 * se + 1e-9)


# ---------------------------------------------------------------- polytope


def test_zero_point_with_empty_scope():
    assert check_membership(PolytopePoint.make(np.zeros((3, 2), int), []), 2)


def test_column_short_by_half():
    c = 2
    x = np.zeros((6, 2), dtype=object)
    x[:5, 0] = Fraction(1, 2)  # column sum 5/2 = C + 1/2
    assert not check_membership(PolytopePoint.make(x, [0]), c)
    x[:6, 0] = Fraction(1, 2)
    assert check_membership(PolytopePoint.make(x, [0]), c)


def test_out_of_scope_mass_rejected():
    x = np.zeros((3, 2), dtype=object)
    x[:, 0] = 1
    x[0, 1] = Fraction(1, 10)
    assert not check_membership(PolytopePoint.make(x, [0]), 1)


@given(batched_graphs(u_mode="big"))
def test_balanced_demand_is_member(args):
    g, c, u = args
    assert check_membership(PolytopePoint(g.weights(), frozenset(range(g.n_arms))), c)


def test_vertex_decomposes_to_itself():
    v = random_vertex(np.random.default_rng(2), 6, 2, [0, 1], 2)
    pairs = caratheodory_decompose(PolytopePoint.make(v, [0, 1]), 2)
    assert len(pairs) == 1 and pairs[0][0] == 1
    assert np.array_equal(assignment_to_vertex(pairs[0][1], 2), v)


def test_midpoint_reconstruction():
    rng = np.random.default_rng(3)
    a, b = (random_vertex(rng, 7, 3, [0, 2], 1) for _ in range(2))
    x = (a.astype(object) + b.astype(object)) * Fraction(1, 2)
    pairs = caratheodory_decompose(PolytopePoint.make(x, [0, 2]), 1)
    assert len(pairs) <= 7 * 2 + 1
    assert np.array_equal(reconstruct(pairs, 3), x)


@given(st.integers(0, 2**31), st.integers(1, 3), st.integers(1, 2))
def test_caratheodory_against_enumeration(seed, k, c):
    rng = np.random.default_rng(seed)
    scope = sorted(rng.choice(k, size=int(rng.integers(0, k + 1)), replace=False).tolist())
    lo = max(1, len(scope) * (c + 1))
    if lo > 6:
        return
    n = int(rng.integers(lo, 7))
    x = random_member(rng, n, k, scope, c)
    pairs = caratheodory_decompose(PolytopePoint(x, frozenset(scope)), c)
    vertices = {v.tobytes() for v in all_vertices(n, k, scope, c)}
    assert sum(w for w, _ in pairs) == 1
    assert all(w > 0 for w, _ in pairs)
    assert len(pairs) <= n * len(scope) + 1
    for _, arm_of in pairs:
        v = assignment_to_vertex(arm_of, k)
        assert is_integral_vertex(v, frozenset(scope), c)
        assert v.tobytes() in vertices
    assert np.array_equal(reconstruct(pairs, k), x)


def test_caratheodory_rejects_non_member():
    x = np.full((2, 1), Fraction(1, 2), dtype=object)
    with pytest.raises(NotInPolytope):
        caratheodory_decompose(PolytopePoint.make(x, [0]), 1)


def test_vertex_assignment_round_trip():
    a = np.array([2, ABSTAIN, 0, 0])
    assert np.array_equal(vertex_to_assignment(assignment_to_vertex(a, 3)), a)


# ---------------------------------------------------------------- lp


def test_lp_single_arm():
    g = BatchedGraph.make(10, [[0]] * 5, 1)
    dec = lp_decompose(g, 2, 5)
    assert len(dec) <= 11
    assert validate_decomposition(g, 2, dec).valid


@given(batched_graphs(u_mode="big"))
def test_lp_clustered_bound(args):
    g, c, u = args
    dec = lp_decompose(g, c, u)
    assert validate_decomposition(g, c, dec).valid
    assert len(dec) <= g.demand + g.n_users * g.n_arms + 1


@given(batched_graphs())
def test_lp_general_bound(args):
    g, c, u = args
    dec = lp_decompose(g, c, u)
    assert validate_decomposition(g, c, dec).valid
    s = u // (c + 1)
    blocks = -(-g.n_arms // s)
    assert len(dec) <= blocks * g.demand + g.n_users * g.n_arms + blocks
    assert len(dec) <= size_bound(g, c, u, "lp")


@given(batched_graphs())
def test_block_weights_dominate(args):
    g, c, u = args
    w = g.weights()
    total = np.full(w.shape, Fraction(0), dtype=object)
    for block in arm_blocks(g.demanded_arms(), u // (c + 1)):
        wa = block_weights(g, block)
        assert check_membership(PolytopePoint(wa, frozenset(block)), c)
        total = total + wa
    assert np.all(w <= total)


def test_lp_rejects_small_cluster():
    g = BatchedGraph.make(3, [[0], [0]], 1)
    with pytest.raises(ClusterTooSmall):
        lp_decompose(g, 2, 2)


def test_lp_raises_when_not_batched():
    g = BatchedGraph.make(3, [[0, 1], [0], [0], [0]], 2)  # arm 1 has one demander
    with pytest.raises(NotInPolytope):
        lp_decompose(g, 2, 3)


# ---------------------------------------------------------------- validation


def test_deleting_from_tight_greedy_gives_shortfalls():
    d, c = 6, 2
    g = BatchedGraph.make(d, [[0]] * 4, 1)
    dec = greedy_decompose(g, c)
    short = Decomposition(dec.assignments[1:], 1, c)
    rep = validate_decomposition(g, c, short)
    assert not rep.valid
    assert [(s.user, s.arm, s.have, s.need) for s in rep.shortfalls] == [(i, 0, d - 1, d) for i in range(4)]
    assert "shortfall user=0 arm=0 have=5 need=6" in str(rep)


def test_zero_demand_assignment_reported():
    g = BatchedGraph.make(1, [[0], [0], [0], [1]], 2)
    dec = Decomposition(np.array([[0, 0, 0, 0]]), 2, 2)
    rep = validate_decomposition(g, 2, dec)
    assert rep.zero_demand == [(0, 3, 0)]


@given(st.integers(0, 2**31), st.integers(1, 4), st.integers(1, 3))
def test_vectorized_count_matches_recount(seed, k, c):
    rng = np.random.default_rng(seed)
    n, r = int(rng.integers(1, 15)), int(rng.integers(0, 12))
    rows = rng.integers(0, k, size=(r, n))
    fast = informative_counts(rows, k, c)
    slow = np.zeros((n, k), dtype=int)
    for row in rows:
        for i in range(n):
            if np.sum(row == row[i]) >= c + 1:
                slow[i, row[i]] += 1
    assert np.array_equal(fast, slow)
    g = BatchedGraph.make(1, [list(range(k))] * n, k)
    rep = validate_decomposition(g, c, Decomposition(rows.reshape(r, n), k, c))
    need = g.need(0)
    expect = {(i, j) for i in range(n) for j in range(k) if slow[i, j] < need}
    assert {(s.user, s.arm) for s in rep.shortfalls} == expect


def test_decomposition_text_round_trip():
    dec = Decomposition(np.array([[0, 1, 2], [2, 2, 2]]), 3, 1)
    back = Decomposition.from_text(dec.to_text(), 3, 1)
    assert np.array_equal(back.assignments, dec.assignments)
