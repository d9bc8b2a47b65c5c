"""Integral max-flow (Dinic) and feasible flows with lower bounds."""

from __future__ import annotations

from collections import deque


class FlowNetwork:
    def __init__(self, n_nodes: int):
        self.n = n_nodes
        self.graph: list[list[int]] = [[] for _ in range(n_nodes)]
        self.to: list[int] = []
        self.cap: list[int] = []

    def add_edge(self, u: int, v: int, cap: int) -> int:
        """Add u -> v with capacity ``cap``; returns the edge id (its reverse is id ^ 1)."""
        eid = len(self.to)
        self.to += [v, u]
        self.cap += [cap, 0]
        self.graph[u].append(eid)
        self.graph[v].append(eid + 1)
        return eid

    def flow_on(self, eid: int) -> int:
        return self.cap[eid ^ 1]

    def max_flow(self, s: int, t: int) -> int:
        total = 0
        while True:
            level = [-1] * self.n
            level[s] = 0
            q = deque([s])
            while q:
                u = q.popleft()
                for e in self.graph[u]:
                    if self.cap[e] > 0 and level[self.to[e]] < 0:
                        level[self.to[e]] = level[u] + 1
                        q.append(self.to[e])
            if level[t] < 0:
                return total
            it = [0] * self.n
            while True:
                pushed = self._augment(s, t, level, it)
                if not pushed:
                    break
                total += pushed

    def _augment(self, s: int, t: int, level: list[int], it: list[int]) -> int:
        # iterative DFS along the level graph
        stack = [s]
        path: list[int] = []
        while stack:
            u = stack[-1]
            if u == t:
                f = min(self.cap[e] for e in path)
                for e in path:
                    self.cap[e] -= f
                    self.cap[e ^ 1] += f
                return f
            adj = self.graph[u]
            while it[u] < len(adj):
                e = adj[it[u]]
                v = self.to[e]
                if self.cap[e] > 0 and level[v] == level[u] + 1:
                    break
                it[u] += 1
            else:
                stack.pop()
                if path:
                    prev = path.pop()
                    it[self.to[prev ^ 1]] += 1
                level[u] = -1
                continue
            e = adj[it[u]]
            path.append(e)
            stack.append(self.to[e])
        return 0


def feasible_flow(n_nodes: int, edges: list[tuple[int, int, int, int]], s: int, t: int) -> list[int] | None:
    """Find integral flows f_e with lo_e <= f_e <= hi_e, conserved everywhere except s and t,
    with a nonnegative net flow from s to t.

    ``edges`` are (u, v, lo, hi).  Returns per-edge flows or None when infeasible.
    """
    big = sum(hi for _, _, _, hi in edges) + 1
    net = FlowNetwork(n_nodes + 2)
    ss, tt = n_nodes, n_nodes + 1
    excess = [0] * n_nodes
    ids = []
    for u, v, lo, hi in edges:
        if lo > hi:
            return None
        ids.append(net.add_edge(u, v, hi - lo))
        excess[v] += lo
        excess[u] -= lo
    net.add_edge(t, s, big)
    need = 0
    for v, ex in enumerate(excess):
        if ex > 0:
            net.add_edge(ss, v, ex)
            need += ex
        elif ex < 0:
            net.add_edge(v, tt, -ex)
    if net.max_flow(ss, tt) != need:
        return None
    return [lo + net.flow_on(e) for (_, _, lo, _), e in zip(edges, ids)]
