"""Batched graphs, decompositions, and the validity oracle."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np


@dataclass(frozen=True)
class BatchedGraph:
    """Total demand D and per-user nonempty active arm sets over K arms."""

    demand: int
    active_sets: tuple[tuple[int, ...], ...]
    n_arms: int

    def __post_init__(self):
        if self.demand < 1:
            raise ValueError("demand must be positive")
        sets = tuple(tuple(sorted(set(int(j) for j in a))) for a in self.active_sets)
        for a in sets:
            if not a:
                raise ValueError("every active set must be nonempty")
            if a[0] < 0 or a[-1] >= self.n_arms:
                raise ValueError("arm index out of range")
        object.__setattr__(self, "active_sets", sets)

    @classmethod
    def make(cls, demand: int, active_sets: Sequence[Sequence[int]], n_arms: int | None = None) -> "BatchedGraph":
        if n_arms is None:
            n_arms = 1 + max(max(a) for a in active_sets)
        return cls(int(demand), tuple(tuple(a) for a in active_sets), int(n_arms))

    @property
    def n_users(self) -> int:
        return len(self.active_sets)

    def demanders(self, j: int) -> list[int]:
        return [i for i, a in enumerate(self.active_sets) if j in a]

    def degrees(self) -> np.ndarray:
        """|B_j| for every arm."""
        deg = np.zeros(self.n_arms, dtype=np.int64)
        for a in self.active_sets:
            deg[list(a)] += 1
        return deg

    def demanded_arms(self) -> list[int]:
        return [j for j, d in enumerate(self.degrees()) if d > 0]

    def weights(self) -> np.ndarray:
        """w_ij = 1/|A_i| on active arms, as exact fractions."""
        w = np.full((self.n_users, self.n_arms), Fraction(0), dtype=object)
        for i, a in enumerate(self.active_sets):
            for j in a:
                w[i, j] = Fraction(1, len(a))
        return w

    def need(self, i: int) -> int:
        """Informative assignments user i needs on each of its active arms."""
        return -(-self.demand // len(self.active_sets[i]))

    def mask(self) -> np.ndarray:
        m = np.zeros((self.n_users, self.n_arms), dtype=bool)
        for i, a in enumerate(self.active_sets):
            m[i, list(a)] = True
        return m

    def is_u_batched(self, u: int) -> bool:
        """Every demanded arm lies in at least ``u`` users' active sets."""
        deg = self.degrees()
        return bool(np.all(deg[deg > 0] >= u))

    def fallback_arms(self) -> np.ndarray:
        """Lowest-index active arm of each user."""
        return np.array([a[0] for a in self.active_sets], dtype=np.int64)

    def restrict(self, keep_arms) -> tuple["BatchedGraph | None", np.ndarray]:
        """Sub-graph on ``keep_arms``; returns it with the indices of users that remain."""
        keep = set(int(j) for j in keep_arms)
        users, sets = [], []
        for i, a in enumerate(self.active_sets):
            b = tuple(j for j in a if j in keep)
            if b:
                users.append(i)
                sets.append(b)
        if not users:
            return None, np.zeros(0, dtype=np.int64)
        return BatchedGraph(self.demand, tuple(sets), self.n_arms), np.array(users, dtype=np.int64)

    def to_text(self, c: int) -> str:
        lines = [f"{self.demand} {self.n_users} {self.n_arms} {c}"]
        lines += [" ".join(str(j) for j in a) for a in self.active_sets]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> tuple["BatchedGraph", int]:
        rows = [ln.split() for ln in text.splitlines() if ln.strip()]
        d, n, k, c = (int(v) for v in rows[0][:4])
        sets = [tuple(int(v) for v in r) for r in rows[1:]]
        if len(sets) != n:
            raise ValueError(f"header says {n} users but found {len(sets)} rows")
        return cls(d, tuple(sets), k), c


def informative_counts(assignments: np.ndarray, n_arms: int, c: int) -> np.ndarray:
    """N x K tally of assignments that are informative for each (user, arm)."""
    a = np.asarray(assignments, dtype=np.int64)
    if a.ndim != 2 or a.shape[0] == 0:
        n = a.shape[-1] if a.ndim == 2 else 0
        return np.zeros((n, n_arms), dtype=np.int64)
    r, n = a.shape
    per_arm = np.bincount((a + n_arms * np.arange(r)[:, None]).ravel(), minlength=r * n_arms).reshape(r, n_arms)
    informative = np.take_along_axis(per_arm, a, axis=1) >= c + 1
    cells = (np.arange(n)[None, :] * n_arms + a)[informative]
    return np.bincount(cells, minlength=n * n_arms).reshape(n, n_arms)


@dataclass
class Decomposition:
    """Ordered list of total assignments (one row per assignment)."""

    assignments: np.ndarray
    n_arms: int
    c: int
    shortfall: bool = False
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.assignments.shape[0])

    @property
    def informative_counts(self) -> np.ndarray:
        return informative_counts(self.assignments, self.n_arms, self.c)

    def to_text(self) -> str:
        return "".join(" ".join(str(int(j)) for j in row) + "\n" for row in self.assignments)

    @classmethod
    def from_text(cls, text: str, n_arms: int, c: int) -> "Decomposition":
        rows = [[int(v) for v in ln.split()] for ln in text.splitlines() if ln.strip()]
        return cls(np.array(rows, dtype=np.int64).reshape(len(rows), -1), n_arms, c)


class Shortfall(NamedTuple):
    user: int
    arm: int
    have: int
    need: int


@dataclass
class ValidityReport:
    valid: bool
    shortfalls: list[Shortfall]
    zero_demand: list[tuple[int, int, int]]  # (assignment row, user, arm)

    def __str__(self) -> str:
        lines = [f"valid: {self.valid}"]
        lines += [f"shortfall user={s.user} arm={s.arm} have={s.have} need={s.need}" for s in self.shortfalls]
        lines += [f"zero-demand row={r} user={i} arm={j}" for r, i, j in self.zero_demand]
        return "\n".join(lines)


def validate_decomposition(graph: BatchedGraph, c: int, decomposition: Decomposition) -> ValidityReport:
    """Recount informativeness row by row and compare against ceil(D/|A_i|)."""
    have = Counter()
    zero_demand = []
    for r, row in enumerate(decomposition.assignments):
        row = [int(j) for j in row]
        if len(row) != graph.n_users:
            raise ValueError(f"assignment {r} has {len(row)} users, graph has {graph.n_users}")
        load = Counter(row)
        for i, j in enumerate(row):
            if j not in graph.active_sets[i]:
                zero_demand.append((r, i, j))
            elif load[j] >= c + 1:
                have[i, j] += 1
    shortfalls = [
        Shortfall(i, j, have[i, j], graph.need(i))
        for i, a in enumerate(graph.active_sets)
        for j in a
        if have[i, j] < graph.need(i)
    ]
    return ValidityReport(not shortfalls and not zero_demand, shortfalls, zero_demand)
