"""Leave-one-out elicitation: unbiased per-user estimates from group totals.

For a fixed assignment, users sharing an arm are chunked into groups of
C+1 to 2C+1 members.  One round reports the full groups; in round k the
k-th member of every group is left out.  The difference of the two totals
is an unbiased sample of the left-out user's mean on their arm.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from anonbandits.env import Environment, as_assignment


class EstimateRecord(NamedTuple):
    user: int
    arm: int
    value: float


@dataclass(frozen=True)
class GroupingPlan:
    groups: tuple[tuple[int, tuple[int, ...]], ...]  # (arm, members in ascending order)
    skipped_users: frozenset[int]

    @property
    def sizes(self) -> list[int]:
        return [len(m) for _, m in self.groups]


def plan_groups(assignment, c: int) -> GroupingPlan:
    """Chunk the users of every arm with >= c+1 users into groups of size c+1..2c+1.

    Chunks have size c+1; a remainder smaller than c+1 is merged into the
    last chunk of that arm.
    """
    a = np.asarray(assignment, dtype=np.int64)
    groups: list[tuple[int, tuple[int, ...]]] = []
    skipped: set[int] = set()
    for arm in np.unique(a):
        users = np.flatnonzero(a == arm)
        m = users.size
        if m < c + 1:
            skipped.update(int(u) for u in users)
            continue
        n_chunks = m // (c + 1)
        bounds = [q * (c + 1) for q in range(n_chunks)] + [m]
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            groups.append((int(arm), tuple(int(u) for u in users[lo:hi])))
    return GroupingPlan(tuple(groups), frozenset(skipped))


@dataclass(frozen=True)
class Estimates:
    """Estimates from one elicitation, stored column-wise."""

    users: np.ndarray
    arms: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return int(self.users.size)

    def __iter__(self) -> Iterator[EstimateRecord]:
        for u, j, v in zip(self.users, self.arms, self.values):
            yield EstimateRecord(int(u), int(j), float(v))

    @classmethod
    def empty(cls) -> "Estimates":
        z = np.zeros(0, dtype=np.int64)
        return cls(z, z.copy(), np.zeros(0))


def schedule(plan: GroupingPlan, n_users: int, c: int):
    """Group labels for the 2c+2 rounds, plus per-member (user, group, position) arrays."""
    n_rounds = 2 * c + 2
    labels = np.full((n_rounds, n_users), -1, dtype=np.int64)
    if not plan.groups:
        z = np.zeros(0, dtype=np.int64)
        return labels, z, z.copy(), z.copy()
    users = np.concatenate([np.asarray(m, dtype=np.int64) for _, m in plan.groups])
    group = np.concatenate([np.full(len(m), s, dtype=np.int64) for s, (_, m) in enumerate(plan.groups)])
    pos = np.concatenate([np.arange(1, len(m) + 1, dtype=np.int64) for _, m in plan.groups])
    labels[:, users] = group
    labels[pos, users] = -1
    return labels, users, group, pos


def elicit(env: Environment, assignment, c: int) -> Estimates:
    """Run the 2c+2-round elicitation for ``assignment`` on ``env``.

    Every user plays ``assignment[i]`` in all rounds.  If fewer than 2c+2
    rounds remain, the remaining rounds are played and nothing is returned.
    """
    inst = env.instance
    a = as_assignment(assignment, inst.n_users, inst.n_arms)
    plan = plan_groups(a, c)
    labels, users, group, pos = schedule(plan, inst.n_users, c)
    remaining = env.rounds_remaining
    if remaining < labels.shape[0]:
        if remaining > 0:
            env.observe(a, labels[:remaining])
        return Estimates.empty()
    sums = env.observe(a, labels)
    if users.size == 0:
        return Estimates.empty()
    values = sums[0, group] - sums[pos, group]
    return Estimates(users, a[users], values)


def elicit_repeated(env: Environment, assignment, c: int, copies: int) -> Estimates:
    """``copies`` back-to-back elicitations of one assignment, drawn in a single block.

    Equivalent to calling :func:`elicit` ``copies`` times.
    """
    inst = env.instance
    a = as_assignment(assignment, inst.n_users, inst.n_arms)
    plan = plan_groups(a, c)
    labels, users, group, pos = schedule(plan, inst.n_users, c)
    per = labels.shape[0]
    full = min(copies, env.rounds_remaining // per)
    if full < copies:
        tail = min(env.rounds_remaining - full * per, per)
    else:
        tail = 0
    if full == 0 or users.size == 0:
        if full:
            env.observe(a, np.tile(labels, (full, 1)))
        if tail:
            env.observe(a, labels[:tail])
        return Estimates.empty()
    sums = env.observe(a, np.tile(labels, (full, 1))).reshape(full, per, -1)
    if tail:
        env.observe(a, labels[:tail])
    values = (sums[:, 0, group] - sums[:, pos, group]).ravel()
    return Estimates(np.tile(users, full), np.tile(a[users], full), values)
