"""Problem instances, the anonymity-constrained environment and regret accounting.

Arms and users are 0-based throughout.  A learner talks to an
:class:`Environment` only through groupings of users; the environment hands
back one reward total per group and keeps individual rewards to itself.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from anonbandits.rng import stream


class AnonymityViolation(ValueError):
    """A group is smaller than the anonymity floor C, or mixes arms."""


class InvalidArm(ValueError):
    pass


class InfeasibleCluster(ValueError):
    pass


class HorizonExhausted(RuntimeError):
    pass


class RewardFamily(str, enum.Enum):
    BERNOULLI = "bernoulli"
    UNIT_GAUSSIAN = "gaussian"
    DETERMINISTIC = "deterministic"


@dataclass(frozen=True, eq=False)
class Instance:
    """Ground truth: N users, K arms, anonymity C, horizon T and the mean matrix."""

    means: np.ndarray
    anonymity: int
    horizon: int
    reward_family: RewardFamily = RewardFamily.BERNOULLI

    def __post_init__(self):
        means = np.array(self.means, dtype=float)
        if means.ndim != 2 or means.shape[0] < 1 or means.shape[1] < 1:
            raise ValueError(f"means must be a non-empty N x K matrix, got shape {means.shape}")
        if not np.all((means >= 0.0) & (means <= 1.0)):
            raise ValueError("all means must lie in [0, 1]")
        if self.anonymity < 1 or self.horizon < 1:
            raise ValueError("anonymity and horizon must be positive")
        means.flags.writeable = False
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "reward_family", RewardFamily(self.reward_family))

    @property
    def n_users(self) -> int:
        return self.means.shape[0]

    @property
    def n_arms(self) -> int:
        return self.means.shape[1]

    @property
    def best_means(self) -> np.ndarray:
        return self.means.max(axis=1)

    @property
    def best_arms(self) -> np.ndarray:
        """Per-user optimal arm (lowest index on ties)."""
        return self.means.argmax(axis=1)

    def to_text(self) -> str:
        lines = [f"{self.n_users} {self.n_arms} {self.anonymity} {self.horizon} {self.reward_family.value}"]
        lines += [" ".join(repr(float(v)) for v in row) for row in self.means]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Instance":
        rows = [ln.split() for ln in text.splitlines() if ln.strip()]
        n, k, c, t = (int(v) for v in rows[0][:4])
        family = RewardFamily(rows[0][4])
        means = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
        if means.shape != (n, k):
            raise ValueError(f"header says {n}x{k} but found {means.shape}")
        return cls(means, anonymity=c, horizon=t, reward_family=family)

    def with_horizon(self, horizon: int) -> "Instance":
        return Instance(self.means, self.anonymity, horizon, self.reward_family)


def as_assignment(arm_of: Sequence[int] | np.ndarray, n_users: int, n_arms: int) -> np.ndarray:
    """Validate a total user -> arm map and return it as an int array."""
    a = np.asarray(arm_of, dtype=np.int64)
    if a.shape != (n_users,):
        raise ValueError(f"assignment must cover all {n_users} users, got shape {a.shape}")
    if n_users and (a.min() < 0 or a.max() >= n_arms):
        raise InvalidArm(f"arm index out of range [0, {n_arms})")
    return a


@dataclass(frozen=True)
class GroupPartition:
    """One round's assignment together with the reporting groups.

    ``groups`` holds disjoint user tuples; members of a group must share an
    arm.  Users outside every group still play ``assignment[i]`` but produce
    no feedback.
    """

    assignment: tuple[int, ...]
    groups: tuple[tuple[int, ...], ...]

    @classmethod
    def make(cls, assignment: Iterable[int], groups: Iterable[Iterable[int]]) -> "GroupPartition":
        return cls(tuple(int(a) for a in assignment), tuple(tuple(int(u) for u in g) for g in groups))

    @property
    def group_arms(self) -> list[int]:
        return [self.assignment[g[0]] if g else -1 for g in self.groups]

    @property
    def ungrouped(self) -> frozenset[int]:
        grouped = {u for g in self.groups for u in g}
        return frozenset(range(len(self.assignment))) - grouped

    def labels(self) -> np.ndarray:
        lab = np.full(len(self.assignment), -1, dtype=np.int64)
        for s, g in enumerate(self.groups):
            lab[list(g)] = s
        return lab

    def validate(self, n_arms: int, anonymity: int) -> None:
        n = len(self.assignment)
        as_assignment(self.assignment, n, n_arms)
        seen: set[int] = set()
        for g in self.groups:
            if len(g) < anonymity:
                raise AnonymityViolation(f"group of size {len(g)} is below the anonymity floor {anonymity}")
            if seen.intersection(g) or len(set(g)) != len(g):
                raise ValueError("groups must be pairwise disjoint")
            if any(u < 0 or u >= n for u in g):
                raise ValueError("group member out of range")
            seen.update(g)
            if len({self.assignment[u] for u in g}) != 1:
                raise AnonymityViolation("all members of a group must play the same arm")


@dataclass(frozen=True)
class RoundOutcome:
    group_sums: np.ndarray
    hidden_rewards: np.ndarray = field(repr=False)

    @property
    def feedback(self) -> tuple[float, ...]:
        """What the learner is allowed to see: one total per group."""
        return tuple(float(v) for v in self.group_sums)


def visible_feedback(partition: GroupPartition, hidden_rewards: np.ndarray) -> tuple[float, ...]:
    r = np.asarray(hidden_rewards, dtype=float)
    return tuple(float(r[list(g)].sum()) for g in partition.groups)


@dataclass
class RegretTrace:
    cumulative_pseudo_regret: np.ndarray
    cumulative_realized_reward: np.ndarray
    rounds_used: int
    optimal_mean_reward: float = 0.0  # sum_i max_j mu_ij, per round
    non_anonymous: bool = False
    diagnostics: dict = field(default_factory=dict)

    @property
    def final_regret(self) -> float:
        return float(self.cumulative_pseudo_regret[-1]) if self.rounds_used else 0.0

    @property
    def realized_regret(self) -> float:
        """Regret against realized rather than expected rewards."""
        if not self.rounds_used:
            return 0.0
        return self.rounds_used * self.optimal_mean_reward - float(self.cumulative_realized_reward[-1])


def pseudo_regret(instance: Instance, assignment: Sequence[int] | np.ndarray) -> float:
    """Expected one-round regret of ``assignment``: sum_i (max_j mu_ij - mu_i,a(i))."""
    a = as_assignment(assignment, instance.n_users, instance.n_arms)
    rows = np.arange(instance.n_users)
    return float(np.sum(instance.best_means - instance.means[rows, a]))


_DRAW_CHUNK = 4096


class Environment:
    """Runs rounds of one instance, enforcing the anonymity floor and logging regret.

    The environment enforces groups of size >= C; it is the learner's
    business to ask for more when its estimator needs it.
    """

    def __init__(self, instance: Instance, rng: np.random.Generator):
        self.instance = instance
        self.rng = rng
        self.t = 0
        T = instance.horizon
        self._regret = np.zeros(T)
        self._reward = np.zeros(T)
        self._rows = np.arange(instance.n_users)

    @property
    def rounds_remaining(self) -> int:
        return self.instance.horizon - self.t

    def _draw(self, arm_of: np.ndarray, m: int) -> np.ndarray:
        mu = self.instance.means[self._rows, arm_of]
        fam = self.instance.reward_family
        if fam is RewardFamily.BERNOULLI:
            return (self.rng.random((m, mu.size)) < mu).astype(float)
        if fam is RewardFamily.UNIT_GAUSSIAN:
            return mu + self.rng.standard_normal((m, mu.size))
        return np.broadcast_to(mu, (m, mu.size)).copy()

    def _advance(self, arm_of: np.ndarray, rewards: np.ndarray) -> None:
        m = rewards.shape[0]
        if m > self.rounds_remaining:
            raise HorizonExhausted(f"{m} rounds requested, {self.rounds_remaining} remain")
        gap = float(np.sum(self.instance.best_means - self.instance.means[self._rows, arm_of]))
        self._regret[self.t : self.t + m] = gap
        self._reward[self.t : self.t + m] = rewards.sum(axis=1)
        self.t += m

    def _check_block(self, arm_of: np.ndarray, labels: np.ndarray) -> np.ndarray:
        """Validate per-round group labels; returns group sizes (m, G)."""
        m, n = labels.shape
        if n != self.instance.n_users:
            raise ValueError("labels must have one column per user")
        g = int(labels.max()) + 1 if labels.size else 0
        if g == 0:
            return np.zeros((m, 0), dtype=np.int64)
        mask = labels >= 0
        flat = (labels + g * np.arange(m)[:, None])[mask]
        sizes = np.bincount(flat, minlength=m * g).reshape(m, g)
        if np.any((sizes > 0) & (sizes < self.instance.anonymity)):
            raise AnonymityViolation(
                f"a group has fewer than C={self.instance.anonymity} members"
            )
        arms = np.broadcast_to(arm_of, labels.shape)[mask].astype(np.int64)
        s1 = np.bincount(flat, weights=arms, minlength=m * g).reshape(m, g)
        s2 = np.bincount(flat, weights=arms * arms, minlength=m * g).reshape(m, g)
        # all members share an arm iff the within-group arm variance is zero
        if np.any(s2 * sizes != s1 * s1):
            raise AnonymityViolation("all members of a group must play the same arm")
        return sizes

    def observe(self, arm_of: np.ndarray, labels: np.ndarray) -> np.ndarray:
        """Play ``labels.shape[0]`` rounds with a fixed assignment.

        ``labels[r, i]`` is user i's group id in round r, or -1 if ungrouped.
        Returns the (rounds, groups) matrix of group totals; absent groups are 0.
        """
        arm_of = as_assignment(arm_of, self.instance.n_users, self.instance.n_arms)
        labels = np.atleast_2d(np.asarray(labels, dtype=np.int64))
        sizes = self._check_block(arm_of, labels)
        m, g = sizes.shape
        if m > self.rounds_remaining:
            raise HorizonExhausted(f"{m} rounds requested, {self.rounds_remaining} remain")
        rewards = self._draw(arm_of, m)
        self._advance(arm_of, rewards)
        if g == 0:
            return np.zeros((m, 0))
        mask = labels >= 0
        flat = (labels + g * np.arange(m)[:, None])[mask]
        return np.bincount(flat, weights=rewards[mask], minlength=m * g).reshape(m, g)

    def play_round(self, partition: GroupPartition) -> RoundOutcome:
        partition.validate(self.instance.n_arms, self.instance.anonymity)
        arm_of = np.asarray(partition.assignment, dtype=np.int64)
        rewards = self._draw(arm_of, 1)
        self._advance(arm_of, rewards)
        r = rewards[0]
        sums = np.array([r[list(g)].sum() for g in partition.groups], dtype=float)
        return RoundOutcome(group_sums=sums, hidden_rewards=r)

    def play(self, arm_of: np.ndarray, rounds: int) -> None:
        """Play ``rounds`` rounds with no grouping (no feedback at all)."""
        arm_of = as_assignment(arm_of, self.instance.n_users, self.instance.n_arms)
        if rounds > self.rounds_remaining:
            raise HorizonExhausted(f"{rounds} rounds requested, {self.rounds_remaining} remain")
        left = rounds
        while left > 0:
            m = min(left, _DRAW_CHUNK)
            self._advance(arm_of, self._draw(arm_of, m))
            left -= m

    def play_open(self, arm_of: np.ndarray) -> np.ndarray:
        """Play one round and return every user's own reward.

        This bypasses anonymity; only the non-anonymous baseline uses it.
        """
        arm_of = as_assignment(arm_of, self.instance.n_users, self.instance.n_arms)
        rewards = self._draw(arm_of, 1)
        self._advance(arm_of, rewards)
        return rewards[0]

    def trace(self, **diagnostics) -> RegretTrace:
        t = self.t
        return RegretTrace(
            cumulative_pseudo_regret=np.cumsum(self._regret[:t]),
            cumulative_realized_reward=np.cumsum(self._reward[:t]),
            rounds_used=t,
            optimal_mean_reward=float(self.instance.best_means.sum()),
            diagnostics=dict(diagnostics),
        )


# ---------------------------------------------------------------- generators


def gen_uniform_instance(n: int, k: int, c: int, t: int, seed: int) -> Instance:
    """Bernoulli instance with i.i.d. U[0, 1] means."""
    if n < 1 or k < 1:
        raise ValueError("need n >= 1 and k >= 1")
    rng = stream(seed, "instance", "uniform")
    return Instance(rng.random((n, k)), anonymity=c, horizon=t)


def random_unit_vectors(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    v = rng.standard_normal((count, dim))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    while np.any(norms == 0):  # measure-zero, but keep it total
        bad = norms[:, 0] == 0
        v[bad] = rng.standard_normal((int(bad.sum()), dim))
        norms = np.linalg.norm(v, axis=1, keepdims=True)
    return v / norms


def linear_means(user_vecs: np.ndarray, arm_vecs: np.ndarray) -> np.ndarray:
    """mu_ij = (cos(v_i, w_j) + 1) / 2."""
    u = user_vecs / np.linalg.norm(user_vecs, axis=1, keepdims=True)
    w = arm_vecs / np.linalg.norm(arm_vecs, axis=1, keepdims=True)
    return np.clip(0.5 * (u @ w.T + 1.0), 0.0, 1.0)


def gen_linear_instance(n: int, k: int, c: int, t: int, dim: int = 10, seed: int = 0) -> Instance:
    if dim < 1:
        raise ValueError("dim must be >= 1")
    rng = stream(seed, "instance", "linear")
    users = random_unit_vectors(rng, n, dim)
    arms = random_unit_vectors(rng, k, dim)
    return Instance(linear_means(users, arms), anonymity=c, horizon=t)


def gen_clustered_instance(n: int, k: int, c: int, t: int, u: int, gap: float, seed: int) -> Instance:
    """Instance where every arm is the unique best arm of at least ``u`` users.

    The favourite arm's mean exceeds every other arm of that user by >= ``gap``.
    """
    if n < k * u:
        raise InfeasibleCluster(f"n={n} users cannot give {k} arms {u} favourites each")
    if not 0.0 < gap <= 1.0:
        raise ValueError("gap must be in (0, 1]")
    rng = stream(seed, "instance", "clustered")
    fav = np.concatenate([np.repeat(np.arange(k), u), rng.integers(0, k, size=n - k * u)])
    rng.shuffle(fav)
    top = gap + (1.0 - gap) * rng.random(n)
    means = rng.random((n, k)) * (top - gap)[:, None]
    means[np.arange(n), fav] = top
    return Instance(means, anonymity=c, horizon=t)


def cluster_counts(instance: Instance) -> np.ndarray:
    """Number of users whose unique best arm is j, per arm (ties count for nobody)."""
    mu = instance.means
    best = mu.max(axis=1, keepdims=True)
    unique = (mu == best).sum(axis=1) == 1
    return np.bincount(mu.argmax(axis=1)[unique], minlength=instance.n_arms)


class HardKind(str, enum.Enum):
    GAUSSIAN_CLUSTER = "gaussian-cluster"
    T23_PAIR = "t23-pair"
    LINEAR_PAIR = "linear-pair"


def t23_tables(t: int) -> tuple[np.ndarray, np.ndarray]:
    eps = t ** (-1.0 / 3.0)
    lo, hi = 0.5 - eps, 0.5 + eps
    first = np.array([[1.0, 0.0, 0.0], [0.0, lo, hi], [0.0, hi, lo]])
    second = np.array([[1.0, 0.0, 0.0], [0.0, hi, lo], [0.0, lo, hi]])
    return first, second


LINEAR_PAIR_TABLES = (
    np.array([[1.0, 0.0], [0.0, 1.0]]),
    np.array([[0.0, 1.0], [1.0, 0.0]]),
)


def gen_hard_instance(
    kind: HardKind | str,
    t: int,
    seed: int,
    *,
    n: int | None = None,
    k: int = 3,
    c: int = 2,
    variant: int | None = None,
) -> Instance:
    """Lower-bound instances.

    ``variant`` (0 or 1) pins which of the two tables a pair instance uses;
    by default a fair coin from the seed decides.  ``n``, ``k``, ``c`` only
    apply to the Gaussian cluster family.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    kind = HardKind(kind)
    rng = stream(seed, "instance", "hard", kind.value)
    if variant is None:
        variant = int(rng.integers(0, 2))
    if kind is HardKind.GAUSSIAN_CLUSTER:
        if n is None:
            n = 2 * k * k * (c + 1)
        fav = rng.integers(0, k, size=n)
        means = np.zeros((n, k))
        means[np.arange(n), fav] = min(1.0, math.sqrt(c / t))
        return Instance(means, anonymity=c, horizon=t, reward_family=RewardFamily.UNIT_GAUSSIAN)
    if kind is HardKind.T23_PAIR:
        return Instance(t23_tables(t)[variant], anonymity=2, horizon=t)
    return Instance(
        LINEAR_PAIR_TABLES[variant], anonymity=2, horizon=t, reward_family=RewardFamily.DETERMINISTIC
    )
