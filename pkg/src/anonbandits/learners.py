"""End-to-end learners.

Batched elimination fed through anonymous decompositions is the main
method; explore-then-commit needs no cluster structure; per-user UCB reads
individual rewards and serves as the non-anonymous reference.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from anonbandits.base import BaseState, default_batches, default_gamma, make_grid
from anonbandits.decomp import (
    BatchedGraph,
    NotInPolytope,
    alpha_factor,
    greedy_decompose,
    lp_decompose,
    random_decompose,
)
from anonbandits.env import Environment, Instance, RegretTrace
from anonbandits.feedback import Estimates, elicit, elicit_repeated
from anonbandits.rng import stream


class HorizonTooSmall(ValueError):
    pass


class ExplorationTooShort(ValueError):
    pass


class Decomposer(str, enum.Enum):
    GREEDY = "greedy"
    RANDOM = "random"
    LP = "lp"


@dataclass(frozen=True)
class Alg1Config:
    decomposer: Decomposer | str = Decomposer.LP
    u_assumed: int | None = None  # None means C+1
    gamma_const: float = 2.0
    batches: int | None = None  # None means max(1, floor(log2 log2 T'))
    robust_mode: bool = True

    def __post_init__(self):
        object.__setattr__(self, "decomposer", Decomposer(self.decomposer))
        if self.batches is not None and self.batches < 1:
            raise ValueError("batches must be >= 1")


def _env(instance: Instance, seed: int, env: Environment | None) -> Environment:
    return env if env is not None else Environment(instance, stream(seed, "rewards"))


def _group_samples(est: list[Estimates], n_users: int) -> list[dict[int, np.ndarray]]:
    out: list[dict[int, np.ndarray]] = [dict() for _ in range(n_users)]
    est = [e for e in est if len(e)]
    if not est:
        return out
    users = np.concatenate([e.users for e in est])
    arms = np.concatenate([e.arms for e in est])
    values = np.concatenate([e.values for e in est])
    order = np.lexsort((arms, users))
    users, arms, values = users[order], arms[order], values[order]
    cut = np.flatnonzero((np.diff(users) != 0) | (np.diff(arms) != 0)) + 1
    for lo, hi in zip(np.r_[0, cut], np.r_[cut, users.size]):
        out[int(users[lo])][int(arms[lo])] = values[lo:hi]
    return out


def _runs(rows: np.ndarray):
    """Split a decomposition into maximal runs of identical consecutive rows."""
    if rows.shape[0] == 0:
        return
    change = np.flatnonzero(np.any(rows[1:] != rows[:-1], axis=1)) + 1
    starts = np.r_[0, change]
    ends = np.r_[change, rows.shape[0]]
    for lo, hi in zip(starts, ends):
        yield rows[lo], int(hi - lo)


def _random_active(graph: BatchedGraph, rng: np.random.Generator, count: int) -> np.ndarray:
    sizes = np.array([len(a) for a in graph.active_sets])
    table = np.zeros((graph.n_users, sizes.max()), dtype=np.int64)
    for i, a in enumerate(graph.active_sets):
        table[i, : len(a)] = a
    pick = (rng.random((count, graph.n_users)) * sizes).astype(np.int64)
    return table[np.arange(graph.n_users), pick]


def decompose_batch(
    graph: BatchedGraph, c: int, u: int, kind: Decomposer, rng: np.random.Generator, robust: bool
) -> tuple[np.ndarray, dict]:
    """Assignments (rows) for one batch, with robust repair of thin arms.

    Arms with fewer than C+1 interested users cannot be made informative.
    In robust mode the decomposition runs on the remaining arms and users
    left without any such arm play a random active arm in every row.
    """
    deg = graph.degrees()
    healthy = [j for j in range(graph.n_arms) if deg[j] >= c + 1]
    info: dict = {"thin_arms": [j for j in range(graph.n_arms) if 0 < deg[j] < c + 1]}
    sub, kept = graph.restrict(healthy)
    if sub is None:
        return _random_active(graph, rng, graph.demand), info
    if kind is Decomposer.GREEDY:
        dec = greedy_decompose(sub, c)
    elif kind is Decomposer.RANDOM:
        dec = random_decompose(sub, c, rng)
    else:
        try:
            dec = lp_decompose(sub, c, max(u, c + 1))
        except NotInPolytope:
            if not robust:
                raise
            info["lp_fallback"] = True
            dec = greedy_decompose(sub, c)
    info["shortfall"] = dec.shortfall
    rows = dec.assignments
    if len(kept) == graph.n_users:
        return rows, info
    full = _random_active(graph, rng, rows.shape[0])
    full[:, kept] = rows
    return full, info


def run_alg1(
    instance: Instance,
    config: Alg1Config | None = None,
    seed: int = 0,
    env: Environment | None = None,
) -> RegretTrace:
    """Per-user batched elimination driven through anonymous decompositions.

    Each user runs a :class:`BaseState` on horizon T' = T / (alpha (2C+2))
    with noise proxy 4C+1.  Each batch's demand is decomposed into
    assignments, each assignment is elicited over 2C+2 rounds, and the
    estimates are fed back to the users' states.  Rounds left after the
    last batch go to every user's empirical best arm.
    """
    config = config or Alg1Config()
    env = _env(instance, seed, env)
    rng = stream(seed, "algo", "alg1")
    n, k, c, T = instance.n_users, instance.n_arms, instance.anonymity, instance.horizon
    u = config.u_assumed if config.u_assumed is not None else c + 1
    if config.decomposer is Decomposer.GREEDY:
        alpha = k
    else:
        alpha = alpha_factor(k, c, u)
    t_prime = T // (alpha * (2 * c + 2))
    batches = config.batches if config.batches is not None else default_batches(t_prime)
    if t_prime < batches or t_prime < 1:
        raise HorizonTooSmall(f"T'={t_prime} is smaller than the {batches} batches")
    grid = make_grid(t_prime, batches)
    gamma = default_gamma(n, k, T, config.gamma_const)
    states = [BaseState(k, grid, gamma, noise_proxy=4 * c + 1) for _ in range(n)]
    log: list[dict] = []
    aborted = False

    for b in range(1, batches + 1):
        wanted = [s.begin_batch() for s in states]
        graph = BatchedGraph(grid.lengths[b - 1], tuple(tuple(a) for a, _ in wanted), k)
        entry = {"batch": b, "demand": graph.demand, "start": env.t, "u_batched": graph.is_u_batched(u)}
        if not entry["u_batched"] and not config.robust_mode:
            aborted = True
            log.append(entry)
            break
        rows, info = decompose_batch(graph, c, u, config.decomposer, rng, config.robust_mode)
        entry.update(info)
        if info.get("shortfall") and not config.robust_mode:
            aborted = True
            log.append(entry)
            break
        entry["assignments"] = int(rows.shape[0])
        collected: list[Estimates] = []
        for row, copies in _runs(rows):
            if env.rounds_remaining == 0:
                break
            if copies == 1:
                collected.append(elicit(env, row, c))
            else:
                collected.append(elicit_repeated(env, row, c, copies))
        samples = _group_samples(collected, n)
        routed = np.zeros((n, k), dtype=np.int64)
        quota = np.array([q for _, q in wanted])
        for i, (state, sm) in enumerate(zip(states, samples)):
            for j, xs in sm.items():
                routed[i, j] = len(xs)
            state.end_batch(sm, strict=not config.robust_mode and env.rounds_remaining > 0)
        entry.update(end=env.t, routed=routed, quota=quota, active=[list(a) for a, _ in wanted])
        log.append(entry)
        if env.rounds_remaining == 0:
            break

    if env.rounds_remaining:
        env.play(np.array([s.best_arm() for s in states]), env.rounds_remaining)
    return env.trace(
        algorithm=f"alg1-{config.decomposer.value}",
        alpha=alpha,
        t_prime=t_prime,
        grid=grid.boundaries,
        batches=log,
        aborted=aborted,
    )


def run_base(
    instance: Instance,
    seed: int = 0,
    env: Environment | None = None,
    gamma_const: float = 2.0,
    batches: int | None = None,
) -> RegretTrace:
    """Plain batched elimination on raw rewards, one state per user.

    Only for C = 1, where every user can report alone.  Within a batch each
    user pulls its active arms in blocks of ``quota`` consecutive rounds.
    """
    if instance.anonymity != 1:
        raise ValueError("run_base needs C = 1; use run_alg1 for anonymous feedback")
    env = _env(instance, seed, env)
    n, k, T = instance.n_users, instance.n_arms, instance.horizon
    batches = batches if batches is not None else default_batches(T)
    grid = make_grid(T, batches)
    gamma = default_gamma(n, k, T, gamma_const)
    states = [BaseState(k, grid, gamma) for _ in range(n)]
    solo = np.arange(n)
    best = instance.best_arms
    survived = np.ones(n, dtype=bool)
    for b in range(1, batches + 1):
        if env.rounds_remaining == 0:
            break
        wanted = [s.begin_batch() for s in states]
        if b == batches:
            survived = np.array([best[i] in s.active for i, s in enumerate(states)])
        seqs = [np.repeat(a, q) for a, q in wanted]
        length = min(max(len(s) for s in seqs), env.rounds_remaining)
        rows = np.empty((length, n), dtype=np.int64)
        for i, s in enumerate(seqs):
            rows[:, i] = np.r_[s, np.full(max(0, length - len(s)), s[-1])][:length]
        rewards = np.empty((length, n))
        t0 = 0
        for row, m in _runs(rows):
            rewards[t0 : t0 + m] = env.observe(row, np.tile(solo, (m, 1)))
            t0 += m
        for i, (s, seq) in enumerate(zip(states, seqs)):
            arms, r = rows[: len(seq), i], rewards[: len(seq), i]
            s.end_batch({j: r[arms == j] for j in wanted[i][0]}, strict=False)
    if env.rounds_remaining:
        env.play(np.array([s.best_arm() for s in states]), env.rounds_remaining)
    return env.trace(algorithm="base", grid=grid.boundaries, best_survived=survived)


def etc_exploration_length(n: int, k: int, c: int, t: int) -> tuple[float, int]:
    """(uncapped formula value, value actually used) for the exploration budget."""
    raw = 10.0 * c ** (2 / 3) * k ** (1 / 3) * t ** (2 / 3) * math.log(n * k * t) ** (1 / 3)
    return raw, int(min(raw, t // 2))


def chunk_users(n: int, size: int) -> list[list[int]]:
    """Consecutive groups of ``size`` users; leftovers join the last group."""
    if n <= size:
        return [list(range(n))]
    groups = [list(range(q, q + size)) for q in range(0, n - n % size, size)]
    groups[-1].extend(range(n - n % size, n))
    return groups


def run_etc(instance: Instance, seed: int = 0, env: Environment | None = None) -> RegretTrace:
    """Explore all arms round-robin with elicitation, then commit per user."""
    env = _env(instance, seed, env)
    n, k, c, T = instance.n_users, instance.n_arms, instance.anonymity, instance.horizon
    raw, t_exp = etc_exploration_length(n, k, c, T)
    iters = -(-t_exp // (2 * c + 2))
    if iters < k:
        raise ExplorationTooShort(f"{iters} exploration steps cannot cover {k} arms")
    groups = chunk_users(n, c + 1)
    counts = np.zeros((n, k), dtype=np.int64)
    sums = np.zeros((n, k))
    for r in range(1, iters + 1):
        if env.rounds_remaining == 0:
            break
        arm = (r - 1) % k
        assignment = np.empty(n, dtype=np.int64)
        for g in groups:
            assignment[g] = arm
        est = elicit(env, assignment, c)
        np.add.at(counts, (est.users, est.arms), 1)
        np.add.at(sums, (est.users, est.arms), est.values)
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(counts > 0, sums / np.maximum(counts, 1), -np.inf)
    committed = means.argmax(axis=1)
    explore_end = env.t
    if env.rounds_remaining:
        env.play(committed, env.rounds_remaining)
    return env.trace(
        algorithm="etc",
        t_exp=t_exp,
        t_exp_raw=raw,
        iterations=iters,
        explore_end=explore_end,
        counts=counts,
        committed=committed,
    )


def run_ucb(instance: Instance, seed: int = 0, env: Environment | None = None) -> RegretTrace:
    """Every user runs UCB on their own rewards (non-anonymous baseline)."""
    env = _env(instance, seed, env)
    n, k, T = instance.n_users, instance.n_arms, instance.horizon
    counts = np.zeros((n, k))
    sums = np.zeros((n, k))
    rows = np.arange(n)
    for t in range(1, T + 1):
        if t <= k:
            arm = np.full(n, t - 1, dtype=np.int64)
        else:
            index = sums / counts + np.sqrt(2.0 * math.log(t) / counts)
            arm = index.argmax(axis=1)
        r = env.play_open(arm)
        counts[rows, arm] += 1
        sums[rows, arm] += r
    trace = env.trace(algorithm="ucb", non_anonymous=True, counts=counts.astype(np.int64))
    trace.non_anonymous = True
    return trace


ALGORITHMS = ("etc", "alg1-greedy", "alg1-random", "alg1-lp", "ucb")


def run_algorithm(name: str, instance: Instance, seed: int, env: Environment | None = None, **kw) -> RegretTrace:
    if name == "etc":
        return run_etc(instance, seed, env)
    if name == "ucb":
        return run_ucb(instance, seed, env)
    if name.startswith("alg1-"):
        return run_alg1(instance, Alg1Config(decomposer=name[5:], **kw), seed, env)
    raise ValueError(f"unknown algorithm {name!r}; valid: {', '.join(ALGORITHMS)}")
