"""Batched successive elimination on a static grid.

One :class:`BaseState` is a single-user batched bandit: at each batch it
announces its surviving arms and how many samples per arm it wants, then
eliminates arms whose empirical mean trails the leader by
``sqrt(gamma * noise_proxy / tau)``.  The last batch (when B >= 2) commits
to the empirical leader.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np


class GridInfeasible(ValueError):
    pass


class QuotaUnmet(ValueError):
    pass


@dataclass(frozen=True)
class BaseGrid:
    horizon: int
    batches: int
    boundaries: tuple[int, ...]  # t_0 = 0 < t_1 < ... < t_B = horizon
    base: float

    @property
    def lengths(self) -> list[int]:
        t = self.boundaries
        return [t[b] - t[b - 1] for b in range(1, len(t))]


def default_batches(horizon: int) -> int:
    if horizon < 4:
        return 1
    return max(1, math.floor(math.log2(math.log2(horizon))))


def make_grid(horizon: int, batches: int) -> BaseGrid:
    """Static grid with t_b ~ a^(2 - 2^(1-b)) and a = T^(1 / (2 - 2^(1-B)))."""
    if batches < 1:
        raise ValueError("need at least one batch")
    if horizon < batches:
        raise GridInfeasible(f"cannot split {horizon} rounds into {batches} nonempty batches")
    a = horizon ** (1.0 / (2.0 - 2.0 ** (1 - batches)))
    t = [0]
    for b in range(1, batches):
        raw = min(horizon, math.ceil(a ** (2.0 - 2.0 ** (1 - b))))
        t.append(max(raw, t[-1] + 1))
    t.append(horizon)
    # pull boundaries back so every batch keeps at least one round
    for b in range(batches - 1, 0, -1):
        t[b] = min(t[b], t[b + 1] - 1)
    return BaseGrid(horizon, batches, tuple(t), a)


def default_gamma(n_users: int, n_arms: int, horizon: int, const: float = 2.0) -> float:
    """gamma = const * ln(N K T); the noise proxy is applied separately in the threshold."""
    return const * math.log(max(n_users * n_arms * horizon, 2))


class BaseState:
    def __init__(self, n_arms: int, grid: BaseGrid, gamma: float, noise_proxy: float = 1.0):
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        self.n_arms = n_arms
        self.grid = grid
        self.gamma = gamma
        self.noise_proxy = noise_proxy
        self.active: list[int] = list(range(n_arms))
        self.counts = np.zeros(n_arms, dtype=np.int64)
        self.sums = np.zeros(n_arms)
        self.b = 1

    @property
    def finished(self) -> bool:
        return self.b > self.grid.batches

    @property
    def is_commit_batch(self) -> bool:
        return self.grid.batches >= 2 and self.b == self.grid.batches

    def means(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.counts > 0, self.sums / np.maximum(self.counts, 1), -np.inf)

    def best_arm(self) -> int:
        """Empirical leader among active arms; lowest index on ties (and with no data)."""
        m = self.means()
        return max(self.active, key=lambda j: (m[j], -j))

    def begin_batch(self) -> tuple[list[int], int]:
        if self.finished:
            raise RuntimeError("all batches are done")
        d = self.grid.lengths[self.b - 1]
        if self.is_commit_batch:
            return [self.best_arm()], d
        return list(self.active), -(-d // len(self.active))

    def threshold(self) -> float:
        tau = int(max(self.counts[j] for j in self.active))
        if tau == 0:
            return math.inf
        return math.sqrt(self.gamma * self.noise_proxy / tau)

    def end_batch(self, samples: Mapping[int, Sequence[float]], strict: bool = True) -> list[int]:
        """Record the batch's samples, eliminate, and return the next active set.

        With ``strict=False`` an arm may arrive short of its quota; arms with
        no samples at all are neither compared nor eliminated.
        """
        wanted, quota = self.begin_batch()
        for j, xs in samples.items():
            if j not in wanted and len(xs):
                raise ValueError(f"samples for arm {j}, which is not requested this batch")
        if strict:
            short = [j for j in wanted if len(samples.get(j, ())) < quota]
            if short:
                raise QuotaUnmet(f"arms {short} have fewer than {quota} samples")
        for j, xs in samples.items():
            xs = np.asarray(xs, dtype=float)
            self.counts[j] += xs.size
            self.sums[j] += xs.sum()
        if not self.is_commit_batch:
            self._eliminate()
        self.b += 1
        return list(self.active)

    def _eliminate(self) -> None:
        m = self.means()
        sampled = [j for j in self.active if self.counts[j] > 0]
        if not sampled:
            return
        leader = max(sampled, key=lambda j: (m[j], -j))
        thr = self.threshold()
        self.active = [j for j in self.active if j == leader or self.counts[j] == 0 or m[leader] - m[j] < thr]
