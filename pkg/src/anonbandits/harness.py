"""Seeded replication of learners over instance families, with CI aggregation and CSV output."""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from anonbandits.env import (
    HardKind,
    Instance,
    gen_clustered_instance,
    gen_hard_instance,
    gen_linear_instance,
    gen_uniform_instance,
)
from anonbandits.learners import ALGORITHMS, run_algorithm
from anonbandits.rng import stable_hash

log = logging.getLogger(__name__)

INSTANCE_KINDS = ("uniform", "linear", "clustered", "file") + tuple(k.value for k in HardKind)

# gamma constant picked by scripts/tune_gamma.py on validation seeds disjoint from
# every experiment seed below (grid minimum of mean Alg1 regret, both instance classes)
TUNED_GAMMA_CONST = 0.03


@dataclass(frozen=True)
class InstanceSpec:
    kind: str = "uniform"
    n: int = 50
    k: int = 5
    c: int = 4
    t: int = 100_000
    dim: int = 10
    u: int | None = None
    gap: float = 0.2
    path: str | None = None

    def __post_init__(self):
        if self.kind not in INSTANCE_KINDS:
            raise ValueError(f"unknown instance kind {self.kind!r}; valid: {', '.join(INSTANCE_KINDS)}")

    @classmethod
    def parse(cls, text: str) -> "InstanceSpec":
        """``kind[,key=value...]``, e.g. ``uniform,n=50,k=5,c=4,t=100000``."""
        parts = [p.strip() for p in text.split(",") if p.strip()]
        if not parts:
            raise ValueError("empty instance spec")
        kw: dict = {"kind": parts[0]}
        types = {"n": int, "k": int, "c": int, "t": int, "dim": int, "u": int, "gap": float, "path": str}
        for p in parts[1:]:
            key, sep, val = p.partition("=")
            if not sep or key not in types:
                raise ValueError(f"bad instance parameter {p!r}; keys: {', '.join(types)}")
            kw[key] = types[key](val)
        return cls(**kw)

    def __str__(self) -> str:
        keys = ("n", "k", "c", "t")
        extra = {"linear": ("dim",), "clustered": ("u", "gap"), "file": ("path",)}.get(self.kind, ())
        return ",".join([self.kind] + [f"{key}={getattr(self, key)}" for key in keys + extra])

    def with_horizon(self, t: int) -> "InstanceSpec":
        return replace(self, t=t)

    def build(self, seed: int) -> Instance:
        if self.kind == "uniform":
            return gen_uniform_instance(self.n, self.k, self.c, self.t, seed)
        if self.kind == "linear":
            return gen_linear_instance(self.n, self.k, self.c, self.t, self.dim, seed)
        if self.kind == "clustered":
            u = self.u if self.u is not None else self.n // self.k
            return gen_clustered_instance(self.n, self.k, self.c, self.t, u, self.gap, seed)
        if self.kind == "file":
            return Instance.from_text(Path(self.path).read_text()).with_horizon(self.t)
        return gen_hard_instance(self.kind, self.t, seed, n=self.n, k=self.k, c=self.c)


@dataclass(frozen=True)
class ExperimentConfig:
    instance: InstanceSpec = field(default_factory=InstanceSpec)
    algorithms: tuple[str, ...] = ALGORITHMS
    replications: int = 20
    seed: int = 0
    out: str | None = None
    stride: int = 100
    gamma_const: float = TUNED_GAMMA_CONST  # Alg1 variants only
    workers: int = 1

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not self.algorithms:
            raise ValueError("algorithm list is empty")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise ValueError(f"unknown algorithm(s) {bad}; valid: {', '.join(ALGORITHMS)}")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")


def instance_seed(root: int, replication: int) -> int:
    # keyed by replication only, so every algorithm sees the same instance
    return stable_hash(root, "instance", replication)


def run_seed(root: int, algorithm: str, replication: int) -> int:
    return stable_hash(root, algorithm, replication)


def ci_half_width(samples: np.ndarray) -> np.ndarray:
    """1.96 * sample std / sqrt(n) along axis 0 (zero for a single sample)."""
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[0]
    if n < 2:
        return np.zeros(samples.shape[1:])
    return 1.96 * samples.std(axis=0, ddof=1) / math.sqrt(n)


@dataclass
class AggregateResult:
    algorithms: list[str]
    mean_curve: dict[str, np.ndarray]
    ci_curve: dict[str, np.ndarray]
    finals: dict[str, np.ndarray]
    failures: list[tuple[str, int, str]] = field(default_factory=list)
    config: ExperimentConfig | None = None

    def final_mean(self, alg: str) -> float:
        return float(np.mean(self.finals[alg])) if self.finals[alg].size else math.nan

    def final_ci(self, alg: str) -> float:
        return float(ci_half_width(self.finals[alg][:, None])[0]) if self.finals[alg].size else 0.0

    def final_table(self) -> list[tuple[str, float, float, int]]:
        return [(a, self.final_mean(a), self.final_ci(a), int(self.finals[a].size)) for a in self.algorithms]

    def summary(self) -> str:
        rows = [f"{'algorithm':<12} {'final regret':>14} {'95% CI':>12} {'reps':>5}"]
        for a, m, h, n in self.final_table():
            rows.append(f"{a:<12} {m:>14.1f} {h:>12.1f} {n:>5}")
        for a, r, msg in self.failures:
            rows.append(f"FAILED {a} replication {r}: {msg}")
        return "\n".join(rows)


def _one_run(args: tuple[InstanceSpec, str, int, int, float]) -> tuple[str, int, np.ndarray | None, str | None]:
    spec, alg, rep, root, gamma_const = args
    try:
        inst = spec.build(instance_seed(root, rep))
        kw = {"gamma_const": gamma_const} if alg.startswith("alg1-") else {}
        trace = run_algorithm(alg, inst, run_seed(root, alg, rep), **kw)
        return alg, rep, trace.cumulative_pseudo_regret, None
    except Exception as exc:  # reported per replication, see AggregateResult.failures
        return alg, rep, None, f"{type(exc).__name__}: {exc}"


def run_experiment(config: ExperimentConfig) -> AggregateResult:
    jobs = [
        (config.instance, alg, rep, config.seed, config.gamma_const)
        for alg in config.algorithms
        for rep in range(config.replications)
    ]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            results = list(pool.map(_one_run, jobs))
    else:
        results = [_one_run(j) for j in jobs]
    curves: dict[str, dict[int, np.ndarray]] = {a: {} for a in config.algorithms}
    failures = []
    for alg, rep, curve, err in results:
        if err is not None:
            log.warning("%s replication %d failed: %s", alg, rep, err)
            failures.append((alg, rep, err))
        else:
            curves[alg][rep] = curve
    mean_curve, ci_curve, finals = {}, {}, {}
    for alg in config.algorithms:
        reps = sorted(curves[alg])
        if not reps:
            mean_curve[alg] = np.zeros(0)
            ci_curve[alg] = np.zeros(0)
            finals[alg] = np.zeros(0)
            continue
        stack = np.stack([curves[alg][r] for r in reps])
        mean_curve[alg] = stack.mean(axis=0)
        ci_curve[alg] = ci_half_width(stack)
        finals[alg] = stack[:, -1].copy()
    result = AggregateResult(list(config.algorithms), mean_curve, ci_curve, finals, failures, config)
    if config.out:
        emit_csv(result, config.out, config.stride)
    return result


def _csv_paths(path: str | Path) -> tuple[Path, Path]:
    p = Path(path)
    if p.suffix != ".csv":
        p = p / "regret.csv"
    return p, p.with_name(p.stem + "_final.csv")


def emit_csv(result: AggregateResult, path: str | Path, stride: int = 100) -> tuple[Path, Path]:
    """Write the thinned curve file and its ``_final.csv`` companion; returns both paths."""
    curve_path, final_path = _csv_paths(path)
    try:
        curve_path.parent.mkdir(parents=True, exist_ok=True)
        with open(curve_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["round", "algorithm", "mean_regret", "ci_low", "ci_high"])
            for alg in result.algorithms:
                mean, ci = result.mean_curve[alg], result.ci_curve[alg]
                T = mean.size
                rounds = list(range(stride, T + 1, stride))
                if T and (not rounds or rounds[-1] != T):
                    rounds.append(T)
                for t in rounds:
                    m, h = float(mean[t - 1]), float(ci[t - 1])
                    w.writerow([t, alg, repr(m), repr(m - h), repr(m + h)])
        with open(final_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["algorithm", "mean_final_regret", "ci_half_width", "replications"])
            for alg, m, h, n in result.final_table():
                w.writerow([alg, repr(m), repr(h), n])
    except OSError as exc:
        raise IoFailure(f"cannot write results to {curve_path}: {exc}") from exc
    return curve_path, final_path


class IoFailure(OSError):
    pass


def read_curve_csv(path: str | Path) -> dict[str, dict[str, list]]:
    out: dict[str, dict[str, list]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            d = out.setdefault(row["algorithm"], {"round": [], "mean": [], "low": [], "high": []})
            d["round"].append(int(row["round"]))
            d["mean"].append(float(row["mean_regret"]))
            d["low"].append(float(row["ci_low"]))
            d["high"].append(float(row["ci_high"]))
    return out


# Presets reproducing the simulation study (uniform and linear-model instances).
FIGURE1 = ExperimentConfig(
    instance=InstanceSpec("uniform", n=50, k=5, c=4, t=100_000),
    replications=20,
    seed=2022,
)
FIGURE2 = replace(FIGURE1, instance=InstanceSpec("linear", n=50, k=5, c=4, t=100_000, dim=10))
PRESETS = {"figure1": FIGURE1, "figure2": FIGURE2}

CI_HORIZON = 20_000
CI_REPLICATIONS = 5


def ci_scale(config: ExperimentConfig) -> ExperimentConfig:
    """Reduced run: T = 2e4 and 5 replications."""
    return replace(config, instance=config.instance.with_horizon(CI_HORIZON), replications=CI_REPLICATIONS)
