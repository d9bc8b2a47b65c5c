"""Log-log slope of final regret against T for ETC and Alg1 (LP) on clustered instances.

Instances: K=3 arms, U=N/K users favour each arm, gap 0.2.
"""

import argparse

import numpy as np

from anonbandits.harness import TUNED_GAMMA_CONST, ExperimentConfig, InstanceSpec, run_experiment

HORIZONS = (10_000, 30_000, 100_000)


def slopes(n=30, k=3, c=2, reps=10, seed=31, horizons=HORIZONS, gamma_const=TUNED_GAMMA_CONST):
    """Return ({alg: slope}, {alg: [mean final regret per horizon]})."""
    finals = {"etc": [], "alg1-lp": []}
    for t in horizons:
        cfg = ExperimentConfig(
            InstanceSpec("clustered", n=n, k=k, c=c, t=t, u=n // k, gap=0.2),
            algorithms=tuple(finals),
            replications=reps,
            seed=seed,
            gamma_const=gamma_const,
        )
        res = run_experiment(cfg)
        for alg in finals:
            finals[alg].append(res.final_mean(alg))
    x = np.log(horizons)
    fit = {alg: float(np.polyfit(x, np.log(v), 1)[0]) for alg, v in finals.items()}
    return fit, finals


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--c", type=int, default=2)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=31)
    args = p.parse_args(argv)
    fit, finals = slopes(args.n, 3, args.c, args.reps, args.seed)
    for alg in fit:
        curve = " ".join(f"{v:.0f}" for v in finals[alg])
        print(f"{alg:<8} slope {fit[alg]:.3f}   final regret {curve}")


if __name__ == "__main__":
    main()
