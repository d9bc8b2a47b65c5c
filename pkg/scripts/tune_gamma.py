"""Pick the BaSE elimination constant by validation.

Runs the three Alg1 variants on uniform and linear instances drawn from
validation seeds that no experiment preset uses, and reports mean final
regret per constant.  The constant with the lowest overall mean is the
one stored as ``harness.TUNED_GAMMA_CONST``.
"""

import argparse

import numpy as np

from anonbandits.env import gen_linear_instance, gen_uniform_instance
from anonbandits.learners import run_algorithm

GRID = (0.01, 0.02, 0.03, 0.05, 0.1)
VARIANTS = ("alg1-random", "alg1-lp", "alg1-greedy")
VALIDATION_SEEDS = range(5000, 5020)


def evaluate(gamma_const, seeds=VALIDATION_SEEDS, t=100_000):
    table = {}
    for name, gen in (("uniform", gen_uniform_instance), ("linear", gen_linear_instance)):
        for alg in VARIANTS:
            finals = [
                run_algorithm(alg, gen(50, 5, 4, t, seed=s), s, gamma_const=gamma_const).final_regret
                for s in seeds
            ]
            table[name, alg] = float(np.mean(finals))
    return table


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--grid", type=float, nargs="+", default=GRID)
    args = p.parse_args(argv)
    best = None
    for g in args.grid:
        table = evaluate(g)
        overall = float(np.mean(list(table.values())))
        cells = " ".join(f"{k[0][:3]}/{k[1][5:]}={v / 1e3:.0f}k" for k, v in table.items())
        print(f"gamma_const={g:<6} mean={overall / 1e3:.1f}k  {cells}", flush=True)
        if best is None or overall < best[1]:
            best = (g, overall)
    print(f"best gamma_const: {best[0]}")


if __name__ == "__main__":
    main()
