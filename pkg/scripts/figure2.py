"""Regret curves of all five learners on linear-model instances (10-dim unit vectors) (N=50, K=5, C=4, T=1e5, 20 runs).

    python scripts/figure2.py [--scale ci] [--out results/figure2]
"""

import argparse
import time
from dataclasses import replace

from anonbandits.harness import FIGURE2, ci_scale, run_experiment


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--scale", choices=("full", "ci"), default="full")
    p.add_argument("--out", default="results/figure2")
    args = p.parse_args(argv)
    cfg = replace(FIGURE2, out=args.out)
    if args.scale == "ci":
        cfg = ci_scale(cfg)
    start = time.time()
    result = run_experiment(cfg)
    print(result.summary())
    print(f"{time.time() - start:.0f}s, curves in {args.out}")


if __name__ == "__main__":
    main()
