"""Regret curves of all five learners on uniform instances (N=50, K=5, C=4, T=1e5, 20 runs).

    python scripts/figure1.py [--scale ci] [--out results/figure1]
"""

import argparse
import time
from dataclasses import replace

from anonbandits.harness import FIGURE1, ci_scale, run_experiment


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--scale", choices=("full", "ci"), default="full")
    p.add_argument("--out", default="results/figure1")
    args = p.parse_args(argv)
    cfg = replace(FIGURE1, out=args.out)
    if args.scale == "ci":
        cfg = ci_scale(cfg)
    start = time.time()
    result = run_experiment(cfg)
    print(result.summary())
    print(f"{time.time() - start:.0f}s, curves in {args.out}")


if __name__ == "__main__":
    main()
