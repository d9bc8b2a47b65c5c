"""Command line: ``run`` experiments, ``validate-decomp`` fixtures, ``gen-instance``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from anonbandits.decomp import BatchedGraph, Decomposition, validate_decomposition
from anonbandits.harness import (
    PRESETS,
    ExperimentConfig,
    InstanceSpec,
    ci_scale,
    run_experiment,
)
from anonbandits.learners import ALGORITHMS

DEFAULT_INSTANCE = "uniform,n=50,k=5,c=4,t=100000"
RUN_KEYS = ("preset", "instance", "algos", "reps", "seed", "out", "scale", "stride", "gamma-const", "workers")


def read_config(path: str) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("_", "-")
        if not sep or key not in RUN_KEYS:
            raise ValueError(f"{path}:{n}: expected 'key = value' with key in {', '.join(RUN_KEYS)}")
        out[key] = value.strip()
    return out


def parse_algos(text: str) -> tuple[str, ...]:
    names = tuple(a.strip() for a in text.split(",") if a.strip())
    bad = [a for a in names if a not in ALGORITHMS]
    if bad or not names:
        raise ValueError(f"unknown algorithm {', '.join(bad) or '(none)'}; valid names: {', '.join(ALGORITHMS)}")
    return names


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="anonbandits", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="replicate learners and write regret curves")
    run.add_argument("--config", help="key = value file; explicit flags override it")
    run.add_argument("--preset", choices=sorted(PRESETS))
    run.add_argument("--instance", help=f"kind[,key=value...] (default {DEFAULT_INSTANCE})")
    run.add_argument("--algos", help=f"comma separated subset of {','.join(ALGORITHMS)}")
    run.add_argument("--reps", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    run.add_argument("--scale", choices=("full", "ci"))
    run.add_argument("--stride", type=int)
    run.add_argument("--gamma-const", type=float)
    run.add_argument("--workers", type=int)

    val = sub.add_parser("validate-decomp", help="check a decomposition fixture against its graph")
    val.add_argument("--graph", required=True)
    val.add_argument("--decomp", required=True)

    gen = sub.add_parser("gen-instance", help="write an instance fixture")
    gen.add_argument("--instance", default=DEFAULT_INSTANCE)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    return p


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    opts = read_config(args.config) if args.config else {}
    for key in RUN_KEYS:
        v = getattr(args, key.replace("-", "_"))
        if v is not None:
            opts[key] = str(v)
    cfg = PRESETS[opts["preset"]] if "preset" in opts else ExperimentConfig(InstanceSpec.parse(DEFAULT_INSTANCE))
    if "instance" in opts:
        cfg = replace(cfg, instance=InstanceSpec.parse(opts["instance"]))
    if "algos" in opts:
        cfg = replace(cfg, algorithms=parse_algos(opts["algos"]))
    if opts.get("scale", "full") == "ci":
        cfg = ci_scale(cfg)
    elif opts.get("scale") not in (None, "full"):
        raise ValueError(f"scale must be full or ci, got {opts['scale']!r}")
    conv = {"reps": ("replications", int), "seed": ("seed", int), "out": ("out", str),
            "stride": ("stride", int), "gamma-const": ("gamma_const", float), "workers": ("workers", int)}
    for key, (field_name, typ) in conv.items():
        if key in opts:
            cfg = replace(cfg, **{field_name: typ(opts[key])})
    return cfg


def cli_main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")

    if args.command == "run":
        try:
            cfg = config_from_args(args)
        except (ValueError, OSError) as exc:
            parser.print_usage(sys.stderr)
            print(f"anonbandits run: error: {exc}", file=sys.stderr)
            return 2
        try:
            result = run_experiment(cfg)
        except Exception as exc:
            print(f"run failed: {exc}", file=sys.stderr)
            return 1
        print(f"instance {cfg.instance}, {cfg.replications} replications, seed {cfg.seed}")
        print(result.summary())
        if cfg.out:
            print(f"wrote curves under {cfg.out}")
        return 1 if result.failures else 0

    if args.command == "validate-decomp":
        try:
            graph, c = BatchedGraph.from_text(Path(args.graph).read_text())
            dec = Decomposition.from_text(Path(args.decomp).read_text(), graph.n_arms, c)
            report = validate_decomposition(graph, c, dec)
        except (ValueError, OSError) as exc:
            print(f"validate-decomp: {exc}", file=sys.stderr)
            return 1
        print(report)
        return 0 if report.valid else 1

    try:
        spec = InstanceSpec.parse(args.instance)
    except ValueError as exc:
        parser.print_usage(sys.stderr)
        print(f"anonbandits gen-instance: error: {exc}", file=sys.stderr)
        return 2
    try:
        inst = spec.build(args.seed)
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(inst.to_text())
    except (ValueError, OSError) as exc:
        print(f"gen-instance failed: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {inst.n_users}x{inst.n_arms} instance to {args.out}")
    return 0


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
