"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 data or format error,
4 audit failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError, FormatError, GeodpError
from .harness.audit import PolarGrid, dp_ratio_audit, worst_case_pair
from .harness.bench import (
    BENCH_CHAIN,
    DEFAULT_REPLICATES,
    DEFAULT_SIZES,
    MECHANISMS,
    BenchmarkConfig,
    run_benchmark,
)
from .harness.io import fmt, load_landmarks, write_gnuplot, write_landmarks, write_results, write_summary
from .harness.shapes import TEMPLATES, ShapeOptions, gen_synthetic_corpus, output_distances, run_shape_pipeline
from .kendall import KendallShapeSpace
from .mcmc import ChainConfig, default_chain_config
from .sphere import sample_ball_uniform_polar

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_AUDIT = 0, 2, 3, 4

log = logging.getLogger("geodp")


def _int_list(text):
    try:
        vals = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("expected at least one value")
    return vals


def _str_list(text):
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _chain_args(p):
    p.add_argument("--burn-in", type=int, help="Metropolis burn-in steps")
    p.add_argument("--thin", type=int, help="emit every THIN-th state after burn-in")
    p.add_argument("--step", type=float, help="proposal step scale t in (0, 1]")


def _chain_from(args, base: ChainConfig, seed: int) -> ChainConfig:
    return ChainConfig(
        burn_in=base.burn_in if args.burn_in is None else args.burn_in,
        thin=base.thin if args.thin is None else args.thin,
        step=base.step if args.step is None else args.step,
        seed=seed,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geodp", description="Private Fréchet means on manifolds.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="replicated utility benchmark")
    bench.add_argument("manifold", choices=sorted(MECHANISMS))
    bench.add_argument("--epsilon", type=float, default=1.0)
    bench.add_argument("--radius", type=float, help="data ball radius (default pi/8 sphere, 1.5 spd)")
    bench.add_argument("--sizes", type=_int_list)
    bench.add_argument("--replicates", type=int)
    bench.add_argument("--mechanisms", type=_str_list)
    bench.add_argument("--seed", type=int, default=0)
    _chain_args(bench)
    bench.add_argument("--workers", type=int, default=1, help="worker processes")
    bench.add_argument("--record-time", action="store_true", help="fill wall_ms (breaks byte-reproducibility)")
    bench.add_argument("--out", type=Path, default=Path("results.csv"))
    bench.add_argument("--summary", type=Path, help="summary CSV path (default: <out>.summary.csv)")
    bench.add_argument("--emit-plot", type=Path, help="write a gnuplot script for the summary")

    shape = sub.add_parser("shape", help="private mean shape")
    shape_sub = shape.add_subparsers(dest="action", required=True)
    run = shape_sub.add_parser("run")
    run.add_argument("input", type=Path, help="landmark CSV")
    run.add_argument("--epsilon", type=float, default=1.0)
    run.add_argument("--seed", type=int, default=0)
    _chain_args(run)
    run.add_argument("--smooth-bandwidth", type=float)
    run.add_argument("--out", type=Path, default=Path("shapes.csv"))

    audit = sub.add_parser("audit", help="grid audit of the DP density ratio")
    audit_sub = audit.add_subparsers(dest="action", required=True)
    dp = audit_sub.add_parser("dp")
    dp.add_argument("--epsilon", type=float, default=1.0)
    dp.add_argument("--calibration-epsilon", type=float, help="epsilon used to set sigma (default --epsilon)")
    dp.add_argument("--radius", type=float, default=math.pi / 8)
    dp.add_argument("--sizes", type=_int_list, default=(20,), help="dataset size n")
    dp.add_argument("--pairs", type=int, default=20, help="random adjacent pairs")
    dp.add_argument("--worst-case", action="store_true", help="also audit an opposite-edge pair")
    dp.add_argument("--grid", type=int, default=200, help="cells per polar axis")
    dp.add_argument("--mechanisms", type=_str_list, default=("kng", "laplace"))
    dp.add_argument("--seed", type=int, default=0)
    dp.add_argument("--out", type=Path, help="JSON report path")

    gen = sub.add_parser("gen", help="data generators")
    gen_sub = gen.add_subparsers(dest="action", required=True)
    corpus = gen_sub.add_parser("corpus")
    corpus.add_argument("--template", choices=TEMPLATES, default="ellipse")
    corpus.add_argument("--landmarks", type=int, default=32)
    corpus.add_argument("--count", type=int, default=50)
    corpus.add_argument("--noise", type=float, default=0.05)
    corpus.add_argument("--no-pose", action="store_true", help="skip random rotation, scale and shift")
    corpus.add_argument("--seed", type=int, default=0)
    corpus.add_argument("--out", type=Path, default=Path("corpus.csv"))
    return parser


def cmd_bench(args) -> int:
    name = args.manifold
    base = BENCH_CHAIN[name]
    cfg = BenchmarkConfig(
        manifold=name,
        sizes=args.sizes or DEFAULT_SIZES[name],
        replicates=args.replicates or DEFAULT_REPLICATES[name],
        epsilon=args.epsilon,
        radius=args.radius,
        mechanisms=args.mechanisms or (),
        seed=args.seed,
        chain=_chain_from(args, base, args.seed),
        workers=args.workers,
        record_time=args.record_time,
    )
    rows = run_benchmark(cfg)
    write_results(rows, args.out)
    summary_path = args.summary or args.out.with_suffix(".summary.csv")
    summary = write_summary(rows, summary_path)
    if args.emit_plot:
        write_gnuplot(summary_path, args.emit_plot, cfg.mechanism_list, title=f"{name}, epsilon={cfg.epsilon}")
    for s in summary:
        print(f"{s['mechanism']:>10} n={s['n']:<5} mean={s['mean_utility']:.6g} 2SE={s['two_se']:.3g}")
    failed = sum(1 for r in rows if r.error)
    if failed:
        print(f"{failed} row(s) carry an error tag", file=sys.stderr)
    return EXIT_OK


def cmd_shape(args) -> int:
    shapes = load_landmarks(args.input)
    k = shapes.shape[-1]
    chain = _chain_from(args, default_chain_config(KendallShapeSpace(k), args.seed), args.seed)
    out = run_shape_pipeline(
        shapes, args.epsilon, ShapeOptions(seed=args.seed, chain=chain, smooth_bandwidth=args.smooth_bandwidth)
    )
    labels = ["mean", *out.outputs()]
    configs = [out.mean, *out.outputs().values()]
    write_landmarks(np.stack(configs), args.out, header=False)
    meta = args.out.with_suffix(".meta.json")
    meta.write_text(
        json.dumps(
            {
                "rows": labels,
                "epsilon": args.epsilon,
                "radius": out.radius,
                "radius_data_dependent": out.radius_data_dependent,
                "sigma": out.sigma,
                "acceptance_rate": out.acceptance_rate,
                "distances_to_mean": output_distances(out),
                "warnings": out.warnings,
            },
            indent=2,
        )
        + "\n"
    )
    for name, d in output_distances(out).items():
        print(f"{name:>20} shape distance {d:.6g}")
    print("note: radius is data-dependent; no formal privacy guarantee for this release", file=sys.stderr)
    return EXIT_OK


def cmd_audit(args) -> int:
    grid = PolarGrid(args.radius, args.grid, args.grid)
    if args.pairs < 1:
        raise ConfigError("pairs must be at least 1")
    n = args.sizes[0]
    rng = np.random.default_rng(args.seed)
    pairs = []
    for _ in range(args.pairs):
        D = sample_ball_uniform_polar(args.radius, n, rng)
        Dp = D.copy()
        Dp[-1] = sample_ball_uniform_polar(args.radius, 1, rng)[0]
        pairs.append((D, Dp))
    if args.worst_case:
        pairs.append(worst_case_pair(n, args.radius))
    report = {}
    ok = True
    for mech in args.mechanisms:
        worst = max(
            (dp_ratio_audit(grid, D, Dp, args.epsilon, mech, args.calibration_epsilon) for D, Dp in pairs),
            key=lambda r: r.max_log_ratio,
        )
        ok &= worst.passed
        report[mech] = {
            "max_log_ratio": worst.max_log_ratio,
            "threshold": worst.threshold,
            "sigma": worst.sigma,
            "passed": worst.passed,
        }
        print(f"{mech:>8} max log-ratio {fmt(worst.max_log_ratio)} threshold {fmt(worst.threshold)} "
              f"{'PASS' if worst.passed else 'FAIL'}")
    if args.out:
        args.out.write_text(json.dumps(report, indent=2) + "\n")
    return EXIT_OK if ok else EXIT_AUDIT


def cmd_gen(args) -> int:
    shapes = gen_synthetic_corpus(
        args.template, args.landmarks, args.count, args.noise, args.seed, pose=not args.no_pose
    )
    write_landmarks(shapes, args.out)
    print(f"wrote {len(shapes)} shapes with {args.landmarks} landmarks to {args.out}")
    return EXIT_OK


COMMANDS = {"bench": cmd_bench, "shape": cmd_shape, "audit": cmd_audit, "gen": cmd_gen}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FormatError, DomainError, OSError, csv.Error) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except GeodpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
