"""Command line entry point: ``parallel-vq {generate,run,plot,verify}``."""

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig, load_config
from .datagen import export_csv, save_dataset
from .experiment import prepare_seed, run_experiment
from .plot import plot_curves
from .verify import run_checks

logger = logging.getLogger("parallel_vq")


def _load(args):
    config = load_config(args.config) if args.config else ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        config = config.with_seed(args.seed)
    return config


def cmd_generate(args):
    config = _load(args)
    out = Path(args.out or config.output)
    out.mkdir(parents=True, exist_ok=True)
    for seed in config.seeds:
        data, _ = prepare_seed(config, seed)
        path = out / f"dataset_seed{seed}.dvq"
        save_dataset(data, path)
        print(f"wrote {path} (M={data.M}, n={data.n}, dim={data.dim})")
        if args.csv:
            export_csv(data, path.with_suffix(".csv"))
    return 0


def cmd_run(args):
    config = _load(args)
    out = Path(args.out or config.output)
    result = run_experiment(config, out_dir=out, threads=args.threads)
    print(f"{'scheme':<10} {'M':>3} {'tau':>4} {'seed':>4} {'final':>12} {'ttt':>7} {'speedup':>8}")
    for r in result.summary:
        ttt = "never" if r.time_to_threshold is None else str(r.time_to_threshold)
        speedup = "-" if r.speedup is None else f"{r.speedup:.2f}"
        print(f"{r.scheme:<10} {r.M:>3} {r.tau:>4} {r.seed:>4} {r.final_distortion:>12.6g} "
              f"{ttt:>7} {speedup:>8}")
    print(f"wrote {len(result.curves)} curves and summary.csv to {out}")
    return 0


def cmd_plot(args):
    paths = []
    for item in args.curves:
        p = Path(item)
        paths.extend(sorted(p.glob("*.csv")) if p.is_dir() else [p])
    if not paths:
        raise FileNotFoundError("no curve CSV files found")
    out = Path(args.out)
    if out.is_dir():
        out = out / "curves.svg"
    plot_curves(paths, out, log_y=args.log_y, title=args.title)
    print(f"wrote {out}")
    return 0


def cmd_verify(args):
    results = run_checks()
    for check in results:
        print(check.line())
    failed = [c for c in results if not c.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def build_parser():
    parser = argparse.ArgumentParser(prog="parallel-vq",
                                     description="Simulate parallel stochastic vector quantization.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write the dataset of each seed as a DVQ1 file")
    gen.add_argument("--config", help="experiment config (defaults when omitted)")
    gen.add_argument("--out", help="output directory")
    gen.add_argument("--seed", type=int, help="override the config's seed list")
    gen.add_argument("--csv", action="store_true", help="also write a CSV copy")
    gen.set_defaults(func=cmd_generate)

    run = sub.add_parser("run", help="run an experiment grid")
    run.add_argument("--config", help="experiment config (defaults when omitted)")
    run.add_argument("--out", help="output directory")
    run.add_argument("--seed", type=int, help="override the config's seed list")
    run.add_argument("--threads", type=int, default=1, help="grid cells run in parallel")
    run.set_defaults(func=cmd_run)

    plot = sub.add_parser("plot", help="render curve CSVs to an SVG")
    plot.add_argument("curves", nargs="+", help="curve CSV files or directories of them")
    plot.add_argument("--out", required=True, help="SVG path (or directory)")
    plot.add_argument("--log-y", action="store_true")
    plot.add_argument("--title")
    plot.set_defaults(func=cmd_plot)

    ver = sub.add_parser("verify", help="run the oracle and invariant checks")
    ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, OSError, ValueError, RuntimeError) as exc:
        print(f"parallel-vq {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
