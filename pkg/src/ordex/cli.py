"""``ordex`` command line: generate | analyze | compare.

Exit codes: 0 success, 1 runtime or capacity error, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .errors import ArgumentError, CapacityError, OrdexError
from .model import MAX_FEATURES, ModelSpec, SplitSpec
from .report import (BASELINES, GENERATOR_KINDS, GeneratorSpec, RunConfig, comparison_rows, run,
                     write_artifacts)
from .synthgen import DEFAULT_DISTRACTORS, DEFAULT_NOISE_SD, write_csv

log = logging.getLogger("ordex")


class UsageError(Exception):
    pass


def _add_source(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("dataset source (a CSV, a generator, or a config file)")
    g.add_argument("--data", help="CSV with a header row; numeric columns only")
    g.add_argument("--target", default="y", help="target column name (default: y)")
    g.add_argument("--kind", choices=sorted(GENERATOR_KINDS), help="generate the dataset in-process")
    g.add_argument("--samples", type=int, default=2000)
    g.add_argument("--distractors", type=int, default=DEFAULT_DISTRACTORS)
    g.add_argument("--noise", type=float, default=DEFAULT_NOISE_SD)
    g.add_argument("--data-seed", type=int, default=42)
    g.add_argument("--config", help="JSON RunConfig; replaces all run flags")

    r = p.add_argument_group("run")
    r.add_argument("--mode", choices=["sampled", "exhaustive"], default="sampled")
    r.add_argument("--trials", type=int, default=None, help="sampled trials (default 20 per feature)")
    r.add_argument("--seed", type=int, default=0, help="ordering seed")
    r.add_argument("--model", choices=["knn", "linear"], default="knn")
    r.add_argument("--k", type=int, default=None, help="k-NN neighbours (default max(5, sqrt(n_train)))")
    r.add_argument("--train-fraction", type=float, default=0.7)
    r.add_argument("--split-seed", type=int, default=0)
    r.add_argument("--tau", type=float, default=0.4, help="triad flag threshold")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--no-figures", action="store_true", help="skip SVG rendering")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ordex", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ordex {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic dataset CSV + provenance JSON")
    g.add_argument("--kind", required=True, choices=sorted(GENERATOR_KINDS))
    g.add_argument("--samples", type=int, default=2000)
    g.add_argument("--distractors", type=int, default=DEFAULT_DISTRACTORS)
    g.add_argument("--noise", type=float, default=DEFAULT_NOISE_SD)
    g.add_argument("--seed", type=int, default=42)
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--name", help="file stem (default: the kind)")

    a = sub.add_parser("analyze", help="ordering trials, L-scores, clouds and plots")
    _add_source(a)
    a.add_argument("--baselines", default="",
                   help=f"comma-separated subset of {','.join(BASELINES)}")

    c = sub.add_parser("compare", help="L-score next to Pearson, MI and Shapley interaction")
    _add_source(c)
    c.add_argument("--no-shapley", action="store_true", help="skip exact Shapley enumeration")
    return parser


def _config(args: argparse.Namespace, baselines: list[str]) -> RunConfig:
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        return RunConfig.from_dict(raw)
    if (args.data is None) == (args.kind is None):
        raise UsageError("give exactly one of --data or --kind")
    generator = None
    if args.kind:
        generator = GeneratorSpec(args.kind, args.samples, args.distractors, args.noise, args.data_seed)
    return RunConfig(data=args.data, target=args.target, generator=generator, mode=args.mode,
                     n_trials=args.trials, model=ModelSpec(args.model, args.k),
                     split=SplitSpec(args.train_fraction, args.split_seed), seed=args.seed,
                     baselines=baselines, tau=args.tau)


def cmd_generate(args: argparse.Namespace) -> int:
    spec = GeneratorSpec(args.kind, args.samples, args.distractors, args.noise, args.seed)
    try:
        dataset = spec.build()
    except ArgumentError as exc:
        raise UsageError(str(exc)) from exc
    out = Path(args.out)
    path = write_csv(dataset, out / f"{args.name or args.kind}.csv")
    print(path)
    return 0


def _execute(args: argparse.Namespace, config: RunConfig) -> int:
    started = time.perf_counter()
    dataset = config.load_dataset()
    if dataset.n_features > MAX_FEATURES:
        raise CapacityError(f"{dataset.n_features} features exceeds the {MAX_FEATURES}-feature limit")
    result = run(config, dataset)
    report = write_artifacts(result, args.out, figures=not args.no_figures)
    if args.command == "compare":
        rows = comparison_rows(result)
        with (Path(args.out) / "comparison.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            cols = ["a", "b", "l_score", "dominance", "pearson", "mutual_information",
                    "shapley_interaction"]
            w.writerow(cols)
            for row in rows:
                w.writerow(["" if row[k] is None else (row[k] if isinstance(row[k], str) else repr(row[k]))
                            for k in cols])
    log.info("%s: %d trials, %d model fits, %.2fs", args.command, len(result.trials),
             result.cache.misses, time.perf_counter() - started)
    print(report)
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    baselines = [b.strip() for b in args.baselines.split(",") if b.strip()]
    try:
        config = _config(args, baselines)
    except ArgumentError as exc:
        raise UsageError(str(exc)) from exc
    return _execute(args, config)


def cmd_compare(args: argparse.Namespace) -> int:
    baselines = ["pearson", "mutual_information"] + ([] if args.no_shapley else ["shapley"])
    try:
        config = _config(args, baselines)
    except ArgumentError as exc:
        raise UsageError(str(exc)) from exc
    if args.config and not args.no_shapley:
        config.baselines = sorted(set(config.baselines) | set(baselines))
    try:
        return _execute(args, config)
    except CapacityError as exc:
        raise CapacityError(f"{exc}; rerun with --no-shapley") from exc


COMMANDS = {"generate": cmd_generate, "analyze": cmd_analyze, "compare": cmd_compare}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ordex {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (OrdexError, OSError) as exc:
        print(f"ordex {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
