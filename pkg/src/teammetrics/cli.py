"""Command-line entry point.

Subcommands mirror the pipeline stages (``filter`` through ``report``),
plus ``all`` to run everything and ``synth`` to generate synthetic data.
Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import DataError
from .pipeline import STAGES, load_pipeline_config, run_all, run_stage
from .synthkit import (
    build_mini_corpus,
    gen_simpson_dataset,
    gen_synthetic_repo,
    load_plan,
    load_simpson_spec,
    write_simpson_csv,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; this tool reserves 2 for data
    # errors, so remap
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> _Parser:
    parser = _Parser(prog="teammetrics",
                     description="Repository mining and team-productivity analytics.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_stage(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="pipeline config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--jobs", type=int, default=None, help="parallel workers")
        p.add_argument("--force", action="store_true",
                       help="rebuild even if existing artifacts used a different config")
        return p

    add_stage("filter", "apply catalog filters")
    add_stage("sample", "stratified sampling of the filtered catalog")
    add_stage("mine", "extract edit events and code metrics per project")
    add_stage("window", "segment histories into windows and aggregate productivity")
    add_stage("network", "build co-editing networks and their measures")
    add_stage("stats", "correlations and the regression battery")
    add_stage("report", "render tables and derived effects")
    add_stage("all", "run every stage in order")

    synth = sub.add_parser("synth", help="generate synthetic data")
    synth_sub = synth.add_subparsers(dest="synth_command", required=True)
    repo = synth_sub.add_parser("repo", help="one synthetic repository dump")
    repo.add_argument("--plan", required=True, help="plan key-value file")
    repo.add_argument("--out", required=True, help="output directory")
    simpson = synth_sub.add_parser("simpson", help="Simpson's-paradox observation table")
    simpson.add_argument("--spec", required=True, help="dataset spec key-value file")
    simpson.add_argument("--out", required=True, help="output CSV path")
    corpus = synth_sub.add_parser("corpus", help="the shipped synthetic mini corpus")
    corpus.add_argument("--out", required=True, help="output directory")
    corpus.add_argument("--seed", type=int, default=20210)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "synth":
            return _run_synth(args)
        cfg = load_pipeline_config(args.config, seed=args.seed, jobs=args.jobs)
        if args.command == "all":
            for stage_dir in run_all(cfg, force=args.force):
                print(f"{stage_dir.name}: ok ({stage_dir})")
        else:
            stage_dir = run_stage(args.command, cfg, force=args.force)
            print(f"{args.command}: ok ({stage_dir})")
        return EXIT_OK
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # internal bug, distinct exit code
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


def _run_synth(args) -> int:
    if args.synth_command == "repo":
        plan = load_plan(args.plan)
        dump, truth = gen_synthetic_repo(plan, args.out)
        print(f"wrote {dump}")
        print(f"wrote {truth}")
    elif args.synth_command == "simpson":
        spec = load_simpson_spec(args.spec)
        table = gen_simpson_dataset(**spec)
        write_simpson_csv(args.out, table)
        print(f"wrote {args.out} ({len(table['ts'])} rows)")
    else:
        catalog, dumps = build_mini_corpus(Path(args.out), seed=args.seed)
        print(f"wrote {catalog}")
        print(f"wrote dumps under {dumps}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
