"""Command-line entry point.

Subcommands mirror the pipeline stages; run-all chains everything and
writes the digest manifest. Exit codes: 0 success, 2 config error,
3 input error, 4 stage failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import PipelineConfig, load_config, validate_config
from .errors import ConfigError, InputError, StageError, TourforgeError
from .pipeline import run_layout_probe, run_pipeline, run_stage, run_tj_training

_STAGE_COMMANDS = {
    "ingest": "ingest",
    "build-trajectories": "trajectories",
    "gen-instructions": "instructions",
    "make-samples": "samples",
    "split": "split",
    "stats": "stats",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config file")
    common.add_argument("--seed", type=int, metavar="INT", help="override the global seed")
    common.add_argument("--out", metavar="DIR", help="override the output directory")
    common.add_argument("--strict", action="store_true", help="reject unknown annotation fields")

    parser = argparse.ArgumentParser(
        prog="tourforge",
        description="Build path-instruction datasets from annotated house-tour videos.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ingest", parents=[common], help="parse, sample, and filter annotations")
    sub.add_parser("build-trajectories", parents=[common], help="emit trajectories.jsonl")
    sub.add_parser("gen-instructions", parents=[common], help="emit pairs.jsonl")
    sub.add_parser("make-samples", parents=[common], help="emit judgment/mlm/ranking samples")
    sub.add_parser("split", parents=[common], help="emit the video-level train/test split")
    sub.add_parser("train-tj", parents=[common], help="train the judgment model on the split")
    sub.add_parser("probe-layout", parents=[common], help="run the synthetic layout probe")
    sub.add_parser("stats", parents=[common], help="compute statistics over emitted artifacts")
    sub.add_parser("run-all", parents=[common], help="run every stage and write the manifest")
    return parser


def _resolve_config(args: argparse.Namespace) -> PipelineConfig:
    if args.config:
        config = load_config(args.config)
    else:
        config = PipelineConfig()
        validate_config(config)
    if args.seed is not None:
        config.seed = args.seed
    if args.out is not None:
        from pathlib import Path

        config.out_dir = Path(args.out)
    if args.strict:
        config.strict = True
    return config


def _exit_code(exc: TourforgeError) -> int:
    if isinstance(exc, ConfigError):
        return 2
    if isinstance(exc, InputError):
        return 3
    if isinstance(exc, StageError):
        cause = exc.__cause__
        if isinstance(cause, (InputError, FileNotFoundError)):
            return 3
        return 4
    return 4


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _resolve_config(args)
        if args.command in _STAGE_COMMANDS:
            run_stage(config, _STAGE_COMMANDS[args.command])
            print(f"{args.command}: artifacts written to {config.out_dir}")
        elif args.command == "train-tj":
            metrics = run_tj_training(config)
            print(json.dumps(metrics, sort_keys=True))
        elif args.command == "probe-layout":
            report = run_layout_probe(config)
            print(json.dumps(report, sort_keys=True))
        elif args.command == "run-all":
            manifest = run_pipeline(config)
            print(f"run-all: manifest at {manifest}")
        return 0
    except TourforgeError as exc:
        print(f"tourforge: error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    except OSError as exc:
        print(f"tourforge: error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
