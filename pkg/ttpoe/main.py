"""
Command-line entry point

    ttpoe build-model --world pngrid [--model models/pngrid.tt]
    ttpoe run --world pngrid --method mppi,tt_poe_mppi --samples 16,64 --trials 100 --seed 0 --out results/pngrid
    ttpoe report --out results/pngrid

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import ValidationError

from ttpoe.core.config import settings
from ttpoe.core.exceptions import ConfigurationError, TTPoEError
from ttpoe.schemas.controller import Method
from ttpoe.schemas.experiment import ExperimentConfig
from ttpoe.services import model_builder
from ttpoe.services.harness import run_experiment
from ttpoe.services.outputs import emit_outputs, emit_reports, read_trials_csv
from ttpoe.tensor import tt_io
from ttpoe.utils.validation import validate_controller_overrides, validate_world_config
from ttpoe.worlds.registry import create_world, load_world_config

logger = logging.getLogger("ttpoe")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class UsageError(Exception):
    """Bad command-line arguments"""


class ArgumentParser(argparse.ArgumentParser):
    """argparse that reports usage errors with exit code 1"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _methods(value: str) -> List[Method]:
    try:
        return [Method(v.strip()) for v in value.split(",") if v.strip()]
    except ValueError:
        choices = ", ".join(m.value for m in Method)
        raise argparse.ArgumentTypeError(f"invalid method list {value!r} (choose from {choices})")


def _samples(value: str) -> List[int]:
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid sample counts {value!r}")


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="ttpoe", description="TT product-of-experts MPPI benchmarks")
    parser.add_argument("--log-level", default=None, help=f"Logging level (default {settings.LOG_LEVEL})")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    build = commands.add_parser("build-model", help="Learn and save the feasibility model of a world")
    build.add_argument("--world", required=True, help="World id or path to a world JSON file")
    build.add_argument("--model", help="Output .tt path (default MODEL_DIR/<world>.tt)")
    build.add_argument("--text", action="store_true", help="Also write the plain-text model variant")

    run = commands.add_parser("run", help="Run paired trials and write result files")
    run.add_argument("--config", help="Experiment JSON file; flags below override its values")
    run.add_argument("--world", help="World id or path to a world JSON file")
    run.add_argument("--method", type=_methods, help="Comma-separated methods")
    run.add_argument("--samples", type=_samples, help="Comma-separated sample counts")
    run.add_argument("--trials", type=int, help="Trials per (method, samples) cell")
    run.add_argument("--seed", type=int, help="Master seed")
    run.add_argument("--out", help="Output directory")
    run.add_argument("--model", help="Feasibility model file for tt_poe_mppi")
    run.add_argument("--workers", type=int, help="Worker processes (1 = serial)")

    report = commands.add_parser("report", help="Regenerate summaries and plots from trials.csv")
    report.add_argument("--out", required=True, help="Directory holding trials.csv")
    return parser


def experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    """Experiment from the optional config file with CLI flags applied on top"""
    values: Dict[str, Any] = {}
    if args.config:
        try:
            with open(args.config, "r") as f:
                values = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"{args.config} is not valid JSON: {e}") from e
    flags = {
        "world": args.world,
        "methods": args.method,
        "samples": args.samples,
        "trials": args.trials,
        "seed": args.seed,
        "out": args.out,
        "model": args.model,
        "workers": args.workers,
    }
    values.update({k: v for k, v in flags.items() if v is not None})
    values.setdefault("seed", settings.DEFAULT_MASTER_SEED)
    values.setdefault("out", settings.OUTPUT_DIR)
    values.setdefault("workers", settings.WORKERS)
    if "world" not in values:
        raise UsageError("a world is required (--world or the config file)")
    try:
        return ExperimentConfig.model_validate(values)
    except ValidationError as e:
        raise UsageError(str(e)) from e


def cmd_build_model(args: argparse.Namespace) -> int:
    config = load_world_config(args.world)
    is_valid, errors = validate_world_config(config)
    if not is_valid:
        raise ConfigurationError("; ".join(errors))
    dist, metadata = model_builder.build_feasibility_model(create_world(config))
    path = Path(args.model) if args.model else model_builder.default_model_path(config.id)
    metadata = model_builder.save_feasibility_model(dist, metadata, path)
    if args.text:
        tt_io.save_text(dist.model, path.with_suffix(".txt"))
    logger.info(f"Model {path}: ranks {metadata.ranks}, build {metadata.build_seconds:.3f}s, sha256 {metadata.sha256[:12]}")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    cfg = experiment_config(args)
    is_valid, errors = validate_controller_overrides(cfg.controller)
    if not is_valid:
        raise ConfigurationError("; ".join(errors))
    is_valid, errors = validate_world_config(load_world_config(cfg.world))
    if not is_valid:
        raise ConfigurationError("; ".join(errors))
    _, results = run_experiment(cfg)
    emit_outputs(results, cfg.out)
    print((Path(cfg.out) / "table.txt").read_text(), end="")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    trials = Path(args.out) / "trials.csv"
    if not trials.exists():
        raise ConfigurationError(f"{trials} not found")
    emit_reports(read_trials_csv(trials), args.out)
    print((Path(args.out) / "table.txt").read_text(), end="")
    return EXIT_OK


COMMANDS = {
    "build-model": cmd_build_model,
    "run": cmd_run,
    "report": cmd_report,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    level = (args.log_level or settings.LOG_LEVEL).upper()
    if not isinstance(logging.getLevelName(level), int):
        parser.error(f"unknown log level {level!r}")
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    logger.info("=" * 50)
    logger.info(f"{settings.PROJECT_NAME} v{settings.VERSION} - {args.command}")
    logger.info("=" * 50)

    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        logger.error(str(e))
        return EXIT_USAGE
    except (TTPoEError, OSError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
