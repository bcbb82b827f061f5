import argparse
import json
import sys
from dotenv import load_dotenv, find_dotenv
from app.services.run_batch import run_batch
from app.services.run_eigen_relation import run_eigen_relation
from app.services.run_single import run_single
from app.services.run_straight_search import run_straight_search
from landscape.src.config import DEFAULTS, ExperimentConfig
from landscape.src.errors import LandscapeError
from landscape.src.system import build_preset, list_presets, preset_info
from landscape.src.utils import configure_logging, get_logger

logger = get_logger("app.main")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="landscape",
        description="Gradient-flow exploration of quantum control landscapes",
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    def experiment(name: str, summary: str) -> argparse.ArgumentParser:
        command = commands.add_parser(name, help=summary)
        command.add_argument("--config", required=True, help="experiment directory or config.json")
        command.add_argument("--out", default=None, help="output directory")
        command.add_argument("--workers", type=int, default=None, help="worker processes")
        return command

    batch = experiment("batch", "seeded batch of landscape climbs")
    batch.add_argument("--seed", type=int, default=None, help="master seed")

    single = experiment("single", "one climb with per-step recording")
    single.add_argument("--seed", type=int, required=True, help="run seed")
    single.add_argument("--run-id", type=int, default=0)

    eigen = experiment("eigen", "Hessian-gradient eigen-relation scan")
    source = eigen.add_mutually_exclusive_group(required=True)
    source.add_argument("--seed", type=int, help="seed of the random initial field")
    source.add_argument("--field", help="CSV file with the initial field (t, E)")

    search = experiment("search", "evolution-strategy search for a straight trajectory")
    search.add_argument("--seed", type=int, default=None)
    search.add_argument("--budget", type=int, default=None, help="number of flows")

    commands.add_parser("presets", help="list the built-in systems")

    validate = commands.add_parser("validate-config", help="check a configuration")
    validate.add_argument("--config", default=None)
    validate.add_argument("--print-defaults", action="store_true")

    return parser


def print_presets():
    for tag in list_presets():
        system, objective = build_preset(tag)
        info = preset_info(tag)
        kind = type(objective).__name__
        print(f"{tag:<20} N = {system.n_levels}  M = {info.field_components}  T = {info.horizon}  {kind}")


def validate_config(args) -> int:
    if args.print_defaults:
        print(json.dumps(DEFAULTS, indent=2))
        if args.config is None:
            return 0
    if args.config is None:
        raise LandscapeError("ERROR: validate-config needs --config or --print-defaults")

    config = ExperimentConfig(args.config)
    system, objective = config.load_system()
    logger.info(f"✅ {config.printable_version()}: N = {system.n_levels}, objective {type(objective).__name__}")
    print(json.dumps(config.echo(), indent=2))
    return 0


def main(argv: list[str] | None = None) -> int:
    load_dotenv(find_dotenv(usecwd=True))
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)

    try:
        if args.command == "presets":
            print_presets()
            return 0
        if args.command == "validate-config":
            return validate_config(args)

        config = ExperimentConfig(args.config)
        config.override(
            workers=args.workers,
            output_directory=args.out,
            master_seed=args.seed if args.command == "batch" else None,
        )

        if args.command == "batch":
            run_batch(config)
        elif args.command == "single":
            run_single(config, args.seed, args.run_id)
        elif args.command == "eigen":
            run_eigen_relation(config, seed=args.seed, field_file=args.field)
        elif args.command == "search":
            run_straight_search(config, budget=args.budget, seed=args.seed)
        return 0

    except LandscapeError as error:
        logger.error(f"❌ {error}")
        return 1
    except Exception as error:
        logger.exception(f"❌ Unexpected error: {error}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
