""" Command-line entry point: python -m sublaplace.cli.main {wasserstein,coverage,theory,bandit} --config PATH """

import argparse
import logging
import os
import sys
from dotenv import load_dotenv

from .config import (
    EXIT_CONFIG_ERROR,
    EXIT_NUMERIC_FAILURE,
    ConfigError,
    Experiment,
    load_config,
)
from .experiments import COMMANDS
from .handler import ExperimentHandler
from ..bandit.agent import AgentFault
from ..data.io import IngestionError
from ..net.train import DivergenceError
from ..select.selection import SelectionError
from ..utils.linalg import NumericError
from ..utils.logger import set_up_logger

DEFAULT_OUTPUT_DIR = "results"


def parse_seeds(value: str) -> list[int]:
    try:
        seeds = [int(s) for s in value.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be a comma separated list of integers, got {value!r}")
    if not seeds:
        raise argparse.ArgumentTypeError("at least one seed is needed")
    return seeds


def positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value!r}")
    return number


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sublaplace",
        description="Runs sub-network Laplace experiments from a JSON configuration and writes CSV/JSON result shards",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub = subparsers.add_parser(name, help=f"run the {name} experiment")
        sub.add_argument("-c", "--config", help="Path to the JSON experiment configuration", required=True, type=str)
        sub.add_argument("-s", "--seeds", help="Comma separated seeds overriding the configured ones", type=parse_seeds)
        sub.add_argument("-o", "--out", help="Output directory overriding the configured one", type=str)
        sub.add_argument(
            "-j",
            "--jobs",
            help="Number of worker threads",
            type=positive_int,
            default=positive_int(os.getenv("SUBLAPLACE_JOBS", "1")),
        )
        sub.add_argument(
            "--log-level",
            help="Logging level",
            choices=["DEBUG", "INFO", "WARNING", "ERROR"],
            default=os.getenv("SUBLAPLACE_LOG_LEVEL", "INFO").upper(),
        )
    return parser


def main(argv: list[str] | None = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    set_up_logger(filename=os.getenv("SUBLAPLACE_LOG_FILE"), level=getattr(logging, args.log_level))

    try:
        cfg = load_config(args.config, Experiment[args.command.upper()], args.seeds, args.out)
        output_dir = cfg.output_dir or os.getenv("SUBLAPLACE_OUTPUT_DIR", DEFAULT_OUTPUT_DIR)
        handler = ExperimentHandler(cfg, output_dir, args.jobs)
        logging.info(f"{args.command} experiment with config hash {cfg.hash}, seeds {list(cfg.seeds)}")
        return COMMANDS[args.command](cfg, handler)
    except (ConfigError, IngestionError, SelectionError) as e:
        logging.error(f"configuration error: {e}")
        return EXIT_CONFIG_ERROR
    except (NumericError, DivergenceError, AgentFault) as e:
        logging.error(f"numeric failure: {e}")
        return EXIT_NUMERIC_FAILURE


if __name__ == "__main__":
    sys.exit(main())
