"""
svperturb simulate: run a configured Monte Carlo experiment and write its artifacts
"""
import argparse
from pathlib import Path

from config.logging import get_logger
from src.models.enums import ExitCode
from src.services.service_container import get_artifact_store, get_experiment_service

logger = get_logger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("simulate", help="Run a Monte Carlo experiment")
    parser.add_argument("--config", required=True, type=Path, help="Experiment config (JSON or YAML)")
    parser.add_argument("--out-dir", required=True, type=Path, help="Directory for records and reports")
    parser.add_argument("--threads", type=int, default=None, help="Worker threads (SVPERTURB_THREADS wins)")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> ExitCode:
    config = get_artifact_store().load_experiment_config(args.config)
    paths = get_experiment_service().simulate(config, args.out_dir)
    logger.info("Simulation complete", outputs={name: str(path) for name, path in paths.items()})
    return ExitCode.SUCCESS
