"""
svperturb report: rebuild the summary report from a records file
"""
import argparse
from pathlib import Path

from src.models.enums import ExitCode
from src.services.service_container import get_experiment_service


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("report", help="Summarize an existing records CSV")
    parser.add_argument("--records", required=True, type=Path, help="Records CSV written by simulate")
    parser.add_argument("--out", required=True, type=Path, help="Summary JSON path")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> ExitCode:
    get_experiment_service().report_from_records(args.records, args.out)
    return ExitCode.SUCCESS
