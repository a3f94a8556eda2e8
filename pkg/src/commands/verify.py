"""
svperturb verify: run acceptance suites and render their checks
"""
import argparse
from pathlib import Path
from typing import List

from rich.console import Console
from rich.table import Table

from src.models.data_models import SuiteResult
from src.models.enums import AcceptanceSuite, ExitCode
from src.services.service_container import get_acceptance_service, get_artifact_store

console = Console()


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("verify", help="Run acceptance suites")
    parser.add_argument(
        "--suite", required=True, choices=[s.value for s in AcceptanceSuite], help="Suite to run"
    )
    parser.add_argument("--config", required=True, type=Path, help="Experiment config (JSON or YAML)")
    parser.add_argument("--out", type=Path, default=None, help="Optional JSON report path")
    parser.add_argument("--threads", type=int, default=None, help="Worker threads (SVPERTURB_THREADS wins)")
    parser.set_defaults(handler=run)


def render(results: List[SuiteResult]) -> Table:
    table = Table(title="svperturb verify")
    table.add_column("Suite")
    table.add_column("Check")
    table.add_column("Observed", justify="right")
    table.add_column("Limit", justify="right")
    table.add_column("Result")
    for result in results:
        for check in result.checks:
            table.add_row(
                result.suite,
                check.name,
                f"{check.observed:.4g}",
                f"{check.limit:.4g}",
                "[green]pass[/green]" if check.passed else "[red]FAIL[/red]",
            )
    return table


def run(args: argparse.Namespace) -> ExitCode:
    store = get_artifact_store()
    config = store.load_experiment_config(args.config)
    results = get_acceptance_service().run(AcceptanceSuite(args.suite), config)
    passed = all(result.passed for result in results)

    console.print(render(results))
    if args.out is not None:
        store.write_json(args.out, {"suites": [r.to_dict() for r in results], "passed": passed})
    return ExitCode.SUCCESS if passed else ExitCode.ACCEPTANCE_FAILURE
