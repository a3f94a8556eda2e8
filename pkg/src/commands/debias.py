"""
svperturb debias: two-sample debiased singular vectors from two observed matrices

The debiased dilation vector (u^, v^) is written as an (m+n) x 1 matrix CSV;
the bias estimate is printed to stdout as JSON.
"""
import argparse
import json
from pathlib import Path

from src.models.enums import ExitCode
from src.services.estimator import debias_observations
from src.services.service_container import get_artifact_store


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("debias", help="Debias a singular vector pair from two observations")
    parser.add_argument("--matrix-a", required=True, type=Path, help="First observation CSV")
    parser.add_argument("--matrix-b", required=True, type=Path, help="Second, independent observation CSV")
    parser.add_argument("--k", required=True, type=int, help="1-based singular value index")
    parser.add_argument("--gamma", required=True, type=float, help="Floor parameter in (0, 1)")
    parser.add_argument("--out", required=True, type=Path, help="Output CSV for the debiased vector")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> ExitCode:
    store = get_artifact_store()
    theta_hat, estimate = debias_observations(
        store.load_matrix(args.matrix_a), store.load_matrix(args.matrix_b), args.k, args.gamma
    )
    store.save_matrix(args.out, theta_hat.reshape(-1, 1))
    print(json.dumps(estimate.to_dict(), indent=2))
    return ExitCode.SUCCESS
