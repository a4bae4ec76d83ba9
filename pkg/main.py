"""
Missing-Outcome Conformal Prediction

Command-line front-end with three subcommands:

    predict   build prediction sets for the missing outcomes of a CSV file
    simulate  run a Monte-Carlo study on a simulated setting
    diagnose  compare two propensity sources and report the implied slack

Settings come from dataclass defaults, then an optional --config file, then the
flags. Errors of the library are printed in bold red and end the process with
exit status 1.
"""

import argparse
import sys

from rich.console import Console

from commands.command_factory import create_command
from controllers.command_invoker import CommandInvoker
from controllers.run_config import PROPENSITY_SOURCES, SETTINGS, load_run_config
from controllers.run_controller import RunController
from model.conformal.method_factory import MethodFactory
from model.core.errors import ProcpError
from views.report_view import ReportView

# Constants
BOLD_RED = "bold red"
BOLD_BLUE = "bold blue"

console = Console()


def _common_options():
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--method", choices=MethodFactory.method_names())
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--epsilon", type=float)
    parser.add_argument("--delta", type=float)
    parser.add_argument("--block-size", type=int, help="partition block size, 0 disables")
    parser.add_argument("--shuffle-partition", action="store_true", default=None)
    parser.add_argument("--propensity", choices=PROPENSITY_SOURCES)
    parser.add_argument("--clamp", type=float, help="propensity clamp eta")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--budget", type=int, help="mar-pac-small placement budget")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--quiet", action="store_true", default=None, help="hide progress events")
    return parser


def _csv_options(parser):
    parser.add_argument("input", nargs="?", help="input CSV file")
    parser.add_argument("--categorical", help="comma-separated categorical feature columns")
    parser.add_argument("--score-column", help="column holding precomputed scores")


def build_parser():
    """
    Builds the argument parser with its three subcommands.

    Returns:
        argparse.ArgumentParser: The parser.
    """
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog="procp", description="Prediction sets for outcomes missing at random."
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    predict = subparsers.add_parser("predict", parents=[common], help="prediction sets for a CSV")
    _csv_options(predict)
    predict.add_argument("--split-ratio", type=float, help="fraction of rows used for fitting")
    predict.add_argument("--save-models", help="directory receiving models.ini")
    predict.add_argument("--load-models", help="directory holding a models.ini to reuse")

    simulate = subparsers.add_parser("simulate", parents=[common], help="Monte-Carlo study")
    simulate.add_argument("--setting", choices=list(SETTINGS))
    simulate.add_argument("--trials", type=int)
    simulate.add_argument("--n", type=int, help="calibration rows per trial")
    simulate.add_argument("--n-train", type=int, help="training rows")
    simulate.add_argument("--alpha-grid", help="comma-separated alphas for a frontier sweep")
    simulate.add_argument("--conditional", help="N_OUTER,N_INNER of a conditional study")
    simulate.add_argument("--outcome-only", action="store_true", default=None)

    diagnose = subparsers.add_parser("diagnose", parents=[common], help="odds-ratio diagnostic")
    _csv_options(diagnose)
    diagnose.add_argument("--truth", choices=("column", "known-formula"))
    diagnose.add_argument("--setting", choices=list(SETTINGS))
    return parser


def config_from_args(args):
    """
    Merges the config file and the flags of parsed arguments.

    Returns:
        RunConfig: The validated configuration.
    """
    overrides = {
        key: value for key, value in vars(args).items() if key not in ("command", "config")
    }
    return load_run_config(args.config, overrides)


def run(argv=None, view=None):
    """
    Parses argv and runs one subcommand.

    Args:
        argv (list[str] | None): Arguments without the program name.
        view (ReportView | None): Console presentation.

    Returns:
        int: Exit status, 0 on success and 1 on a library error.
    """
    args = build_parser().parse_args(argv)
    view = view if view is not None else ReportView(console)
    controller = None
    try:
        config = config_from_args(args)
        controller = RunController(config, view=view)
        invoker = CommandInvoker()
        result = invoker.execute_command(create_command(args.command, controller))
        view.show_message(str(result), style=BOLD_BLUE)
    except ProcpError as error:
        view.show_message(f"Error: {error}", style=BOLD_RED)
        return 1
    finally:
        if controller is not None:
            controller.close()
    return 0


def main():
    """Entry point: runs the subcommand given on the command line."""
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
