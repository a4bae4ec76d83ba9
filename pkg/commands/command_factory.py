"""
This module maps subcommand names to command classes.
"""

from commands.diagnose_command import DiagnoseCommand
from commands.predict_command import PredictCommand
from commands.simulate_command import SimulateCommand

COMMANDS = {
    command.name: command for command in (PredictCommand, SimulateCommand, DiagnoseCommand)
}


def create_command(name, controller):
    """
    Creates the command object for a subcommand.

    Raises:
        ValueError: If the subcommand is unknown.
    """
    try:
        return COMMANDS[name](controller)
    except KeyError:
        raise ValueError(f"Unknown command: {name}") from None
