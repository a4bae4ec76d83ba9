"""
This module contains the SimulateCommand class, which runs a Monte-Carlo study on
a simulated setting and writes the summary and histogram files.
"""

from commands.cli_command import CliCommand


class SimulateCommand(CliCommand):
    """Runs RunController.simulate()."""

    name = "simulate"

    def execute(self):
        return self.controller.simulate()
