"""
This module contains the PredictCommand class, which builds prediction sets for
the missing outcomes of a CSV file.
"""

from commands.cli_command import CliCommand


class PredictCommand(CliCommand):
    """Runs RunController.predict()."""

    name = "predict"

    def execute(self):
        return self.controller.predict()
