"""
This module contains the DiagnoseCommand class, which compares two propensity
sources and reports the implied slack of the propensity-based guarantees.
"""

from commands.cli_command import CliCommand


class DiagnoseCommand(CliCommand):
    """Runs RunController.diagnose()."""

    name = "diagnose"

    def execute(self):
        return self.controller.diagnose()
