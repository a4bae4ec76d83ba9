"""
This module defines the CliCommand abstract base class, the interface shared by
the command objects behind each subcommand.

Classes:
    CliCommand: Abstract base class for subcommand objects.

Key Features:
    - One execute() method per command, called by the CommandInvoker.
    - Commands hold a RunController and delegate the actual pipeline to it.
"""

from abc import ABC, abstractmethod


class CliCommand(ABC):
    """
    An abstract base class representing a subcommand.

    Attributes:
        controller (RunController): The controller running the pipeline.
        name (str): Subcommand name.

    Methods:
        execute(): Runs the subcommand and returns its RunResult.
    """

    name = "abstract"

    def __init__(self, controller):
        self.controller = controller

    @abstractmethod
    def execute(self):
        """
        Abstract method to run the subcommand.

        Returns:
            RunResult: Rendered outputs and written paths.
        """
        raise NotImplementedError

    def __str__(self):
        return f"{self.name} ({self.controller.config.method})"
