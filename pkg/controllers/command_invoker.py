"""
This module provides the CommandInvoker class, the invoker of the Command Pattern
for subcommands.

Classes:
    CommandInvoker: Executes command objects and keeps a history of the results.

Key Features:
    - Executes command objects through their execute() method.
    - Keeps every executed command with its result for later inspection.
"""


class CommandInvoker:
    """
    A class responsible for invoking commands and maintaining a history of executed commands.

    Attributes:
        history (list): (command, result) pairs in execution order.

    Methods:
        execute_command(command): Executes a command and stores it in the history.
    """

    def __init__(self):
        self.history = []

    def execute_command(self, command):
        """
        Executes the given command and appends it to the command history.

        Args:
            command (CliCommand): The command object to be executed.

        Returns:
            The result of the executed command.
        """
        result = command.execute()
        self.history.append((command, result))
        return result
