"""
Test module for the CommandInvoker.

The invoker executes command objects and keeps a history of (command, result)
pairs. Mock commands stand in for the subcommands so no pipeline runs.
"""
from unittest.mock import create_autospec

from commands.cli_command import CliCommand
from controllers.command_invoker import CommandInvoker


def test_execute_command():
    """
    Test that the invoker executes a command and records it in history.
    """
    mock_command = create_autospec(CliCommand, instance=True)
    mock_command.execute.return_value = "predict: 2 file(s) written"
    invoker = CommandInvoker()

    result = invoker.execute_command(mock_command)

    mock_command.execute.assert_called_once()
    assert result == "predict: 2 file(s) written"
    assert invoker.history == [(mock_command, result)]

