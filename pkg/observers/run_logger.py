"""
This module provides the RunLogger class, an observer that renders the
informational events of a run.

Classes:
    RunLogger: Prints info-level RunEvents in a dim style on stderr.

Usage:
    The RunController attaches a RunLogger to the EventHub at construction, so
    progress messages published by library code appear while a command runs.
    Warning-level events are left to the AlertSystem.
"""

from rich.console import Console

from model.backend.event_hub import Observer


class RunLogger(Observer):
    """
    A concrete observer logging progress events.

    Attributes:
        console (Console): Where events are printed; stderr by default so the
            standard output stays free for results.
        quiet (bool): When set, events are counted but not printed.
        logged (int): Number of info events received.

    Example:
        run_logger = RunLogger()
        run_logger.update(RunEvent("fit", "fitted the mean model"))
        # Output: [fit] fitted the mean model
    """

    def __init__(self, console=None, quiet=False):
        self.console = console if console is not None else Console(stderr=True)
        self.quiet = quiet
        self.logged = 0

    def update(self, event):
        """
        Prints an info event; warnings are ignored.

        Args:
            event (RunEvent): The published event.
        """
        if event.is_warning:
            return
        self.logged += 1
        if not self.quiet:
            self.console.print(f"[{event.kind}] {event.message}", style="dim", markup=False)
