"""
This module provides the AlertSystem class, an observer that renders warnings
published during a run and keeps a count per warning kind.

Classes:
    AlertSystem: Prints warning-level RunEvents and tallies them by kind.
"""

from collections import Counter

from rich.console import Console

from model.backend.event_hub import Observer


class AlertSystem(Observer):
    """
    A concrete observer that alerts on warning events.

    Warnings such as alpha-clamped, kernel-fallback or approximate-slack do not
    stop a run but change what its guarantee means, so each one is printed in
    bold yellow and counted. The counts end up in the run report.

    Attributes:
        console (Console): Output console, stderr by default.
        counts (Counter): Number of warnings received per kind.

    Example:
        alert_system = AlertSystem()
        alert_system.update(RunEvent("alpha-clamped", "alpha_l clamped to 1", WARNING))
        # Output: Warning (alpha-clamped): alpha_l clamped to 1
    """

    def __init__(self, console=None):
        self.console = console if console is not None else Console(stderr=True)
        self.counts = Counter()

    def update(self, event):
        """
        Prints a warning event and records its kind; info events are ignored.

        Args:
            event (RunEvent): The published event.
        """
        if not event.is_warning:
            return
        self.counts[event.kind] += 1
        self.console.print(
            f"Warning ({event.kind}): {event.message}", style="bold yellow", markup=False
        )

    def summary(self):
        """
        Returns the warning counts sorted by kind.

        Returns:
            dict[str, int]: Kind -> number of occurrences.
        """
        return dict(sorted(self.counts.items()))

    def reset(self):
        """Forgets all recorded warnings."""
        self.counts.clear()
