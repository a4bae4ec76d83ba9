"""
This module defines the EventHub class, the single subject of the Observer pattern
through which library code reports progress and warnings. Library functions never
print; they publish RunEvent records, and whichever observers are attached decide
how to render them.

Classes:
    Observer: Abstract class for objects notified by the EventHub.
    RunEvent: Immutable record describing one event.
    EventHub: Singleton subject that fans events out to attached observers.

Functions:
    publish(kind, message, level, **data): Shorthand for publishing on the singleton.
    warn(kind, message, **data): Shorthand for a warning-level event.

Usage:
    Controllers attach a RunLogger and an AlertSystem at start-up. Tests and the
    simulation lab use EventHub.capture() to collect events without rendering them.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from dataclasses import dataclass, field
from types import MappingProxyType

INFO = "info"
WARNING = "warning"


class Observer:
    """
    An abstract class that serves as a template for observers of the EventHub.

    Methods:
        update(event): Abstract method reacting to a published RunEvent.
    """

    def update(self, event):
        """
        Abstract method to be overridden by subclasses to react to an event.

        Args:
            event (RunEvent): The event being published.
        """
        raise NotImplementedError("Subclass must implement abstract method")


@dataclass(frozen=True)
class RunEvent:
    """
    One event published by library code.

    Attributes:
        kind (str): Machine-readable tag, e.g. "alpha-clamped" or "kernel-fallback".
        message (str): Human-readable description.
        level (str): "info" or "warning".
        data (Mapping): Extra values attached to the event.
    """

    kind: str
    message: str
    level: str = INFO
    data: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))

    @property
    def is_warning(self):
        """bool: True for warning-level events."""
        return self.level == WARNING


class EventCollector(Observer):
    """Observer that stores every event it receives, in order."""

    def __init__(self):
        self.events = []

    def update(self, event):
        self.events.append(event)

    def kinds(self):
        """Returns the list of event kinds received."""
        return [event.kind for event in self.events]

    def warnings(self):
        """Returns the warning-level events received."""
        return [event for event in self.events if event.is_warning]


class EventHub:
    """
    A singleton subject notifying observers about run events.

    Attributes:
        _observers (list): Observers notified on every publish.

    Methods:
        get_instance(): Returns the singleton instance.
        reset_instance(): Drops the singleton (used by tests).
        attach(observer): Attaches an observer.
        detach(observer): Detaches an observer.
        notify(event): Sends an event to every observer.
        publish(kind, message, level, **data): Builds a RunEvent and notifies.
        capture(): Context manager routing events to a fresh collector.
    """

    _instance = None
    _lock = threading.Lock()

    def __init__(self):
        if EventHub._instance is not None:
            raise RuntimeError("Singleton class, use get_instance() method")
        self._observers = []
        self._local = threading.local()

    @staticmethod
    def get_instance():
        """
        Retrieves the singleton instance of the EventHub.

        Returns:
            EventHub: The singleton instance.
        """
        with EventHub._lock:
            if EventHub._instance is None:
                EventHub._instance = EventHub()
        return EventHub._instance

    @staticmethod
    def reset_instance():
        """Resets the singleton instance, primarily for tests."""
        EventHub._instance = None

    def attach(self, observer):
        """
        Attaches an observer to the hub.

        Args:
            observer (Observer): The observer to notify of future events.
        """
        if observer not in self._observers:
            self._observers.append(observer)

    def detach(self, observer):
        """
        Detaches an observer from the hub.

        Args:
            observer (Observer): The observer to remove.
        """
        self._observers.remove(observer)

    @property
    def observers(self):
        """list: The observers events are currently routed to on this thread."""
        stack = getattr(self._local, "captures", None)
        if stack:
            return [stack[-1]]
        return list(self._observers)

    def notify(self, event):
        """
        Sends an event to the active observers.

        While a capture is active on the calling thread, only the capturing
        collector receives the event.

        Args:
            event (RunEvent): The event to deliver.
        """
        for observer in self.observers:
            observer.update(event)

    def publish(self, kind, message, level=INFO, **data):
        """
        Builds a RunEvent from its parts and notifies the observers.

        Returns:
            RunEvent: The published event.
        """
        event = RunEvent(kind=kind, message=message, level=level, data=MappingProxyType(data))
        self.notify(event)
        return event

    @contextmanager
    def capture(self):
        """
        Routes events published on this thread to a new EventCollector.

        Yields:
            EventCollector: The collector receiving the events.
        """
        collector = EventCollector()
        stack = getattr(self._local, "captures", None)
        if stack is None:
            stack = self._local.captures = []
        stack.append(collector)
        try:
            yield collector
        finally:
            stack.pop()


def publish(kind, message, level=INFO, **data):
    """Publishes an event on the EventHub singleton."""
    return EventHub.get_instance().publish(kind, message, level, **data)


def warn(kind, message, **data):
    """Publishes a warning-level event on the EventHub singleton."""
    return EventHub.get_instance().publish(kind, message, WARNING, **data)
