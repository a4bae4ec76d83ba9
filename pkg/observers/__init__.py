"""Observers of the EventHub that render run events on the console."""
