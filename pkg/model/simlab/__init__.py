"""Simulated data-generating processes, trial metrics and Monte-Carlo studies."""
