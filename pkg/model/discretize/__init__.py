"""Propensity-score discretization into bins and per-bin counts."""
