"""Propensity models (known, per-row, logistic, kernel) and the odds-ratio diagnostic."""
