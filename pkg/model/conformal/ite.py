"""
Prediction sets for individual treatment effects.

With A = 1 marking treated units, the missing outcomes are the treated
counterfactuals Y(1) of control units. Shifting each counterfactual interval by the
observed control outcome Y(0) gives a set for Y(1) - Y(0), and the simultaneous
coverage of the counterfactual sets carries over unchanged.
"""

from __future__ import annotations

import math

import numpy as np

from model.core.errors import MissingOutcomeError


def ite_sets(rule, score_model, cal, control_outcomes):
    """
    Shifts counterfactual prediction intervals by the observed control outcomes.

    Args:
        rule (PredictionRule): Thresholds for the missing Y(1) of cal.
        score_model (ResidualScore): The score the thresholds refer to.
        cal (MaskedDataset): Calibration rows (mask = treated).
        control_outcomes (np.ndarray): Y(0) aligned with cal, NaN where unknown.

    Returns:
        dict[int, Interval]: ITE interval per missing index.

    Raises:
        MissingOutcomeError: When Y(0) is unknown at a missing index.
        ScoreKindError: When the score sets are not intervals.
    """
    control_outcomes = np.asarray(control_outcomes, dtype=float)
    sets = {}
    for index, t in rule.thresholds.items():
        control = control_outcomes[index]
        if not math.isfinite(control):
            raise MissingOutcomeError(f"control outcome at index {index} is not available")
        interval = score_model.interval(cal.features[index], t)
        sets[index] = interval.shift(-control)
    return sets
