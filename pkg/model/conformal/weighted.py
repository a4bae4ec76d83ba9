"""
Weighted split conformal prediction under covariate shift between observed and
missing rows, with odds weights w(x) = p(x) / (1 - p(x)).

For a missing index i the threshold is the (1 - alpha)-quantile of the observed
scores weighted by w(X_j), plus w(X_i) at +inf, normalized per test point.
"""

from __future__ import annotations

import math

import numpy as np

from model.core.distribution import QUANTILE_TOLERANCE
from model.core.errors import DimensionMismatchError
from model.core.levels import GuaranteeReport, GuaranteeType, check_alpha
from model.core.prediction_rule import PredictionRule
from model.conformal.split import check_scores, vacuous_rule

QUERY_CHUNK = 1024


def odds_weights(propensities):
    """w = p / (1 - p)."""
    propensities = np.asarray(propensities, dtype=float)
    return propensities / (1.0 - propensities)


def weighted_split_conformal(cal, scores, propensity, alpha, score_id="score"):
    """
    Per-index weighted split conformal thresholds.

    Args:
        cal (MaskedDataset): Calibration rows.
        scores (np.ndarray): Scores aligned with cal.
        propensity (PropensityModel | np.ndarray): Model evaluated on cal, or the
            propensities of the calibration rows.
        alpha (float): Miscoverage level.

    Returns:
        PredictionRule: One threshold per missing index, with a marginal-coverage report.
    """
    alpha = check_alpha(alpha)
    scores = check_scores(cal, scores)
    if cal.n_missing == 0:
        return vacuous_rule("weighted", GuaranteeType.MARGINAL_COVERAGE, alpha, score_id)
    if hasattr(propensity, "for_dataset"):
        propensities = propensity.for_dataset(cal)
    else:
        propensities = np.asarray(propensity, dtype=float).ravel()
    if propensities.size != cal.n:
        raise DimensionMismatchError(
            f"{propensities.size} propensities for {cal.n} calibration rows"
        )
    weights = odds_weights(propensities)

    observed = cal.observed_indices
    order = np.argsort(scores[observed], kind="stable")
    sorted_scores = scores[observed][order]
    cumulative = np.cumsum(weights[observed][order])
    total_observed = cumulative[-1] if cumulative.size else 0.0
    level = 1.0 - alpha

    missing = cal.missing_indices
    thresholds = np.empty(missing.size)
    for start in range(0, missing.size, QUERY_CHUNK):
        test_weights = weights[missing[start:start + QUERY_CHUNK]]
        totals = total_observed + test_weights
        cdf = cumulative[None, :] / totals[:, None]
        position = (cdf < level - QUANTILE_TOLERANCE).sum(axis=1)
        chunk = np.full(test_weights.size, math.inf)
        inside = position < sorted_scores.size
        chunk[inside] = sorted_scores[position[inside]]
        thresholds[start:start + test_weights.size] = chunk

    report = GuaranteeReport("weighted", GuaranteeType.MARGINAL_COVERAGE, alpha)
    return PredictionRule.from_thresholds(
        dict(zip(missing.tolist(), thresholds.tolist())), score_id=score_id, report=report
    )
