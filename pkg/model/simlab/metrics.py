"""
Trial metrics: coverage proportion and median width of one prediction rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from model.core.errors import IndexMismatchError


@dataclass(frozen=True)
class TrialMetrics:
    """
    Attributes:
        coverage (float): Fraction of missing outcomes inside their set; 1 when
            nothing is missing.
        median_width (float): Median set width over missing indices (NaN when
            nothing is missing, +inf when at least half the sets are unbounded).
        infinite_width_count (int): Number of unbounded sets.
        n_missing (int): N^(0).
        bin_coverage (dict[int, float]): Coverage per propensity bin with a
            missing outcome, when bins were supplied.
    """

    coverage: float
    median_width: float
    infinite_width_count: int
    n_missing: int
    bin_coverage: dict = field(default_factory=dict)

    @property
    def squared_miscoverage(self):
        """float: (1 - coverage)^2."""
        return (1.0 - self.coverage) ** 2


def threshold_widths(thresholds):
    """Width of {y : |y - mu| <= t}: 2t for t >= 0, 0 for t < 0, +inf for t = +inf."""
    thresholds = np.asarray(thresholds, dtype=float)
    return np.where(thresholds < 0, 0.0, 2.0 * thresholds)


def evaluate(rule, data, score_model, bins=None):
    """
    Scores one rule against the hidden outcomes.

    Args:
        rule (PredictionRule): Thresholds keyed by the missing indices.
        data (SimulatedData): Observable dataset plus full outcomes.
        score_model (ScoreModel): The score the thresholds refer to.
        bins (np.ndarray | None): Optional bin id per row for per-bin coverage.

    Returns:
        TrialMetrics: Coverage proportion, median width and counts.

    Raises:
        IndexMismatchError: When the rule does not cover exactly the missing indices.
    """
    dataset = data.dataset
    missing = dataset.missing_indices
    if not np.array_equal(rule.indices, missing):
        raise IndexMismatchError(
            f"rule covers {len(rule)} indices but the dataset has {missing.size} missing outcomes"
        )
    if missing.size == 0:
        return TrialMetrics(1.0, math.nan, 0, 0)
    thresholds = rule.values
    truth = score_model.truth_scores(dataset, data.full_outcomes, missing)
    covered = truth <= thresholds
    widths = threshold_widths(thresholds)
    bin_coverage = {}
    if bins is not None:
        labels = np.asarray(bins)[missing]
        for k in np.unique(labels):
            bin_coverage[int(k)] = float(covered[labels == k].mean())
    return TrialMetrics(
        coverage=float(covered.mean()),
        median_width=float(np.median(widths)),
        infinite_width_count=int(np.isinf(widths).sum()),
        n_missing=int(missing.size),
        bin_coverage=bin_coverage,
    )
