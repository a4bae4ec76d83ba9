"""
Mean-coverage constructors: per-feature split conformal, the simultaneous set for
discrete features, pro-CP on propensity bins, and the partitioned wrapper.

All constructors take the calibration dataset, the scores (S_i on observed rows,
NaN on missing rows) and the bins, and return a PredictionRule keyed by the
positions of the missing rows in the calibration dataset.
"""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from model.backend.event_hub import warn
from model.core.distribution import WeightedDiscreteDist, weighted_quantile
from model.core.errors import DimensionMismatchError
from model.core.levels import GuaranteeReport, GuaranteeType, check_alpha
from model.core.prediction_rule import PredictionRule
from model.discretize.bins import BinAssignment, BinStats, bin_stats


def check_scores(cal, scores):
    """Validates score alignment; returns the scores as a float array."""
    scores = np.asarray(scores, dtype=float).ravel()
    if scores.size != cal.n:
        raise DimensionMismatchError(
            f"calibration set has {cal.n} rows but {scores.size} scores were given"
        )
    return scores


def as_stats(bins, mask):
    """Accepts a BinAssignment or BinStats and returns BinStats for the mask."""
    if isinstance(bins, BinStats):
        if bins.n != np.asarray(mask).size:
            raise DimensionMismatchError("bin statistics do not match the calibration set")
        return bins
    return bin_stats(bins, mask)


def bin_labels(bins):
    """Per-point bin ids from a BinAssignment or BinStats."""
    if isinstance(bins, BinStats):
        return bins.bins[bins.position]
    return bins.bin_index


def restrict_bins(bins, indices):
    """Bins of the points at indices, as a BinAssignment."""
    epsilon = bins.epsilon
    return BinAssignment(epsilon, bin_labels(bins)[np.asarray(indices, dtype=np.int64)])


def vacuous_rule(method, guarantee_type, alpha, score_id="score", **report_fields):
    """The empty rule returned when no outcome is missing; coverage counts as 1."""
    warn("vacuous-run", f"{method}: no missing outcomes, coverage is 1 by convention")
    report = GuaranteeReport(
        method=method, guarantee_type=guarantee_type, alpha=alpha, vacuous=True, **report_fields
    )
    return PredictionRule.empty(score_id=score_id, report=report)


def pooled_distribution(scores, stats, mask):
    """
    Mass N_k^0 / (N^(0) N_k) on each observed score of bin k, and
    sum_k (N_k^0)^2 / (N^(0) N_k) at +inf.
    """
    n_missing = stats.n_missing
    observed = np.asarray(mask) == 1
    per_point = stats.missing / (n_missing * stats.totals)
    infinite = math.fsum((stats.missing ** 2 / (n_missing * stats.totals)).tolist())
    values = np.append(scores[observed], math.inf)
    weights = np.append(per_point[stats.position[observed]], infinite)
    return WeightedDiscreteDist.from_atoms(values, weights)


def split_conformal_per_feature(cal, scores, bins, alpha, score_id="score"):
    """
    Standard split conformal within each discrete feature group.

    For a missing index in group k, t = Q_{1-alpha} of the observed scores of the
    group (weight 1/(N_k^1 + 1) each) plus 1/(N_k^1 + 1) at +inf.
    """
    alpha = check_alpha(alpha)
    scores = check_scores(cal, scores)
    report = GuaranteeReport("per-feature", GuaranteeType.MARGINAL_COVERAGE, alpha)
    if cal.n_missing == 0:
        return vacuous_rule("per-feature", GuaranteeType.MARGINAL_COVERAGE, alpha, score_id)
    labels = bin_labels(bins)
    observed = cal.mask == 1
    thresholds = {}
    for group in np.unique(labels[cal.missing_indices]):
        members = labels == group
        group_scores = scores[members & observed]
        weight = 1.0 / (group_scores.size + 1)
        dist = WeightedDiscreteDist.from_atoms(
            np.append(group_scores, math.inf), np.full(group_scores.size + 1, weight)
        )
        t = weighted_quantile(dist, 1.0 - alpha)
        for index in np.flatnonzero(members & ~observed):
            thresholds[int(index)] = t
    return PredictionRule.from_thresholds(thresholds, score_id=score_id, report=report)


def pooled_threshold(cal, scores, bins, level):
    """Q_level of the pooled distribution; used by the simultaneous constructors."""
    stats = as_stats(bins, cal.mask)
    return weighted_quantile(pooled_distribution(scores, stats, cal.mask), level)


def simultaneous_discrete(cal, scores, bins, alpha, score_id="score"):
    """
    One threshold for every missing index, valid simultaneously given (X, A).

    Returns the empty rule when nothing is missing.
    """
    alpha = check_alpha(alpha)
    scores = check_scores(cal, scores)
    if cal.n_missing == 0:
        return vacuous_rule("simultaneous", GuaranteeType.MEAN_COVERAGE, alpha, score_id)
    t = pooled_threshold(cal, scores, bins, 1.0 - alpha)
    report = GuaranteeReport("simultaneous", GuaranteeType.MEAN_COVERAGE, alpha)
    return PredictionRule.uniform(cal.missing_indices, t, score_id=score_id, report=report)


def pro_cp(cal, scores, bins, alpha, propensity_slack=0.0, approximate=False, score_id="score"):
    """
    Propensity-discretized conformal prediction.

    Same pooled quantile as simultaneous_discrete, over eps-discretized propensity
    bins. The report certifies 1 - alpha - eps, or 1 - alpha - (eps + d + eps*d)
    when the propensity was estimated with odds slack d.

    Args:
        bins (BinStats | BinAssignment): Propensity bins of the calibration rows.
        propensity_slack (float): delta_p from the odds diagnostic; 0 when known.
        approximate (bool): Whether propensity_slack is a sample estimate.
    """
    alpha = check_alpha(alpha)
    scores = check_scores(cal, scores)
    epsilon = bins.epsilon or 0.0
    fields = dict(epsilon=epsilon, propensity_slack=propensity_slack, approximate=approximate)
    if cal.n_missing == 0:
        return vacuous_rule("pro-cp", GuaranteeType.MEAN_COVERAGE, alpha, score_id, **fields)
    t = pooled_threshold(cal, scores, bins, 1.0 - alpha)
    report = GuaranteeReport("pro-cp", GuaranteeType.MEAN_COVERAGE, alpha, **fields)
    return PredictionRule.uniform(cal.missing_indices, t, score_id=score_id, report=report)


def partitioned(constructor, cal, scores, bins, partition, alpha, levels=None, **options):
    """
    Runs a constructor on each sub-dataset U_l plus all observed rows.

    Args:
        constructor (Callable): simultaneous_discrete, pro_cp or pro_cp2.
        cal (MaskedDataset): Calibration rows.
        scores (np.ndarray): Scores aligned with cal.
        bins (BinAssignment | BinStats): Bins aligned with cal.
        partition (IndexPartition): Partition of 0..n-1.
        alpha (float): Nominal level, reported on the assembled rule.
        levels (dict[int, float] | None): Per-block levels; alpha for every block
            when None.
        **options: Forwarded to the constructor.

    Returns:
        PredictionRule: Thresholds of each block's missing indices, with the
        per-block levels in block_levels.
    """
    scores = check_scores(cal, scores)
    if partition.n != cal.n:
        raise DimensionMismatchError(
            f"partition covers {partition.n} indices but calibration has {cal.n} rows"
        )
    observed = cal.observed_indices
    thresholds = {}
    block_levels = {}
    report = None
    for position, block in enumerate(partition.blocks):
        block_missing = block[cal.mask[block] == 0]
        if block_missing.size == 0:
            continue
        level = alpha if levels is None else levels[position]
        members = np.union1d(block_missing, observed)
        rule = constructor(
            cal.subset(members), scores[members], restrict_bins(bins, members), level, **options
        )
        for local, t in rule.thresholds.items():
            thresholds[int(members[local])] = t
        block_levels[position] = level
        report = report or rule.report
    if report is None:
        rule = constructor(cal, scores, bins, alpha, **options)
        return rule.with_report(replace(rule.report, method=f"{rule.report.method}-partitioned"))
    report = replace(report, method=f"{report.method}-partitioned", alpha=alpha)
    return PredictionRule.from_thresholds(
        thresholds, score_id=options.get("score_id", "score"), report=report,
        block_levels=block_levels,
    )
