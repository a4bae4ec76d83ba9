"""
Squared-coverage control (pro-CP2).

The threshold is the (1 - alpha^2)-quantile of a distribution over the extended
scores S_bar_i (S_i when observed, +inf when missing) made of three parts:

    per point i in bin k:            N_k^0 / (N0^2 N_k)                    on S_bar_i
    ordered pairs i != j, same bin:  N_k^0 (N_k^0 - 1) / (N0^2 N_k (N_k - 1)) on min(S_bar_i, S_bar_j)
    ordered pairs across bins:       N_k^0 N_k'^0 / (N0^2 N_k N_k')        on min(S_bar_i, S_bar_j)

The pair terms are aggregated with one sort: each pair puts its mass on the earlier
of its two points in sorted order, so a point at sorted position r collects twice
the pair weights of every later point.
"""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from model.core.distribution import WeightedDiscreteDist, weighted_quantile
from model.core.errors import BudgetExceededError, InvalidLevelError
from model.core.levels import GuaranteeReport, GuaranteeType, check_alpha
from model.core.prediction_rule import PredictionRule
from model.conformal.partition import alpha_allocation
from model.conformal.split import as_stats, check_scores, partitioned, vacuous_rule

BRUTEFORCE_LIMIT = 2000


def extended_scores(scores, mask):
    """S_bar: the score where observed, +inf where missing."""
    return np.where(np.asarray(mask) == 1, scores, math.inf)


def _weights(stats):
    n_missing = stats.n_missing
    point = stats.missing / (n_missing ** 2 * stats.totals)
    pairs = stats.totals * (stats.totals - 1)
    within = np.divide(
        stats.missing * (stats.missing - 1),
        n_missing ** 2 * pairs,
        out=np.zeros(stats.bins.size),
        where=pairs > 0,
    )
    ratio = stats.missing / stats.totals
    return point, within, ratio


def squared_distribution(scores, stats, mask):
    """
    The pro-CP2 distribution built by sorted aggregation.

    Args:
        scores (np.ndarray): Scores aligned with the mask (NaN at missing rows).
        stats (BinStats): Bin counts for the same rows.
        mask (np.ndarray): 0/1 indicators.

    Returns:
        WeightedDiscreteDist: Canonical distribution of total mass one.
    """
    values = extended_scores(scores, mask)
    point, within, ratio = _weights(stats)
    n_missing = stats.n_missing
    order = np.argsort(values, kind="stable")
    sorted_values = values[order]
    sorted_bin = stats.position[order]

    # later_in_bin[r]: points of the same bin after sorted position r
    by_bin = np.argsort(sorted_bin, kind="stable")
    rank_in_bin = np.empty(order.size, dtype=np.int64)
    starts = np.searchsorted(sorted_bin[by_bin], np.arange(stats.bins.size))
    rank_in_bin[by_bin] = np.arange(order.size) - starts[sorted_bin[by_bin]]
    later_in_bin = stats.totals[sorted_bin] - rank_in_bin - 1

    c = ratio[sorted_bin]
    later_total = np.concatenate([np.cumsum(c[::-1])[::-1][1:], [0.0]])
    cross = np.clip(later_total - c * later_in_bin, 0.0, None)

    weights = (
        point[sorted_bin]
        + 2.0 * c * cross / n_missing ** 2
        + 2.0 * within[sorted_bin] * later_in_bin
    )
    return WeightedDiscreteDist.from_atoms(sorted_values, weights)


def squared_distribution_bruteforce(scores, stats, mask):
    """
    The pro-CP2 distribution by explicit enumeration of all ordered pairs.

    Raises:
        BudgetExceededError: When n exceeds 2000.
    """
    values = extended_scores(scores, mask)
    n = values.size
    if n > BRUTEFORCE_LIMIT:
        raise BudgetExceededError(
            f"pair enumeration is limited to n <= {BRUTEFORCE_LIMIT}, got {n}"
        )
    point, within, ratio = _weights(stats)
    n_missing = stats.n_missing
    bin_of = stats.position
    c = ratio[bin_of]
    pair_weights = np.outer(c, c) / n_missing ** 2
    same = bin_of[:, None] == bin_of[None, :]
    pair_weights = np.where(same, within[bin_of][:, None], pair_weights)
    np.fill_diagonal(pair_weights, 0.0)
    minima = np.minimum.outer(values, values)
    return WeightedDiscreteDist.from_atoms(
        np.concatenate([values, minima.ravel()]),
        np.concatenate([point[bin_of], pair_weights.ravel()]),
    )


def _pro_cp2_rule(cal, scores, bins, alpha, propensity_slack, approximate, score_id, method):
    epsilon = bins.epsilon or 0.0
    fields = dict(epsilon=epsilon, propensity_slack=propensity_slack, approximate=approximate)
    if cal.n_missing == 0:
        return vacuous_rule(method, GuaranteeType.SQUARED_COVERAGE, alpha, score_id, **fields)
    stats = as_stats(bins, cal.mask)
    t = weighted_quantile(squared_distribution(scores, stats, cal.mask), 1.0 - alpha ** 2)
    report = GuaranteeReport(method, GuaranteeType.SQUARED_COVERAGE, alpha, **fields)
    return PredictionRule.uniform(cal.missing_indices, t, score_id=score_id, report=report)


def pro_cp2(cal, scores, bins, alpha, propensity_slack=0.0, approximate=False, score_id="score"):
    """
    Squared-coverage constructor: E[miscoverage^2] <= alpha^2 + 2 * slack.

    Args:
        bins (BinStats | BinAssignment): Propensity bins, or discrete feature bins
            for the exact discrete-feature version.
    """
    alpha = check_alpha(alpha)
    scores = check_scores(cal, scores)
    return _pro_cp2_rule(
        cal, scores, bins, alpha, propensity_slack, approximate, score_id, "pro-cp2"
    )


def _pro_cp2_block(cal, scores, bins, alpha, propensity_slack=0.0, approximate=False,
                   score_id="score"):
    # block levels are clamped into (0, 1]; level 1 yields the empty set
    if not 0 < alpha <= 1:
        raise InvalidLevelError(f"block level must lie in (0, 1], got {alpha}")
    return _pro_cp2_rule(
        cal, scores, bins, alpha, propensity_slack, approximate, score_id, "pro-cp2"
    )


def pro_cp2_partitioned(cal, scores, bins, partition, alpha, propensity_slack=0.0,
                        approximate=False, score_id="score"):
    """
    Runs pro-CP2 on each U_l plus the observed rows at the allocated level alpha_l.

    Returns:
        PredictionRule: Assembled thresholds; block_levels holds the alpha_l used.
    """
    alpha = check_alpha(alpha)
    levels = alpha_allocation(partition, alpha, cal.mask)
    rule = partitioned(
        _pro_cp2_block, cal, scores, bins, partition, alpha, levels=levels,
        propensity_slack=propensity_slack, approximate=approximate, score_id=score_id,
    )
    return rule.with_report(replace(rule.report, alpha=alpha))
