"""
PAC-type sets: P(coverage >= 1 - alpha) >= 1 - delta.

mcar_pac picks an order statistic of the observed scores from the exact law of
K, the number of observed scores ranked below the m-th smallest missing score,
where m = ceil((1 - alpha) N0) and the missing set is a uniformly random N0-subset:

    P(K = l) = (N0 / n) * Hy(l; n - 1, m + l - 1, n - N0),   l = 0..N1.

mar_pac_small enumerates every placement of the missing set compatible with the
bin counts, which is only feasible for small instances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from model.core.distribution import QUANTILE_TOLERANCE, WeightedDiscreteDist, weighted_quantile
from model.core.errors import BudgetExceededError, InsufficientDataError
from model.core.hypergeom import hypergeom_pmf
from model.core.levels import GuaranteeReport, GuaranteeType, check_alpha, check_delta
from model.core.prediction_rule import PredictionRule
from model.conformal.split import as_stats, check_scores, vacuous_rule

CEIL_SLACK = 1e-9
DEFAULT_BUDGET = 10 ** 6


def covered_count(n_missing, alpha):
    """m = ceil(N0 (1 - alpha)), guarded against float overshoot."""
    return math.ceil(n_missing * (1.0 - alpha) - CEIL_SLACK)


@dataclass(frozen=True)
class PacOrder:
    """
    Attributes:
        k (int): Order statistic of the observed scores used as threshold;
            N1 + 1 means +inf.
        tail_mass (float): P(K <= k - 1).
        p_max (float): max_l P(K = l), the excess allowed above 1 - delta.
        covered (int): m = ceil((1 - alpha) N0).
    """

    k: int
    tail_mass: float
    p_max: float
    covered: int


def rank_law(n, n_missing, alpha):
    """Returns [P(K = 0), ..., P(K = N1)]."""
    n_observed = n - n_missing
    covered = covered_count(n_missing, alpha)
    return [
        n_missing / n * hypergeom_pmf(l, n - 1, covered + l - 1, n_observed)
        for l in range(n_observed + 1)
    ]


def mcar_pac_order(n, n_missing, alpha, delta):
    """
    Smallest k with P(K <= k - 1) >= 1 - delta.

    Raises:
        InsufficientDataError: When there is no observed or no missing outcome.
    """
    alpha = check_alpha(alpha)
    delta = check_delta(delta)
    n_observed = n - n_missing
    if n_missing < 1 or n_observed < 1:
        raise InsufficientDataError(
            f"MCAR PAC needs observed and missing outcomes, got N1={n_observed}, N0={n_missing}"
        )
    law = rank_law(n, n_missing, alpha)
    target = 1.0 - delta - QUANTILE_TOLERANCE
    partial = []
    for k in range(1, n_observed + 2):
        partial.append(law[k - 1])
        tail = math.fsum(partial)
        if tail >= target:
            return PacOrder(k, tail, max(law), covered_count(n_missing, alpha))
    return PacOrder(n_observed + 1, math.fsum(law), max(law), covered_count(n_missing, alpha))


def mcar_pac(cal, scores, alpha, delta, score_id="score"):
    """
    MCAR PAC set: threshold is the k-th smallest observed score (+inf if k > N1).
    """
    alpha = check_alpha(alpha)
    delta = check_delta(delta)
    scores = check_scores(cal, scores)
    if cal.n_missing == 0:
        return vacuous_rule("mcar-pac", GuaranteeType.MCAR_PAC, alpha, score_id, delta=delta)
    order = mcar_pac_order(cal.n, cal.n_missing, alpha, delta)
    observed = np.sort(scores[cal.observed_indices])
    t = float(observed[order.k - 1]) if order.k <= observed.size else math.inf
    report = GuaranteeReport(
        "mcar-pac", GuaranteeType.MCAR_PAC, alpha, delta=delta,
        notes=(f"k={order.k}", f"p_max={order.p_max:.6g}"),
    )
    return PredictionRule.uniform(cal.missing_indices, t, score_id=score_id, report=report)


def placement_count(stats):
    """prod_k C(N_k, N_k^0)."""
    return math.prod(math.comb(int(t), int(m)) for t, m in zip(stats.totals, stats.missing))


def placement_statistics(extended, stats, covered):
    """
    m-th smallest of S_bar over every compatible missing set J.

    Args:
        extended (np.ndarray): S_bar, +inf at missing rows.
        stats (BinStats): Bin counts.
        covered (int): m.

    Returns:
        np.ndarray: One statistic per placement.
    """
    combined = np.empty((1, 0))
    for position, count in enumerate(stats.missing):
        if count == 0:
            continue
        members = extended[stats.position == position]
        keep = min(int(count), covered)
        choices = np.array(list(itertools.combinations(members, int(count))), dtype=float)
        choices = np.sort(choices, axis=1)[:, :keep]
        merged = np.concatenate(
            [
                np.repeat(combined, choices.shape[0], axis=0),
                np.tile(choices, (combined.shape[0], 1)),
            ],
            axis=1,
        )
        if merged.shape[1] > covered:
            merged = np.partition(merged, covered - 1, axis=1)[:, :covered]
        combined = merged
    return np.partition(combined, covered - 1, axis=1)[:, covered - 1]


def mar_pac_small(cal, scores, bins, alpha, delta, budget=DEFAULT_BUDGET, score_id="score"):
    """
    Exhaustive PAC set under MAR for small instances.

    Every missing set J compatible with the bin counts is equally likely given the
    bins and the mask; the threshold is the (1 - delta)-quantile, over J, of the
    m-th smallest extended score in J. Unknown scores count as +inf, so the set
    is conservative.

    Raises:
        BudgetExceededError: When prod_k C(N_k, N_k^0) exceeds budget.
    """
    alpha = check_alpha(alpha, allow_zero=True)
    delta = check_delta(delta)
    scores = check_scores(cal, scores)
    if cal.n_missing == 0:
        return vacuous_rule("mar-pac-small", GuaranteeType.MAR_PAC, alpha, score_id, delta=delta)
    stats = as_stats(bins, cal.mask)
    placements = placement_count(stats)
    if placements > budget:
        raise BudgetExceededError(
            f"{placements} missing-set placements exceed the budget of {budget}; "
            "use mcar-pac or pro-cp2 instead"
        )
    extended = np.where(cal.mask == 1, scores, math.inf)
    covered = covered_count(cal.n_missing, alpha)
    statistics = placement_statistics(extended, stats, covered)
    dist = WeightedDiscreteDist.from_atoms(
        statistics, np.full(statistics.size, 1.0 / statistics.size)
    )
    t = weighted_quantile(dist, 1.0 - delta)
    report = GuaranteeReport(
        "mar-pac-small", GuaranteeType.MAR_PAC, alpha,
        epsilon=bins.epsilon or 0.0, delta=delta, notes=(f"placements={placements}",),
    )
    return PredictionRule.uniform(cal.missing_indices, t, score_id=score_id, report=report)
