"""
This module contains unit tests for the conformal constructors: per-feature and
simultaneous split conformal, pro-CP, pro-CP2, partitions and level allocation,
weighted conformal, the PAC sets, ITE intervals and the method factory.
"""
import itertools
import math
from unittest.mock import patch

import numpy as np
import pytest

from model.backend.event_hub import EventHub
from model.conformal.ite import ite_sets
from model.conformal.method_factory import PROPENSITY_METHODS, MethodFactory
from model.conformal.methods import CalibrationContext
from model.conformal.pac import mar_pac_small, mcar_pac, mcar_pac_order, rank_law
from model.conformal.partition import (
    IndexPartition,
    allocate_levels,
    alpha_allocation,
    contiguous_partition,
    singleton_partition,
    whole_partition,
)
from model.conformal.split import (
    partitioned,
    pooled_distribution,
    pro_cp,
    simultaneous_discrete,
    split_conformal_per_feature,
)
from model.conformal.squared import (
    pro_cp2,
    pro_cp2_partitioned,
    squared_distribution,
    squared_distribution_bruteforce,
)
from model.conformal.weighted import weighted_split_conformal
from model.core.distribution import WeightedDiscreteDist
from model.core.errors import (
    BudgetExceededError,
    ConfigError,
    MissingOutcomeError,
    PartitionError,
)
from model.core.masked_dataset import MaskedDataset
from model.core.prediction_rule import Interval, PredictionRule
from model.discretize.bins import BinAssignment, bin_stats, discrete_feature_bins
from model.scores.mean_model import MeanModel
from model.scores.score_model import ResidualScore


@pytest.fixture(autouse=True)
def reset_event_hub():
    """Each test gets a fresh EventHub."""
    EventHub.reset_instance()
    yield
    EventHub.reset_instance()


def make_cal(labels, mask, scores):
    """
    A one-feature dataset whose feature value is the group label; scores double
    as outcomes and are blanked at missing rows.
    """
    mask = np.asarray(mask)
    scores = np.where(mask == 1, np.asarray(scores, dtype=float), np.nan)
    cal = MaskedDataset.build(np.asarray(labels, dtype=float), mask, scores)
    return cal, scores


def labels_of(labels, epsilon=None):
    return BinAssignment(epsilon, np.asarray(labels, dtype=np.int64))


def random_instance(rng, n, n_bins=4, missing_rate=0.4):
    """Random labels, mask with at least one missing row and integer scores with ties."""
    labels = rng.integers(0, n_bins, size=n)
    mask = (rng.random(n) > missing_rate).astype(int)
    mask[rng.integers(n)] = 0
    scores = rng.integers(0, 8, size=n).astype(float)
    return labels, mask, scores


# split_conformal_per_feature


@pytest.mark.parametrize("alpha, expected", [(0.2, 4.0), (0.5, 3.0)])
def test_per_feature_quantile(alpha, expected):
    """Observed scores {1, 2, 3, 4} in one group."""
    cal, scores = make_cal([0] * 5, [1, 1, 1, 1, 0], [1, 2, 3, 4, 0])
    rule = split_conformal_per_feature(cal, scores, discrete_feature_bins(cal), alpha)
    assert dict(rule.thresholds) == {4: expected}


def test_per_feature_group_without_observed_scores_is_unbounded():
    """A group holding only missing rows gets +inf."""
    cal, scores = make_cal([0, 0, 1], [1, 1, 0], [1, 2, 0])
    rule = split_conformal_per_feature(cal, scores, discrete_feature_bins(cal), 0.1)
    assert rule.threshold(2) == math.inf


# simultaneous_discrete and pro_cp


@pytest.mark.parametrize("alpha, expected", [(0.45, 5.0), (0.4, math.inf)])
def test_simultaneous_discrete_example(alpha, expected):
    """Groups {N=3, observed {1, 2}} and {N=2, observed {5}}, one missing each."""
    cal, scores = make_cal([0, 0, 0, 1, 1], [1, 1, 0, 1, 0], [1, 2, 0, 5, 0])
    rule = simultaneous_discrete(cal, scores, discrete_feature_bins(cal), alpha)
    assert dict(rule.thresholds) == {2: expected, 4: expected}
    assert rule.report.guarantee_type == "mean-coverage"


def test_simultaneous_without_missing_is_vacuous():
    """N0 = 0 gives the empty rule and a vacuous-run warning."""
    cal, scores = make_cal([0, 1], [1, 1], [1, 2])
    with EventHub.get_instance().capture() as events:
        rule = simultaneous_discrete(cal, scores, discrete_feature_bins(cal), 0.1)
    assert rule.is_empty and rule.report.vacuous
    assert events.kinds() == ["vacuous-run"]


@pytest.mark.parametrize("alpha, expected", [(0.5, 4.0), (0.3, math.inf)])
def test_pro_cp_example(alpha, expected):
    """Bins A {observed 1, 2, 3; one missing} and B {observed 4; one missing}."""
    cal, scores = make_cal([0, 0, 0, 0, 1, 1], [1, 1, 1, 0, 1, 0], [1, 2, 3, 0, 4, 0])
    bins = labels_of([0, 0, 0, 0, 1, 1], epsilon=0.1)
    rule = pro_cp(cal, scores, bins, alpha)
    assert set(rule.thresholds.values()) == {expected}
    assert rule.report.epsilon == 0.1
    assert rule.report.effective_level == pytest.approx(1 - alpha - 0.1)


def test_pro_cp_all_observed():
    """No missing outcomes: empty rule, vacuous report."""
    cal, scores = make_cal([0, 0], [1, 1], [1, 2])
    rule = pro_cp(cal, scores, labels_of([0, 0], epsilon=0.1), 0.2)
    assert rule.is_empty and rule.report.vacuous


def test_pro_cp_reports_propensity_slack():
    """An estimated propensity widens the certified level by eps + d + eps * d."""
    cal, scores = make_cal([0, 0, 0], [1, 1, 0], [1, 2, 0])
    rule = pro_cp(
        cal, scores, labels_of([0, 0, 0], epsilon=0.1), 0.2,
        propensity_slack=0.05, approximate=True,
    )
    assert rule.report.approximate
    assert rule.report.slack == pytest.approx(0.1 + 0.05 + 0.005)


# partitions


def test_partition_validation():
    """Overlaps, gaps and out-of-range indices are rejected."""
    assert IndexPartition.from_blocks([[2, 0], [1]], 3).blocks[0].tolist() == [0, 2]
    for blocks in ([[0, 1], [1, 2]], [[0], [2]], [[0, 1, 2, 3]], [[0, 1, 2], []]):
        with pytest.raises(PartitionError):
            IndexPartition.from_blocks(blocks, 3)
    with pytest.raises(PartitionError):
        contiguous_partition(5, 0)


def test_contiguous_partition_layout():
    """Consecutive blocks, shorter last block, seeded shuffle."""
    partition = contiguous_partition(7, 3)
    assert [block.tolist() for block in partition.blocks] == [[0, 1, 2], [3, 4, 5], [6]]
    shuffled = contiguous_partition(7, 3, shuffle=True, seed=4)
    again = contiguous_partition(7, 3, shuffle=True, seed=4)
    assert [b.tolist() for b in shuffled.blocks] == [b.tolist() for b in again.blocks]
    assert partition.block_of().tolist() == [0, 0, 0, 1, 1, 1, 2]


@pytest.mark.parametrize("constructor", [simultaneous_discrete, pro_cp])
def test_partitioned_whole_equals_unpartitioned(constructor):
    """The single-block partition reproduces the un-partitioned thresholds."""
    rng = np.random.default_rng(8)
    for _ in range(20):
        labels, mask, raw = random_instance(rng, 30)
        cal, scores = make_cal(labels, mask, raw)
        bins = labels_of(labels, epsilon=0.1)
        alone = constructor(cal, scores, bins, 0.2)
        split = partitioned(constructor, cal, scores, bins, whole_partition(cal.n), 0.2)
        assert dict(split.thresholds) == dict(alone.thresholds)
        assert split.report.method.endswith("-partitioned")


def test_partitioned_singletons_equal_per_feature():
    """Singleton blocks turn the simultaneous set into per-feature split conformal."""
    rng = np.random.default_rng(9)
    for _ in range(20):
        labels, mask, raw = random_instance(rng, 25)
        cal, scores = make_cal(labels, mask, raw)
        bins = discrete_feature_bins(cal)
        singles = partitioned(
            simultaneous_discrete, cal, scores, bins, singleton_partition(cal.n), 0.15
        )
        per_feature = split_conformal_per_feature(cal, scores, bins, 0.15)
        assert dict(singles.thresholds) == dict(per_feature.thresholds)


def test_partitioned_two_blocks_match_sub_instances():
    """Each block's thresholds equal the constructor run on U_l plus the observed rows."""
    labels = [0, 1, 0, 1, 0, 1, 0, 1, 0, 1]
    mask = [1, 0, 1, 1, 0, 1, 0, 1, 1, 0]
    cal, scores = make_cal(labels, mask, [3, 0, 1, 4, 0, 2, 0, 6, 5, 0])
    bins = labels_of(labels, epsilon=0.1)
    partition = contiguous_partition(10, 5)
    rule = partitioned(pro_cp, cal, scores, bins, partition, 0.3)
    for block in partition.blocks:
        missing = block[cal.mask[block] == 0]
        members = np.union1d(missing, cal.observed_indices)
        sub = pro_cp(cal.subset(members), scores[members], bins.subset(members), 0.3)
        for local, t in sub.thresholds.items():
            assert rule.threshold(members[local]) == t
    assert sorted(rule.thresholds) == cal.missing_indices.tolist()


# pro_cp2


@pytest.mark.parametrize("alpha, expected", [(0.8, 5.0), (0.5, math.inf)])
def test_pro_cp2_example(alpha, expected):
    """One bin, N = 2, one missing, observed score 5: mass 1/2 on 5 and on +inf."""
    cal, scores = make_cal([0, 0], [1, 0], [5, 0])
    bins = labels_of([0, 0], epsilon=0.1)
    distribution = squared_distribution(scores, bin_stats(bins, cal.mask), cal.mask)
    assert distribution.atoms == [(5.0, 0.5), (math.inf, 0.5)]
    rule = pro_cp2(cal, scores, bins, alpha)
    assert rule.threshold(1) == expected
    assert rule.report.guarantee_type == "squared-coverage"


def test_pro_cp2_sorted_aggregation_matches_pair_enumeration():
    """Atom-by-atom equality with the O(n^2) enumeration on random instances."""
    rng = np.random.default_rng(21)
    for _ in range(60):
        n = int(rng.integers(2, 201))
        labels, mask, raw = random_instance(rng, n, n_bins=int(rng.integers(1, 6)))
        cal, scores = make_cal(labels, mask, raw)
        stats = bin_stats(labels_of(labels, epsilon=0.1), cal.mask)
        fast = squared_distribution(scores, stats, cal.mask)
        slow = squared_distribution_bruteforce(scores, stats, cal.mask)
        for value in np.union1d(fast.values, slow.values):
            assert fast.cdf(value) == pytest.approx(slow.cdf(value), abs=1e-12)
        assert math.fsum(fast.weights.tolist()) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.slow
def test_pro_cp2_pair_enumeration_up_to_five_hundred_rows():
    """The sorted aggregation agrees with enumeration on 500 instances with n <= 500."""
    rng = np.random.default_rng(22)
    for _ in range(500):
        n = int(rng.integers(2, 501))
        labels, mask, raw = random_instance(
            rng, n, n_bins=int(rng.integers(1, 9)), missing_rate=float(rng.uniform(0.05, 0.9))
        )
        cal, scores = make_cal(labels, mask, raw)
        stats = bin_stats(labels_of(labels, epsilon=0.1), cal.mask)
        fast = squared_distribution(scores, stats, cal.mask)
        slow = squared_distribution_bruteforce(scores, stats, cal.mask)
        for value in np.union1d(fast.values, slow.values):
            assert fast.cdf(value) == pytest.approx(slow.cdf(value), abs=1e-12)


def test_raw_weights_sum_to_one_on_random_instances():
    """Pooled and squared atoms carry total mass one within 1e-9, per instance and per block."""
    rng = np.random.default_rng(23)
    totals = []
    with patch.object(
        WeightedDiscreteDist, "from_atoms", wraps=WeightedDiscreteDist.from_atoms
    ) as from_atoms:
        for _ in range(10_000):
            n = int(rng.integers(1, 41))
            labels, mask, raw = random_instance(
                rng, n, n_bins=int(rng.integers(1, 7)), missing_rate=float(rng.uniform(0.0, 1.0))
            )
            # the whole instance, then the blocks of a random two-block partition
            cut = int(rng.integers(1, n + 1))
            for rows in (slice(0, n), slice(0, cut), slice(cut, n)):
                if not (mask[rows] == 0).any():
                    continue
                cal, scores = make_cal(labels[rows], mask[rows], raw[rows])
                stats = bin_stats(labels_of(labels[rows], epsilon=0.1), cal.mask)
                pooled_distribution(scores, stats, cal.mask)
                squared_distribution(scores, stats, cal.mask)
            for call in from_atoms.call_args_list:
                totals.append(math.fsum(np.asarray(call.args[1], dtype=float).tolist()))
            from_atoms.reset_mock()
    assert len(totals) >= 20_000
    assert max(abs(total - 1.0) for total in totals) <= 1e-9


def test_pro_cp2_infinite_mass_in_one_bin():
    """One bin: mass at +inf is 1/N + (N0 - 1)^2 / (N (N - 1))."""
    n, n_missing = 12, 4
    mask = [0] * n_missing + [1] * (n - n_missing)
    cal, scores = make_cal([0] * n, mask, np.arange(n))
    stats = bin_stats(labels_of([0] * n, epsilon=0.1), cal.mask)
    distribution = squared_distribution(scores, stats, cal.mask)
    expected = 1 / n + (n_missing - 1) ** 2 / (n * (n - 1))
    assert distribution.mass_at_infinity == pytest.approx(expected, abs=1e-12)


def test_alpha_allocation_examples():
    """Equal blocks keep alpha; unequal blocks shift it toward the larger block."""
    assert allocate_levels([2, 2], 0.1) == pytest.approx({0: 0.1, 1: 0.1})
    assert allocate_levels([3, 1], 0.1) == pytest.approx({0: 0.12, 1: 0.04})
    assert allocate_levels([0, 0], 0.1) == {}
    assert 1 not in allocate_levels([2, 0, 1], 0.1)


def test_alpha_allocation_identities():
    """Pre-clamp, sum alpha_l N_l^0 = alpha N0 and the squared budget is alpha^2."""
    rng = np.random.default_rng(2)
    for _ in range(100):
        counts = rng.integers(0, 6, size=int(rng.integers(1, 8)))
        counts[0] += 1
        total = int(counts.sum())
        levels = allocate_levels(counts, 0.05, clamp=False)
        assert math.fsum(levels[l] * counts[l] for l in levels) == pytest.approx(0.05 * total)
        squares = math.fsum(int(c) ** 2 for c in counts) / total ** 2
        assert squares * math.fsum(a * a for a in levels.values()) == pytest.approx(0.05 ** 2)


def test_alpha_allocation_clamps_with_warning():
    """A level above one is clamped and reported."""
    with EventHub.get_instance().capture() as events:
        levels = allocate_levels([3, 1], 0.9)
    assert levels[0] == 1.0
    assert levels[1] == pytest.approx(0.36)
    assert events.kinds() == ["alpha-clamped"]


def test_alpha_allocation_from_partition():
    """Counts come from the mask restricted to each block."""
    partition = contiguous_partition(6, 3)
    levels = alpha_allocation(partition, 0.2, [0, 0, 1, 0, 1, 1])
    assert levels == pytest.approx({0: 0.2 * 2 * 3 / 5, 1: 0.2 * 1 * 3 / 5})


def test_pro_cp2_partitioned_single_block_equals_pro_cp2():
    """With one block alpha_1 = alpha."""
    rng = np.random.default_rng(13)
    for _ in range(10):
        labels, mask, raw = random_instance(rng, 40)
        cal, scores = make_cal(labels, mask, raw)
        bins = labels_of(labels, epsilon=0.1)
        whole = pro_cp2_partitioned(cal, scores, bins, whole_partition(cal.n), 0.2)
        assert dict(whole.thresholds) == dict(pro_cp2(cal, scores, bins, 0.2).thresholds)
        assert dict(whole.block_levels) == pytest.approx({0: 0.2})


def test_pro_cp2_singletons_equal_per_feature_at_squared_level():
    """Singleton blocks give per-feature split conformal at level alpha^2."""
    rng = np.random.default_rng(14)
    for _ in range(10):
        labels, mask, raw = random_instance(rng, 30)
        cal, scores = make_cal(labels, mask, raw)
        bins = discrete_feature_bins(cal)
        singles = pro_cp2_partitioned(cal, scores, bins, singleton_partition(cal.n), 0.5)
        per_feature = split_conformal_per_feature(cal, scores, bins, 0.25)
        assert dict(singles.thresholds) == dict(per_feature.thresholds)


# weighted split conformal


def test_weighted_example():
    """Odds weights 1 and 3 on scores 1 and 2, test weight 1: t = 2 at alpha = 0.2."""
    cal, scores = make_cal([0, 0, 0], [1, 1, 0], [1, 2, 0])
    rule = weighted_split_conformal(cal, scores, np.array([0.5, 0.75, 0.5]), 0.2)
    assert dict(rule.thresholds) == {2: 2.0}
    assert rule.report.guarantee_type == "marginal-coverage"


def test_weighted_with_constant_propensity_is_split_conformal():
    """Equal weights reduce to the unweighted split conformal quantile."""
    rng = np.random.default_rng(6)
    _, mask, raw = random_instance(rng, 40)
    cal, scores = make_cal(np.zeros(40), mask, raw)
    weighted = weighted_split_conformal(cal, scores, np.full(40, 0.3), 0.1)
    plain = split_conformal_per_feature(cal, scores, discrete_feature_bins(cal), 0.1)
    assert dict(weighted.thresholds) == dict(plain.thresholds)


def test_weighted_thresholds_shrink_with_alpha():
    """Larger alpha never gives a larger threshold."""
    rng = np.random.default_rng(7)
    labels, mask, raw = random_instance(rng, 50)
    cal, scores = make_cal(labels, mask, raw)
    propensities = rng.uniform(0.1, 0.9, size=50)
    previous = None
    for alpha in (0.05, 0.1, 0.2, 0.4, 0.7):
        values = weighted_split_conformal(cal, scores, propensities, alpha).values
        if previous is not None:
            assert (values <= previous).all()
        previous = values


# PAC sets


def enumerated_rank_law(n, n_missing, covered):
    """P(K = l) by enumerating every missing set of ranks 0..n-1."""
    counts = np.zeros(n - n_missing + 1)
    for missing in itertools.combinations(range(n), n_missing):
        counts[missing[covered - 1] - (covered - 1)] += 1
    return counts / math.comb(n, n_missing)


def test_mcar_pac_small_example():
    """n = 4, N0 = 1, alpha = delta = 0.25: K is uniform on 0..3 and k = 3."""
    assert rank_law(4, 1, 0.25) == pytest.approx([0.25] * 4)
    order = mcar_pac_order(4, 1, 0.25, 0.25)
    assert order.k == 3 and order.covered == 1
    cal, scores = make_cal([0] * 4, [1, 0, 1, 1], [7, 0, 2, 5])
    rule = mcar_pac(cal, scores, 0.25, 0.25)
    assert rule.threshold(1) == 7.0
    assert "k=3" in rule.report.notes


@pytest.mark.parametrize("n, n_missing, alpha", [(10, 3, 1 / 3), (12, 4, 0.3), (9, 2, 0.5)])
def test_mcar_pac_rank_law_matches_enumeration(n, n_missing, alpha):
    """The hypergeometric law of K equals exhaustive enumeration of placements."""
    covered = math.ceil(n_missing * (1 - alpha) - 1e-9)
    enumerated = enumerated_rank_law(n, n_missing, covered)
    assert rank_law(n, n_missing, alpha) == pytest.approx(enumerated.tolist(), abs=1e-12)
    oracle_k = int(np.argmax(np.cumsum(enumerated) >= 0.9 - 1e-12)) + 1
    assert mcar_pac_order(n, n_missing, alpha, 0.1).k == oracle_k


@pytest.mark.parametrize(
    "n, n_missing",
    [(n, n_missing) for n in range(2, 13) for n_missing in range(1, 5) if n_missing < n],
)
def test_mcar_pac_rank_law_matches_enumeration_for_every_small_case(n, n_missing):
    """Every n <= 12 and N0 <= 4, with alpha chosen so each covered count 1..N0 occurs."""
    for covered in range(1, n_missing + 1):
        alpha = (n_missing - covered + 0.5) / n_missing
        enumerated = enumerated_rank_law(n, n_missing, covered)
        assert rank_law(n, n_missing, alpha) == pytest.approx(enumerated.tolist(), abs=1e-12)
        assert math.fsum(rank_law(n, n_missing, alpha)) == pytest.approx(1.0, abs=1e-12)


def test_mcar_pac_small_delta_is_unbounded():
    """Demanding more confidence than the law allows gives +inf."""
    cal, scores = make_cal([0] * 4, [1, 0, 1, 1], [7, 0, 2, 5])
    assert mcar_pac(cal, scores, 0.25, 0.001).threshold(1) == math.inf


@pytest.mark.parametrize("delta, expected", [(0.25, 3.0), (0.5, 2.0), (0.1, math.inf)])
def test_mar_pac_small_four_placements(delta, expected):
    """One bin, N = 4, one missing, alpha = 0: placement statistics are 1, 2, 3, +inf."""
    cal, scores = make_cal([0] * 4, [1, 1, 1, 0], [1, 2, 3, 0])
    rule = mar_pac_small(cal, scores, labels_of([0] * 4), 0.0, delta)
    assert rule.threshold(3) == expected
    assert "placements=4" in rule.report.notes


@pytest.mark.parametrize("n, n_missing, alpha, delta", [(8, 2, 0.5, 0.2), (9, 3, 1 / 3, 0.3)])
def test_mar_pac_small_one_bin_relation_to_mcar_pac(n, n_missing, alpha, delta):
    """With one bin the threshold is the (k + m - 1)-th observed score, never below mcar-pac."""
    rng = np.random.default_rng(n)
    mask = np.ones(n, dtype=int)
    mask[rng.choice(n, n_missing, replace=False)] = 0
    cal, scores = make_cal(np.zeros(n), mask, rng.permutation(n).astype(float))
    order = mcar_pac_order(n, n_missing, alpha, delta)
    observed = np.sort(scores[cal.observed_indices])
    position = order.k + order.covered - 1
    expected = float(observed[position - 1]) if position <= observed.size else math.inf
    small = mar_pac_small(cal, scores, labels_of(np.zeros(n)), alpha, delta)
    assert small.threshold(cal.missing_indices[0]) == expected
    assert expected >= mcar_pac(cal, scores, alpha, delta).threshold(cal.missing_indices[0])


def test_mar_pac_small_grows_as_delta_shrinks():
    """Lower failure probability never lowers the threshold."""
    labels = [0, 0, 0, 1, 1, 1, 1]
    cal, scores = make_cal(labels, [1, 0, 1, 1, 0, 1, 1], [4, 0, 2, 6, 0, 1, 3])
    bins = labels_of(labels)
    thresholds = [
        mar_pac_small(cal, scores, bins, 0.2, delta).threshold(1)
        for delta in (0.6, 0.4, 0.2, 0.1, 0.01)
    ]
    assert thresholds == sorted(thresholds)


def test_mar_pac_small_budget_and_vacuous_run():
    """Over-budget instances are refused; N0 = 0 gives the empty rule."""
    cal, scores = make_cal([0] * 4, [1, 1, 1, 0], [1, 2, 3, 0])
    with pytest.raises(BudgetExceededError, match="mcar-pac or pro-cp2"):
        mar_pac_small(cal, scores, labels_of([0] * 4), 0.1, 0.1, budget=3)
    full, full_scores = make_cal([0, 0], [1, 1], [1, 2])
    assert mar_pac_small(full, full_scores, labels_of([0, 0]), 0.1, 0.1).is_empty


# ITE


def test_ite_sets_shift_by_control_outcome():
    """Counterfactual interval [3, 7] with Y(0) = 2 gives [1, 5]."""
    cal, _ = make_cal([0.0, 1.0], [1, 0], [4.0, 0])
    score_model = ResidualScore(MeanModel(5.0, np.zeros(1)))
    rule = PredictionRule.uniform([1], 2.0)
    assert ite_sets(rule, score_model, cal, [np.nan, 2.0]) == {1: Interval(1.0, 5.0)}
    unbounded = ite_sets(PredictionRule.uniform([1], math.inf), score_model, cal, [np.nan, 2.0])
    assert unbounded[1].width == math.inf
    with pytest.raises(MissingOutcomeError):
        ite_sets(rule, score_model, cal, [np.nan, np.nan])


# method objects


def test_method_factory():
    """Known names build methods, unknown names raise ValueError."""
    assert MethodFactory.method_names()[:2] == ["per-feature", "simultaneous"]
    assert MethodFactory.create_method("pro-cp2").name == "pro-cp2"
    assert PROPENSITY_METHODS <= set(MethodFactory.method_names())
    with pytest.raises(ValueError, match="Unknown conformal method: nope"):
        MethodFactory.create_method("nope")


def test_methods_dispatch_through_context():
    """Method objects route the context to their constructor."""
    cal, scores = make_cal([0, 0, 0, 0, 1, 1], [1, 1, 1, 0, 1, 0], [1, 2, 3, 0, 4, 0])
    propensities = np.array([0.5, 0.5, 0.5, 0.5, 0.8, 0.8])
    context = CalibrationContext(cal, scores, 0.5, epsilon=0.1, propensities=propensities)
    rule = MethodFactory.create_method("pro-cp").execute(context)
    assert set(rule.thresholds.values()) == {4.0}
    partitioned_context = CalibrationContext(
        cal, scores, 0.5, epsilon=0.1, propensities=propensities,
        partition=whole_partition(cal.n),
    )
    again = MethodFactory.create_method("pro-cp").execute(partitioned_context)
    assert dict(again.thresholds) == dict(rule.thresholds)


def test_propensity_methods_need_propensities():
    """pro-cp without propensities is a configuration error."""
    cal, scores = make_cal([0, 0], [1, 0], [1, 0])
    with pytest.raises(ConfigError):
        MethodFactory.create_method("pro-cp").execute(CalibrationContext(cal, scores, 0.2))
    with pytest.raises(ConfigError):
        MethodFactory.create_method("mcar-pac").execute(CalibrationContext(cal, scores, 0.2))
