"""
This module contains unit tests for the core value types: weighted discrete
distributions and their quantiles, the hypergeometric pmf, levels and guarantee
reports, prediction rules and masked datasets.
"""
import math
from fractions import Fraction

import numpy as np
import pytest

from model.core.distribution import WeightedDiscreteDist, tv_distance, weighted_quantile
from model.core.errors import (
    DimensionMismatchError,
    InvalidDistributionError,
    InvalidLevelError,
    MissingOutcomeError,
    ProcpError,
    UndefinedPmfError,
)
from model.core.hypergeom import hypergeom_pmf, hypergeom_pmf_exact
from model.core.levels import GuaranteeReport, GuaranteeType, Level, discretization_slack
from model.core.masked_dataset import MaskedDataset
from model.core.prediction_rule import Interval, PredictionRule


def dist(*atoms):
    """Shorthand: dist((1, .5), (2, .5))."""
    return WeightedDiscreteDist.from_atoms([v for v, _ in atoms], [w for _, w in atoms])


def scan_quantile(d, level):
    """CDF-scan oracle for the inf-CDF quantile."""
    if level <= 0:
        return -math.inf
    for value in d.values:
        if d.cdf(value) >= level - 1e-12:
            return float(value)
    return math.inf if level > 1 else float(d.values[-1])


@pytest.mark.parametrize(
    "atoms, level, expected",
    [
        (((1, 0.5), (2, 0.5)), 0.5, 1.0),
        (((3, 0.7), (math.inf, 0.3)), 0.8, math.inf),
        (((1, 1 / 3), (2, 1 / 3), (3, 1 / 3)), 0.9, 3.0),
        (((1, 0.5), (2, 0.5)), 0.0, -math.inf),
        (((1, 0.5), (2, 0.5)), 1.5, math.inf),
        (((1, 0.2), (2, 0.6), (math.inf, 0.2)), 0.2 + 0.6, 2.0),
    ],
)
def test_weighted_quantile_examples(atoms, level, expected):
    """Inf-CDF quantiles of small hand-made distributions."""
    assert weighted_quantile(dist(*atoms), level) == expected


def test_weighted_quantile_matches_scan_oracle_and_is_monotone():
    """Random distributions with up to 20 atoms agree with a CDF scan at every level."""
    rng = np.random.default_rng(3)
    for _ in range(200):
        size = int(rng.integers(1, 21))
        values = rng.integers(0, 10, size=size).astype(float)
        if rng.random() < 0.3:
            values[0] = math.inf
        weights = rng.random(size)
        d = WeightedDiscreteDist.from_atoms(values, weights / weights.sum())
        levels = np.sort(rng.random(15))
        quantiles = [weighted_quantile(d, level) for level in levels]
        assert quantiles == [scan_quantile(d, level) for level in levels]
        assert all(a <= b for a, b in zip(quantiles, quantiles[1:]))


def test_from_atoms_merges_and_sorts():
    """Equal values are merged and the representation is canonical."""
    d = WeightedDiscreteDist.from_atoms([2, 1, 2, math.inf], [0.25, 0.25, 0.25, 0.25])
    assert d.atoms == [(1.0, 0.25), (2.0, 0.5), (math.inf, 0.25)]
    assert d.mass_at_infinity == 0.25
    assert d.cdf(2) == pytest.approx(0.75)
    assert len(d) == 3


@pytest.mark.parametrize(
    "values, weights",
    [([1, 2], [0.5, 0.6]), ([1, 2], [1.0]), ([-math.inf], [1.0]), ([1, 2], [1.5, -0.5])],
)
def test_from_atoms_rejects_invalid(values, weights):
    """Bad masses, lengths and atoms raise InvalidDistributionError."""
    with pytest.raises(InvalidDistributionError):
        WeightedDiscreteDist.from_atoms(values, weights)


def test_errors_share_the_library_root():
    """Library errors can be caught as ProcpError or as the matching builtin."""
    with pytest.raises(ProcpError):
        WeightedDiscreteDist.from_atoms([1], [0.5])
    with pytest.raises(ValueError):
        WeightedDiscreteDist.from_atoms([1], [0.5])


def test_tv_distance_examples():
    """Identical, disjoint and partially overlapping distributions."""
    p = dist((0, 0.5), (1, 0.5))
    assert tv_distance(p, p) == 0.0
    assert tv_distance(WeightedDiscreteDist.point_mass(0), WeightedDiscreteDist.point_mass(1)) == 1.0
    assert tv_distance(p, dist((0, 0.8), (1, 0.2))) == pytest.approx(0.3)


def test_tv_distance_is_a_metric():
    """Symmetry and the triangle inequality on random triples."""
    rng = np.random.default_rng(5)
    for _ in range(50):
        triple = []
        for _ in range(3):
            weights = rng.random(4)
            triple.append(WeightedDiscreteDist.from_atoms(np.arange(4), weights / weights.sum()))
        p, q, r = triple
        assert tv_distance(p, q) == pytest.approx(tv_distance(q, p))
        assert tv_distance(p, r) <= tv_distance(p, q) + tv_distance(q, r) + 1e-12


def test_hypergeom_examples():
    """Hy(1; 5, 2, 2) = 0.6, no successes available, and a > A."""
    assert hypergeom_pmf(1, 5, 2, 2) == pytest.approx(0.6)
    assert hypergeom_pmf_exact(1, 5, 2, 2) == Fraction(3, 5)
    assert hypergeom_pmf(0, 9, 0, 4) == 1.0
    assert hypergeom_pmf(3, 4, 2, 3) == 0.0


def test_hypergeom_undefined_denominator():
    """C(B, b) = 0 is an error."""
    with pytest.raises(UndefinedPmfError):
        hypergeom_pmf(0, 3, 1, 4)


@pytest.mark.parametrize(
    "B, A, b, tolerance", [(10, 4, 5, 1e-12), (50, 20, 17, 1e-12), (1500, 300, 40, 1e-9)]
)
def test_hypergeom_sums_to_one(B, A, b, tolerance):
    """The pmf sums to one over its support, in exact and log-space regimes."""
    total = math.fsum(hypergeom_pmf(a, B, A, b) for a in range(0, b + 1))
    assert total == pytest.approx(1.0, abs=tolerance)


def test_hypergeom_log_space_agrees_with_exact():
    """Past the exact limit the log-gamma path matches rational arithmetic."""
    exact = float(hypergeom_pmf_exact(12, 1200, 300, 50))
    assert hypergeom_pmf(12, 1200, 300, 50) == pytest.approx(exact, rel=1e-9)


def test_level_bounds():
    """Level validates alpha, epsilon and delta."""
    Level(0.1, 0.05, 0.2)
    for kwargs in ({"alpha": 0.0}, {"alpha": 1.0}, {"alpha": 0.1, "epsilon": -1}, {"alpha": 0.1, "delta": 1.0}):
        with pytest.raises(InvalidLevelError):
            Level(**kwargs)


def test_guarantee_report_effective_levels():
    """Slack algebra: eps + d + eps * d, then the type-specific certified number."""
    assert discretization_slack(0.1, 0.2214) == pytest.approx(0.1 + 0.2214 + 0.02214)
    mean = GuaranteeReport("pro-cp", GuaranteeType.MEAN_COVERAGE, 0.2, 0.1, 0.2214)
    assert mean.effective_level == pytest.approx(1 - 0.2 - (0.1 + 0.2214 + 0.02214))
    squared = GuaranteeReport("pro-cp2", GuaranteeType.SQUARED_COVERAGE, 0.2, 0.1)
    assert squared.effective_level == pytest.approx(0.04 + 0.2)
    pac = GuaranteeReport("mcar-pac", GuaranteeType.MCAR_PAC, 0.2, delta=0.1)
    assert pac.effective_level == pytest.approx(0.9)
    record = pac.as_record()
    assert record["guarantee_type"] == "mcar-pac"
    assert record["delta"] == "0.1"
    assert record["approximate"] == "false"


def test_interval_semantics():
    """Empty, unbounded and shifted intervals."""
    assert Interval.empty().is_empty and Interval.empty().width == 0.0
    assert Interval.whole_line().width == math.inf
    interval = Interval(3.0, 7.0)
    assert interval.contains(3.0) and not interval.contains(7.5)
    assert interval.shift(-2.0) == Interval(1.0, 5.0)
    assert Interval.empty().shift(4.0).is_empty


def test_prediction_rule_from_thresholds():
    """Thresholds are sorted by index and frozen."""
    rule = PredictionRule.from_thresholds({4: 2.0, 1: math.inf}, score_id="s")
    assert list(rule.indices) == [1, 4]
    assert list(rule.values) == [math.inf, 2.0]
    assert rule.covers(4, 2.0) and not rule.covers(4, 2.5)
    with pytest.raises(TypeError):
        rule.thresholds[1] = 0.0
    assert PredictionRule.empty().is_empty
    assert set(PredictionRule.uniform([0, 2], 1.5).thresholds.values()) == {1.5}


@pytest.fixture(name="dataset")
def fixture_dataset():
    """Six rows, two missing outcomes."""
    return MaskedDataset.build(
        np.arange(6.0), [1, 0, 1, 1, 0, 1], [1.0, 99.0, 3.0, 4.0, np.nan, 6.0]
    )


def test_masked_dataset_hides_missing_outcomes(dataset):
    """Outcomes at mask 0 are discarded and cannot be read."""
    assert dataset.n == 6 and dataset.d == 1
    assert list(dataset.missing_indices) == [1, 4]
    assert dataset.n_missing == 2 and dataset.n_observed == 4
    assert np.isnan(dataset.outcomes[1])
    assert dataset.outcome(3) == 4.0
    with pytest.raises(MissingOutcomeError):
        dataset.outcome(1)


def test_masked_dataset_is_read_only(dataset):
    """Arrays are frozen after build."""
    with pytest.raises(ValueError):
        dataset.features[0, 0] = 10.0


def test_masked_dataset_rejects_bad_shapes():
    """Length mismatches raise DimensionMismatchError."""
    with pytest.raises(DimensionMismatchError):
        MaskedDataset.build(np.zeros((3, 2)), [1, 0], [1.0, 2.0])
    with pytest.raises(ValueError):
        MaskedDataset.build(np.zeros(2), [1, 2], [1.0, 2.0])


def test_split_is_seeded_and_keeps_row_ids(dataset):
    """Same seed, same split; row ids survive and parts are disjoint."""
    train, cal = dataset.split(0.5, seed=11)
    again_train, _ = dataset.split(0.5, seed=11)
    assert list(train.row_ids) == list(again_train.row_ids)
    assert sorted(list(train.row_ids) + list(cal.row_ids)) == list(range(6))
    assert train.n == 3 and cal.n == 3
    with pytest.raises(InvalidLevelError):
        dataset.split(1.0)
