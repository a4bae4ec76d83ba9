"""
Prediction rules and the intervals they materialize into.

A PredictionRule stores one score threshold t_i per missing index; the prediction
set for Y_i is {y : s(X_i, y) <= t_i}. Thresholds may be -inf (empty set) or +inf
(the whole outcome space).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from types import MappingProxyType

import numpy as np


@dataclass(frozen=True)
class Interval:
    """
    A closed real interval, possibly empty or unbounded.

    The empty interval is represented with lower=+inf and upper=-inf.
    """

    lower: float
    upper: float

    @classmethod
    def empty(cls):
        """Returns the empty interval."""
        return cls(math.inf, -math.inf)

    @classmethod
    def whole_line(cls):
        """Returns (-inf, inf)."""
        return cls(-math.inf, math.inf)

    @property
    def is_empty(self):
        """bool: True when no real number belongs to the interval."""
        return self.lower > self.upper

    @property
    def width(self):
        """float: Lebesgue measure; 0 for the empty set, inf when unbounded."""
        if self.is_empty:
            return 0.0
        return self.upper - self.lower

    def contains(self, y):
        """Returns True when lower <= y <= upper."""
        return self.lower <= y <= self.upper

    def shift(self, offset):
        """Returns the interval translated by offset; the empty set stays empty."""
        if self.is_empty:
            return self
        return Interval(self.lower + offset, self.upper + offset)


@dataclass(frozen=True)
class PredictionRule:
    """
    Per-missing-index score thresholds produced by a conformal constructor.

    Attributes:
        thresholds (Mapping[int, float]): Missing index -> threshold t_i.
        score_id (str): Identifier of the score model the thresholds refer to.
        report (GuaranteeReport | None): Guarantee certified by the constructor.
    """

    thresholds: MappingProxyType
    score_id: str = "score"
    report: object = None
    block_levels: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))

    @classmethod
    def from_thresholds(cls, thresholds, score_id="score", report=None, block_levels=None):
        """Builds a rule from any mapping or (index, threshold) iterable."""
        items = dict(thresholds)
        frozen = MappingProxyType({int(i): float(t) for i, t in sorted(items.items())})
        levels = MappingProxyType(dict(block_levels or {}))
        return cls(thresholds=frozen, score_id=score_id, report=report, block_levels=levels)

    @classmethod
    def uniform(cls, indices, threshold, score_id="score", report=None):
        """Builds a rule assigning the same threshold to every index."""
        return cls.from_thresholds(
            {int(i): threshold for i in indices}, score_id=score_id, report=report
        )

    @classmethod
    def empty(cls, score_id="score", report=None):
        """The rule with no missing indices (a vacuous run)."""
        return cls.from_thresholds({}, score_id=score_id, report=report)

    @property
    def is_empty(self):
        """bool: True when the rule covers no index."""
        return not self.thresholds

    @property
    def indices(self):
        """np.ndarray: Sorted missing indices covered by the rule."""
        return np.fromiter(self.thresholds.keys(), dtype=np.int64, count=len(self.thresholds))

    @property
    def values(self):
        """np.ndarray: Thresholds aligned with indices."""
        return np.fromiter(self.thresholds.values(), dtype=float, count=len(self.thresholds))

    def threshold(self, index):
        """Returns t_i for a missing index."""
        return self.thresholds[int(index)]

    def covers(self, index, score):
        """Returns True when score <= t_i."""
        return score <= self.thresholds[int(index)]

    def with_report(self, report):
        """Returns a copy carrying the given guarantee report."""
        return replace(self, report=report)

    def __len__(self):
        return len(self.thresholds)
