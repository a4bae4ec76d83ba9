"""
This module defines the conformal method classes shared by the command-line
front-end and the simulation lab.

Each method wraps one constructor behind an execute(context) call. The
CalibrationContext bundles everything a constructor may need (calibration data,
scores, levels, propensities, partition) so callers never dispatch on method names
themselves; that is the job of MethodFactory.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from model.core.errors import ConfigError
from model.discretize.bins import assign_bins, bin_stats, discrete_feature_bins
from model.conformal.pac import DEFAULT_BUDGET, mar_pac_small, mcar_pac
from model.conformal.split import (
    partitioned,
    pro_cp,
    simultaneous_discrete,
    split_conformal_per_feature,
)
from model.conformal.squared import pro_cp2, pro_cp2_partitioned
from model.conformal.weighted import weighted_split_conformal


@dataclass
class CalibrationContext:
    """
    Inputs of one prediction-set construction.

    Attributes:
        cal (MaskedDataset): Calibration rows.
        scores (np.ndarray): Scores aligned with cal, NaN at missing rows.
        alpha (float): Miscoverage level.
        epsilon (float): Discretization level for propensity bins.
        delta (float | None): PAC failure probability.
        propensities (np.ndarray | None): Clamped propensities of the cal rows.
        propensity_slack (float): delta_p from the odds diagnostic.
        approximate (bool): Whether propensity_slack is a sample estimate.
        partition (IndexPartition | None): Partition for the partitioned variants.
        budget (int): Placement budget of mar-pac-small.
        score_id (str): Identifier of the score model.
    """

    cal: object
    scores: np.ndarray
    alpha: float
    epsilon: float = 0.1
    delta: float | None = None
    propensities: np.ndarray | None = None
    propensity_slack: float = 0.0
    approximate: bool = False
    partition: object = None
    budget: int = DEFAULT_BUDGET
    score_id: str = "score"

    @cached_property
    def feature_bins(self):
        """BinAssignment: One bin per distinct feature row."""
        return discrete_feature_bins(self.cal)

    @cached_property
    def propensity_bins(self):
        """BinStats: eps-discretized propensity bins of the calibration rows."""
        if self.propensities is None:
            raise ConfigError("this method needs a propensity source")
        return bin_stats(assign_bins(self.propensities, self.epsilon), self.cal.mask)


class ConformalMethod:
    """
    Base class for conformal methods.

    Subclasses implement execute(context) and set name to the method key.
    """

    name = "abstract"

    def execute(self, context):
        """
        Builds the prediction rule for a calibration context.

        Args:
            context (CalibrationContext): Construction inputs.

        Returns:
            PredictionRule: The rule with its guarantee report attached.

        Raises:
            NotImplementedError: If this method is not overridden in a subclass.
        """
        raise NotImplementedError("Subclasses should implement this!")


class PerFeatureMethod(ConformalMethod):
    """Split conformal within each discrete feature value."""

    name = "per-feature"

    def execute(self, context):
        return split_conformal_per_feature(
            context.cal, context.scores, context.feature_bins, context.alpha,
            score_id=context.score_id,
        )


class SimultaneousMethod(ConformalMethod):
    """Simultaneous set over discrete feature bins, partitioned when a partition is set."""

    name = "simultaneous"

    def execute(self, context):
        if context.partition is not None:
            return partitioned(
                simultaneous_discrete, context.cal, context.scores, context.feature_bins,
                context.partition, context.alpha, score_id=context.score_id,
            )
        return simultaneous_discrete(
            context.cal, context.scores, context.feature_bins, context.alpha,
            score_id=context.score_id,
        )


class ProCPMethod(ConformalMethod):
    """pro-CP on eps-discretized propensity bins."""

    name = "pro-cp"

    def execute(self, context):
        options = dict(
            propensity_slack=context.propensity_slack,
            approximate=context.approximate,
            score_id=context.score_id,
        )
        if context.partition is not None:
            return partitioned(
                pro_cp, context.cal, context.scores, context.propensity_bins,
                context.partition, context.alpha, **options,
            )
        return pro_cp(
            context.cal, context.scores, context.propensity_bins, context.alpha, **options
        )


class ProCP2Method(ConformalMethod):
    """pro-CP2 on eps-discretized propensity bins, with alpha allocation when partitioned."""

    name = "pro-cp2"

    def execute(self, context):
        options = dict(
            propensity_slack=context.propensity_slack,
            approximate=context.approximate,
            score_id=context.score_id,
        )
        if context.partition is not None:
            return pro_cp2_partitioned(
                context.cal, context.scores, context.propensity_bins,
                context.partition, context.alpha, **options,
            )
        return pro_cp2(
            context.cal, context.scores, context.propensity_bins, context.alpha, **options
        )


class WeightedMethod(ConformalMethod):
    """Weighted split conformal with odds weights."""

    name = "weighted"

    def execute(self, context):
        if context.propensities is None:
            raise ConfigError("weighted conformal needs a propensity source")
        return weighted_split_conformal(
            context.cal, context.scores, context.propensities, context.alpha,
            score_id=context.score_id,
        )


class McarPacMethod(ConformalMethod):
    """Order-statistic PAC set under MCAR."""

    name = "mcar-pac"

    def execute(self, context):
        if context.delta is None:
            raise ConfigError("mcar-pac requires delta")
        return mcar_pac(
            context.cal, context.scores, context.alpha, context.delta,
            score_id=context.score_id,
        )


class MarPacSmallMethod(ConformalMethod):
    """
    Exhaustive PAC set under MAR.

    Uses the propensity bins when propensities are available and the discrete
    feature bins otherwise.
    """

    name = "mar-pac-small"

    def execute(self, context):
        if context.delta is None:
            raise ConfigError("mar-pac-small requires delta")
        bins = (
            context.propensity_bins if context.propensities is not None
            else context.feature_bins
        )
        return mar_pac_small(
            context.cal, context.scores, bins, context.alpha, context.delta,
            budget=context.budget, score_id=context.score_id,
        )
