"""
Nonconformity score models.

A score model maps (x, y) to a nonnegative number; smaller means y agrees better
with the fitted model at x. Prediction sets are always {y : s(x, y) <= t}, and only
the residual score turns such a set into an interval.

Classes:
    ScoreModel: Abstract base.
    ResidualScore: s(x, y) = |y - mu(x)| for a fitted MeanModel.
    UserScore: Wraps any callable s(x, y).
    TableScore: Precomputed per-row scores keyed by row id.

Functions:
    score(model, x, y): Evaluates one score.
    interval_from_threshold(model, x, t): Materializes {y : s(x, y) <= t}.
    calibration_scores(model, dataset): Scores on the observed rows, NaN elsewhere.
"""

from __future__ import annotations

import math

import numpy as np
import pandas as pd

from model.core.errors import (
    DimensionMismatchError,
    IndexMismatchError,
    ScoreKindError,
)
from model.core.prediction_rule import Interval


class ScoreModel:
    """
    Base class for score models.

    Subclasses implement values(features, outcomes), the vectorized score, and
    set kind to a short tag.
    """

    kind = "abstract"

    def __init__(self, score_id):
        self.score_id = score_id

    def values(self, features, outcomes):
        """
        Scores a batch of (x, y) pairs.

        Args:
            features (np.ndarray): n x d matrix.
            outcomes (np.ndarray): Length-n outcomes.

        Returns:
            np.ndarray: Length-n scores.
        """
        raise NotImplementedError("Subclasses should implement this!")

    def dataset_scores(self, dataset):
        """Scores every observed row of a MaskedDataset; NaN at missing rows."""
        observed = dataset.observed_indices
        scores = np.full(dataset.n, np.nan)
        if observed.size:
            scores[observed] = self.values(
                dataset.features[observed], dataset.outcomes[observed]
            )
        return scores

    def truth_scores(self, dataset, full_outcomes, indices):
        """Scores hidden outcomes at the given indices (evaluation only)."""
        indices = np.asarray(indices, dtype=np.int64)
        if indices.size == 0:
            return np.empty(0)
        return self.values(dataset.features[indices], np.asarray(full_outcomes)[indices])

    def interval(self, x, t):
        """Materializes the prediction set as an interval."""
        raise ScoreKindError(
            f"{self.kind} scores do not give interval-shaped sets; "
            "use the threshold directly"
        )


class ResidualScore(ScoreModel):
    """
    Absolute residual score around a fitted mean model.

    Attributes:
        mean_model (MeanModel): The fitted mean function.
    """

    kind = "residual"

    def __init__(self, mean_model, score_id="residual"):
        super().__init__(score_id)
        self.mean_model = mean_model

    def values(self, features, outcomes):
        features = np.asarray(features, dtype=float)
        if features.ndim == 1:
            features = features.reshape(-1, self.mean_model.d)
        return np.abs(np.asarray(outcomes, dtype=float) - self.mean_model.predict(features))

    def interval(self, x, t):
        if t == math.inf:
            return Interval.whole_line()
        if t < 0:
            return Interval.empty()
        center = self.mean_model.predict(x)
        return Interval(center - t, center + t)

    def intervals(self, features, thresholds):
        """
        Vectorized interval materialization.

        Returns:
            tuple[np.ndarray, np.ndarray]: (lower, upper); empty sets are
            (inf, -inf), +inf thresholds give (-inf, inf).
        """
        thresholds = np.asarray(thresholds, dtype=float)
        centers = self.mean_model.predict(np.asarray(features, dtype=float))
        lower = np.where(thresholds < 0, math.inf, centers - thresholds)
        upper = np.where(thresholds < 0, -math.inf, centers + thresholds)
        return lower, upper


class UserScore(ScoreModel):
    """
    Score computed by a user-supplied callable.

    Attributes:
        function (Callable[[np.ndarray, float], float]): s(x, y), must be >= 0.
    """

    kind = "user"

    def __init__(self, function, score_id="user"):
        super().__init__(score_id)
        self.function = function

    def values(self, features, outcomes):
        features = np.asarray(features, dtype=float)
        return np.array(
            [float(self.function(row, y)) for row, y in zip(features, outcomes)], dtype=float
        )


class TableScore(ScoreModel):
    """
    Precomputed scores, one per dataset row.

    The table is keyed by row id so it survives subsetting and splitting.

    Attributes:
        table (pd.Series): Score per row id.
    """

    kind = "table"

    def __init__(self, table, score_id="table"):
        super().__init__(score_id)
        self.table = pd.Series(table, dtype=float)

    def values(self, features, outcomes):
        raise ScoreKindError("table scores are looked up by row id, not computed from (x, y)")

    def dataset_scores(self, dataset):
        scores = self.table.reindex(dataset.row_ids).to_numpy(dtype=float, copy=True)
        observed = dataset.observed_indices
        if np.isnan(scores[observed]).any():
            raise IndexMismatchError("score table lacks a value for an observed row")
        scores[dataset.missing_indices] = np.nan
        return scores


def score(model, x, y):
    """
    Evaluates s(x, y) for a single point.

    Raises:
        DimensionMismatchError: When x does not match the model dimension.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if isinstance(model, ResidualScore) and x.size != model.mean_model.d:
        raise DimensionMismatchError(
            f"score model expects {model.mean_model.d} features, got {x.size}"
        )
    return float(model.values(x.reshape(1, -1), np.array([y], dtype=float))[0])


def interval_from_threshold(model, x, t):
    """
    Materializes {y : s(x, y) <= t} for a residual score.

    Returns:
        Interval: [mu(x) - t, mu(x) + t]; the whole line for t = +inf and the empty
        interval for t < 0 (including -inf).

    Raises:
        ScoreKindError: For score kinds whose sets are not intervals.
    """
    return model.interval(x, t)


def calibration_scores(model, dataset):
    """Returns S_i on observed rows and NaN on missing rows."""
    return model.dataset_scores(dataset)
