"""
Odds-ratio diagnostic between a reference propensity and an estimate.

f(x) = [p(x) / (1 - p(x))] / [p_hat(x) / (1 - p_hat(x))]. The slack entering the
coverage guarantees of the estimated-propensity constructors is
delta = exp(2 * sup |log f|) - 1. Only a maximum over finitely many evaluation
points is available, which is a lower bound on the sup-norm; guarantees built on
it are labelled approximate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logit

from model.core.errors import DimensionMismatchError, InsufficientDataError


@dataclass(frozen=True)
class OddsDiagnostic:
    """
    Attributes:
        max_abs_log_f (float): Sample max of |log f| over the evaluation points.
        delta_hat (float): exp(2 * max_abs_log_f) - 1.
        n_points (int): Number of evaluation points.
    """

    max_abs_log_f: float
    delta_hat: float
    n_points: int = 0

    @classmethod
    def from_max(cls, max_abs_log_f, n_points=0):
        """Builds the diagnostic, deriving delta_hat from its definition."""
        max_abs_log_f = float(max_abs_log_f)
        return cls(
            max_abs_log_f=max_abs_log_f,
            delta_hat=math.exp(2 * max_abs_log_f) - 1,
            n_points=n_points,
        )

    @property
    def approximate(self):
        """bool: Always True; the slack comes from a sample max, not a certified sup."""
        return True


def odds_diagnostic_from_values(truth, estimate):
    """
    Computes the diagnostic from two aligned arrays of propensities.

    Raises:
        InsufficientDataError: When no points are given.
        DimensionMismatchError: When the arrays differ in length.
    """
    truth = np.asarray(truth, dtype=float).ravel()
    estimate = np.asarray(estimate, dtype=float).ravel()
    if truth.size == 0:
        raise InsufficientDataError("odds diagnostic needs at least one evaluation point")
    if truth.shape != estimate.shape:
        raise DimensionMismatchError(
            f"{truth.size} reference propensities but {estimate.size} estimates"
        )
    log_f = logit(truth) - logit(estimate)
    return OddsDiagnostic.from_max(np.abs(log_f).max(), n_points=truth.size)


def odds_diagnostic(truth, estimate, eval_points):
    """
    Evaluates both models on eval_points and summarizes |log f|.

    Args:
        truth (PropensityModel): Reference propensity.
        estimate (PropensityModel): Estimated propensity.
        eval_points (np.ndarray): n x d evaluation features, typically the union
            of calibration features.

    Returns:
        OddsDiagnostic: Max |log f| and the implied delta.
    """
    eval_points = np.asarray(eval_points, dtype=float)
    if eval_points.ndim == 1:
        eval_points = eval_points.reshape(-1, 1)
    return odds_diagnostic_from_values(truth.predict(eval_points), estimate.predict(eval_points))
