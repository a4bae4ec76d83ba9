"""
Least-squares mean function used by the residual score.

The fit uses only rows whose outcome is observed and is done by scikit-learn:
LinearRegression, or Ridge with a tiny penalty when the Gram matrix is
numerically singular. Exact rank deficiency (a column that is a linear
combination of earlier ones) is an error naming the column.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.linear_model import LinearRegression, Ridge

from model.backend.event_hub import warn
from model.core.errors import DimensionMismatchError, InsufficientDataError, RankDeficientError

RIDGE_SCALE = 1e-8
CONDITION_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class MeanModel:
    """
    Linear mean function mu(x) = intercept + x . coefficients.

    Attributes:
        intercept (float): Constant term.
        coefficients (np.ndarray): Length-d slope vector.
        ridge_penalty (float): Ridge alpha of the fit, 0 for plain least squares.
    """

    intercept: float
    coefficients: np.ndarray
    ridge_penalty: float = 0.0

    @property
    def d(self):
        """int: Feature dimension."""
        return int(self.coefficients.size)

    def predict(self, features):
        """
        Evaluates mu on one feature vector or on an n x d matrix.

        Raises:
            DimensionMismatchError: When the feature dimension differs from d.
        """
        features = np.asarray(features, dtype=float)
        single = features.ndim <= 1
        matrix = features.reshape(1, -1) if single else features
        if matrix.shape[1] != self.d:
            raise DimensionMismatchError(
                f"mean model expects {self.d} features, got {matrix.shape[1]}"
            )
        values = self.intercept + matrix @ self.coefficients
        return float(values[0]) if single else values

    def as_record(self):
        """Returns the model as a flat dict of strings."""
        return {
            "kind": "mean-lsq",
            "intercept": repr(float(self.intercept)),
            "coefficients": " ".join(repr(float(c)) for c in self.coefficients),
            "ridge_penalty": repr(float(self.ridge_penalty)),
        }

    @classmethod
    def from_record(cls, record):
        """Rebuilds a model from as_record output."""
        coefficients = np.array([float(c) for c in record["coefficients"].split()], dtype=float)
        return cls(
            intercept=float(record["intercept"]),
            coefficients=coefficients,
            ridge_penalty=float(record.get("ridge_penalty", 0.0)),
        )


def _first_dependent_column(design):
    rank = 0
    for column in range(design.shape[1]):
        current = np.linalg.matrix_rank(design[:, : column + 1])
        if current == rank:
            return column
        rank = current
    return None


def fit_mean_lsq(train):
    """
    Ordinary least squares of outcome on features over the observed rows.

    Args:
        train (MaskedDataset): Training split, disjoint from calibration.

    Returns:
        MeanModel: The fitted model.

    Raises:
        InsufficientDataError: Fewer than d + 1 observed rows.
        RankDeficientError: A design column (0 = intercept, j = feature j - 1)
            depends linearly on the previous ones.
    """
    observed = train.observed_indices
    if observed.size < train.d + 1:
        raise InsufficientDataError(
            f"least squares needs at least {train.d + 1} observed rows, got {observed.size}"
        )
    features = train.features[observed]
    outcomes = train.outcomes[observed]
    design = np.column_stack([np.ones(observed.size), features])

    dependent = _first_dependent_column(design)
    if dependent is not None:
        name = "intercept" if dependent == 0 else f"feature {dependent - 1}"
        raise RankDeficientError(
            f"design matrix is rank deficient at column {dependent} ({name})", column=dependent
        )

    gram = design.T @ design
    penalty = 0.0
    if np.linalg.cond(gram) > CONDITION_LIMIT:
        penalty = RIDGE_SCALE * float(np.trace(gram)) / design.shape[1]
        warn(
            "ridge-fallback",
            f"near-singular least-squares design, ridge penalty {penalty:.3g} added",
            penalty=penalty,
        )
        regression = Ridge(alpha=penalty, solver="cholesky")
    else:
        regression = LinearRegression()
    regression.fit(features, outcomes)
    return MeanModel(
        intercept=float(regression.intercept_),
        coefficients=np.asarray(regression.coef_, dtype=float).reshape(-1).copy(),
        ridge_penalty=penalty,
    )
