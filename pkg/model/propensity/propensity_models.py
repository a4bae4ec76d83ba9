"""
Propensity score models x -> P(A = 1 | X = x).

Every model clamps its output to [eta, 1 - eta] so odds and bin indices stay finite.

Classes:
    PropensityModel: Base class holding the clamp.
    KnownPropensity: Closed-form propensity (simulation truth).
    ValuePropensity: Per-row propensities supplied with the data.
    LogisticPropensity: Logistic regression fitted as a statsmodels binomial GLM.
    KernelPropensity: Nadaraya-Watson estimate with a Gaussian kernel.

Functions:
    fit_logistic(train, max_iter, tol, clamp): Maximum-likelihood logistic fit.
    fit_kernel(train, bandwidth_grid, seed, clamp): Kernel fit with validation-split bandwidth.
    default_bandwidth_grid(features): 20 log-spaced bandwidths scaled to the features.
"""

from __future__ import annotations

import warnings

import numpy as np
import pandas as pd
import statsmodels.api as sm
from scipy.spatial.distance import cdist
from scipy.special import expit
from statsmodels.tools.sm_exceptions import (
    ConvergenceWarning,
    PerfectSeparationError,
    PerfectSeparationWarning,
)

from model.backend.event_hub import EventHub, warn
from model.core.errors import (
    IndexMismatchError,
    InvalidLevelError,
    PropensityRangeError,
    SeparationError,
    SingleClassError,
)

DEFAULT_CLAMP = 1e-3
SEPARATION_BOUND = 1e3
SEPARATION_FIT = 1e-6
KERNEL_CHUNK = 2048


def check_clamp(clamp):
    """Validates eta in (0, 0.5)."""
    clamp = float(clamp)
    if not 0 < clamp < 0.5:
        raise InvalidLevelError(f"propensity clamp must lie in (0, 0.5), got {clamp}")
    return clamp


class PropensityModel:
    """
    Base class for propensity models.

    Attributes:
        clamp (float): eta; outputs are clipped to [eta, 1 - eta].
    """

    kind = "abstract"

    def __init__(self, clamp=DEFAULT_CLAMP):
        self.clamp = check_clamp(clamp)

    def raw(self, features):
        """Unclamped estimate on an n x d matrix."""
        raise NotImplementedError("Subclasses should implement this!")

    def predict(self, features):
        """Clamped propensities for an n x d matrix (or one feature vector)."""
        features = np.asarray(features, dtype=float)
        single = features.ndim <= 1
        matrix = features.reshape(1, -1) if single else features
        values = np.clip(self.raw(matrix), self.clamp, 1.0 - self.clamp)
        return float(values[0]) if single else values

    def for_dataset(self, dataset):
        """Clamped propensities for every row of a MaskedDataset."""
        return self.predict(dataset.features)

    def as_record(self):
        """Returns the model as a flat dict of strings."""
        return {"kind": self.kind, "clamp": repr(self.clamp)}


class KnownPropensity(PropensityModel):
    """
    Closed-form propensity.

    Attributes:
        function (Callable[[np.ndarray], np.ndarray]): Maps an n x d matrix to n values.
    """

    kind = "known"

    def __init__(self, function, clamp=DEFAULT_CLAMP, name="known"):
        super().__init__(clamp)
        self.function = function
        self.name = name

    def raw(self, features):
        return np.asarray(self.function(features), dtype=float).reshape(-1)

    def as_record(self):
        record = super().as_record()
        record["name"] = self.name
        return record


class ValuePropensity(PropensityModel):
    """
    Propensities given per row, keyed by row id (the CSV `p` column).

    Raises:
        PropensityRangeError: When a value lies outside (0, 1).
    """

    kind = "column"

    def __init__(self, values, clamp=DEFAULT_CLAMP):
        super().__init__(clamp)
        table = pd.Series(values, dtype=float)
        bad = table[~((table > 0) & (table < 1))]
        if not bad.empty:
            raise PropensityRangeError(
                f"propensity {bad.iloc[0]!r} at row {bad.index[0]!r} is outside (0, 1)"
            )
        self.table = table

    def raw(self, features):
        raise IndexMismatchError("per-row propensities are looked up by row id")

    def for_dataset(self, dataset):
        values = self.table.reindex(dataset.row_ids).to_numpy(dtype=float)
        if np.isnan(values).any():
            raise IndexMismatchError("propensity column lacks a value for some row")
        return np.clip(values, self.clamp, 1.0 - self.clamp)


class LogisticPropensity(PropensityModel):
    """
    Logistic model p(x) = expit(intercept + x . coefficients).

    Attributes:
        intercept (float): Constant term.
        coefficients (np.ndarray): Slopes.
        converged (bool): Whether the GLM fit met its tolerance.
        n_iter (int): GLM iterations used.
    """

    kind = "logistic"

    def __init__(self, intercept, coefficients, clamp=DEFAULT_CLAMP, converged=True, n_iter=0):
        super().__init__(clamp)
        self.intercept = float(intercept)
        self.coefficients = np.asarray(coefficients, dtype=float)
        self.converged = converged
        self.n_iter = n_iter

    def raw(self, features):
        return expit(self.intercept + features @ self.coefficients)

    def as_record(self):
        record = super().as_record()
        record.update(
            intercept=repr(self.intercept),
            coefficients=" ".join(repr(float(c)) for c in self.coefficients),
            converged=str(self.converged).lower(),
            n_iter=str(self.n_iter),
        )
        return record


class KernelPropensity(PropensityModel):
    """
    Nadaraya-Watson estimate sum K_h(X_j, x) A_j / sum K_h(X_j, x), Gaussian K_h.

    Query points whose kernel weights all underflow get the training mask mean;
    each evaluation publishes one kernel-fallback warning with the count.

    Attributes:
        train_features (np.ndarray): m x d training features.
        train_mask (np.ndarray): Length-m training indicators.
        bandwidth (float): h > 0.
    """

    kind = "kernel"

    def __init__(self, train_features, train_mask, bandwidth, clamp=DEFAULT_CLAMP):
        super().__init__(clamp)
        if not bandwidth > 0:
            raise InvalidLevelError(f"bandwidth must be > 0, got {bandwidth}")
        self.train_features = np.asarray(train_features, dtype=float)
        self.train_mask = np.asarray(train_mask, dtype=float)
        self.bandwidth = float(bandwidth)

    def _estimate(self, features):
        estimates = np.empty(features.shape[0])
        fallbacks = 0
        mean = float(self.train_mask.mean())
        for start in range(0, features.shape[0], KERNEL_CHUNK):
            block = features[start:start + KERNEL_CHUNK]
            distances = cdist(block, self.train_features, "sqeuclidean")
            weights = np.exp(-distances / (2.0 * self.bandwidth ** 2))
            denominator = weights.sum(axis=1)
            empty = denominator == 0
            fallbacks += int(empty.sum())
            with np.errstate(invalid="ignore", divide="ignore"):
                values = (weights @ self.train_mask) / denominator
            estimates[start:start + block.shape[0]] = np.where(empty, mean, values)
        return estimates, fallbacks

    def raw(self, features):
        estimates, fallbacks = self._estimate(features)
        if fallbacks:
            warn(
                "kernel-fallback",
                f"{fallbacks} kernel evaluation(s) underflowed; used the training mean",
                count=fallbacks,
                bandwidth=self.bandwidth,
            )
        return estimates

    def as_record(self):
        record = super().as_record()
        record["bandwidth"] = repr(self.bandwidth)
        record["n_train"] = str(self.train_mask.size)
        return record


def fit_logistic(train, max_iter=100, tol=1e-8, clamp=DEFAULT_CLAMP):
    """
    Logistic regression of the mask on the features, fitted as a binomial GLM
    by statsmodels (iteratively reweighted least squares).

    Args:
        train (MaskedDataset): Training rows; every row contributes.
        max_iter (int): Iteration cap.
        tol (float): Deviance tolerance of the IRLS iterations.
        clamp (float): eta for the fitted model.

    Returns:
        LogisticPropensity: The fitted model, with converged and n_iter set.

    Raises:
        SingleClassError: When the mask is constant.
        SeparationError: When statsmodels detects perfect separation, the
            coefficients exceed 1e3 or the fitted probabilities reproduce the mask.
    """
    mask = train.mask.astype(float)
    if mask.min() == mask.max():
        raise SingleClassError(
            "logistic fit needs both observed and missing rows in training data"
        )
    design = sm.add_constant(np.asarray(train.features, dtype=float), has_constant="add")
    model = sm.GLM(mask, design, family=sm.families.Binomial())
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            result = model.fit(maxiter=max_iter, tol=tol)
        except PerfectSeparationError as error:
            raise SeparationError(
                "perfect separation detected in the logistic fit; "
                "use a larger clamp or the kernel estimator"
            ) from error
    categories = {type(w.message) for w in caught if isinstance(w.message, Warning)}
    params = np.asarray(result.params, dtype=float)
    fitted = np.asarray(result.fittedvalues, dtype=float)
    if (
        PerfectSeparationWarning in categories
        or not np.isfinite(params).all()
        or np.abs(params).max() > SEPARATION_BOUND
        or np.abs(mask - fitted).max() < SEPARATION_FIT
    ):
        raise SeparationError(
            "fitted propensities reproduce the mask (perfect separation); "
            "use a larger clamp or the kernel estimator"
        )
    converged = bool(getattr(result, "converged", True)) and ConvergenceWarning not in categories
    n_iter = int(result.fit_history.get("iteration", 0))
    if not converged:
        warn(
            "logistic-not-converged",
            f"IRLS stopped after {n_iter} iterations without meeting tol={tol:g}",
            max_iter=max_iter,
        )
    return LogisticPropensity(
        params[0], params[1:], clamp=clamp, converged=converged, n_iter=n_iter
    )


def default_bandwidth_grid(features):
    """Returns geomspace(0.05, 5, 20) times the root mean column variance."""
    features = np.asarray(features, dtype=float)
    scale = float(np.sqrt(features.var(axis=0).mean())) if features.shape[0] > 1 else 1.0
    if scale <= 0:
        scale = 1.0
    return np.geomspace(0.05, 5.0, 20) * scale


def fit_kernel(train, bandwidth_grid=None, seed=0, clamp=DEFAULT_CLAMP):
    """
    Nadaraya-Watson propensity estimate with a validation-split bandwidth.

    The training rows are shuffled with the given seed and cut in half; each
    bandwidth is fitted on the first half and scored by the squared error of
    predicting the mask on the second half. The smallest bandwidth among ties wins.
    The returned model uses every training row.

    Args:
        train (MaskedDataset): Training rows.
        bandwidth_grid (Sequence[float] | None): Candidate h values; None uses
            default_bandwidth_grid.
        seed (int): Seed of the split permutation.
        clamp (float): eta for the fitted model.

    Returns:
        KernelPropensity: The fitted model.

    Raises:
        InvalidLevelError: On an empty grid or a nonpositive bandwidth.
    """
    grid = default_bandwidth_grid(train.features) if bandwidth_grid is None else bandwidth_grid
    grid = np.sort(np.asarray(grid, dtype=float).ravel())
    if grid.size == 0:
        raise InvalidLevelError("bandwidth grid is empty")
    if (grid <= 0).any() or not np.isfinite(grid).all():
        raise InvalidLevelError("bandwidth grid values must be finite and > 0")
    mask = train.mask.astype(float)

    best = float(grid[0])
    if grid.size > 1 and train.n >= 2:
        order = np.random.default_rng(seed).permutation(train.n)
        half = train.n // 2
        fit_rows, valid_rows = order[:half], order[half:]
        best_error = np.inf
        with EventHub.get_instance().capture():
            for bandwidth in grid:
                candidate = KernelPropensity(
                    train.features[fit_rows], mask[fit_rows], bandwidth, clamp=clamp
                )
                predictions = candidate.raw(train.features[valid_rows])
                error = float(np.mean((predictions - mask[valid_rows]) ** 2))
                if error < best_error:
                    best, best_error = float(bandwidth), error
    return KernelPropensity(train.features, mask, best, clamp=clamp)
