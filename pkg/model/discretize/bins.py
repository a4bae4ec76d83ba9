"""
Bin assignment and per-bin counting.

Propensity bins come from the geometric odds grid z_k = (1 + eps)^k: a point with
propensity p lands in the unique k with z_k <= p / (1 - p) < z_{k+1}. Discrete
features use one bin per distinct feature row instead. Either way the conformal
constructors only need the bin index of each point and the per-bin counts.

Classes:
    BinAssignment: Bin index per point (eps is None for feature bins).
    BinStats: Per-bin totals, missing and observed counts.

Functions:
    assign_bins(propensities, epsilon): eps-discretization of propensities.
    bin_stats(assignment, mask): Counts per occupied bin.
    discrete_feature_bins(dataset): One bin per distinct feature row.
    balancing_gap(...): Exact TV gap between observed and missing outcome laws in a bin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.special import logit

from model.core.distribution import WeightedDiscreteDist, tv_distance
from model.core.errors import DimensionMismatchError, PropensityRangeError
from model.core.levels import check_epsilon

EDGE_SNAP = 1e-9


@dataclass(frozen=True, eq=False)
class BinAssignment:
    """
    Attributes:
        epsilon (float | None): Discretization level; None for discrete-feature bins.
        bin_index (np.ndarray): Integer bin id per point (sparse over the integers).
    """

    epsilon: float | None
    bin_index: np.ndarray

    @property
    def n(self):
        """int: Number of points."""
        return int(self.bin_index.size)

    @property
    def bins(self):
        """np.ndarray: Sorted distinct bin ids."""
        return np.unique(self.bin_index)

    def subset(self, indices):
        """Returns the assignment restricted to indices, in that order."""
        return BinAssignment(self.epsilon, self.bin_index[np.asarray(indices, dtype=np.int64)])


@dataclass(frozen=True, eq=False)
class BinStats:
    """
    Per-bin counts for one assignment and mask.

    Attributes:
        bins (np.ndarray): Sorted occupied bin ids k.
        totals (np.ndarray): N_k per bin.
        missing (np.ndarray): N_k^0 per bin.
        observed (np.ndarray): N_k^1 per bin.
        position (np.ndarray): For each point, the position of its bin in `bins`.
        epsilon (float | None): Discretization level of the underlying assignment.
    """

    bins: np.ndarray
    totals: np.ndarray
    missing: np.ndarray
    observed: np.ndarray
    position: np.ndarray
    epsilon: float | None = None

    @property
    def n(self):
        """int: Number of points."""
        return int(self.totals.sum())

    @property
    def n_missing(self):
        """int: N^(0)."""
        return int(self.missing.sum())

    @property
    def n_observed(self):
        """int: N^(1)."""
        return int(self.observed.sum())

    @property
    def n_bins(self):
        """int: M, the number of occupied bins."""
        return int(self.bins.size)

    def counts(self, k):
        """Returns (N_k, N_k^0, N_k^1) for bin id k."""
        where = int(np.searchsorted(self.bins, k))
        if where >= self.bins.size or self.bins[where] != k:
            return 0, 0, 0
        return int(self.totals[where]), int(self.missing[where]), int(self.observed[where])

    def as_frame(self):
        """Per-bin counts as a DataFrame indexed by bin id."""
        return pd.DataFrame(
            {"total": self.totals, "missing": self.missing, "observed": self.observed},
            index=pd.Index(self.bins, name="bin"),
        )


def assign_bins(propensities, epsilon):
    """
    eps-discretization: k_i = floor(log(p_i / (1 - p_i)) / log(1 + eps)).

    Ratios within 1e-9 of an integer are snapped onto it, so an odds value sitting
    on a grid edge z_k goes to bin k (the half-open convention).

    Raises:
        InvalidLevelError: When eps <= 0.
        PropensityRangeError: When a propensity is outside the open unit interval.
    """
    epsilon = check_epsilon(epsilon, strict=True)
    propensities = np.asarray(propensities, dtype=float).ravel()
    inside = (propensities > 0) & (propensities < 1)
    if not inside.all():
        bad = int(np.flatnonzero(~inside)[0])
        raise PropensityRangeError(
            f"propensity {propensities[bad]!r} at index {bad} is outside (0, 1)"
        )
    ratio = logit(propensities) / np.log1p(epsilon)
    nearest = np.rint(ratio)
    ratio = np.where(np.abs(ratio - nearest) <= EDGE_SNAP, nearest, ratio)
    return BinAssignment(epsilon, np.floor(ratio).astype(np.int64))


def bin_stats(assignment, mask):
    """
    Counts N_k, N_k^0 and N_k^1 for every occupied bin.

    Raises:
        DimensionMismatchError: When the mask length differs from the assignment.
    """
    mask = np.asarray(mask).ravel()
    if mask.size != assignment.n:
        raise DimensionMismatchError(
            f"assignment covers {assignment.n} points but mask has {mask.size}"
        )
    bins, position, totals = np.unique(
        assignment.bin_index, return_inverse=True, return_counts=True
    )
    position = position.ravel()
    missing = np.bincount(position, weights=(mask == 0), minlength=bins.size).astype(np.int64)
    return BinStats(
        bins=bins,
        totals=totals.astype(np.int64),
        missing=missing,
        observed=totals.astype(np.int64) - missing,
        position=position,
        epsilon=assignment.epsilon,
    )


def discrete_feature_bins(dataset):
    """
    Assigns each distinct feature row (bitwise equality) its own bin.

    Bin ids follow first occurrence: the first row gets 0, the next new row 1, ...
    """
    features = np.ascontiguousarray(dataset.features)
    tokens = features.view(np.dtype((np.void, features.dtype.itemsize * features.shape[1])))
    _, first, inverse = np.unique(tokens.ravel(), return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    relabel = np.empty_like(order)
    relabel[order] = np.arange(order.size)
    return BinAssignment(None, relabel[inverse.ravel()].astype(np.int64))


def balancing_gap(feature_probs, propensities, outcome_values, outcome_probs, members):
    """
    Exact TV distance between the outcome laws given (A=1, X in bin) and (A=0, X in bin)
    for a finite joint law of (X, Y, A) with A independent of Y given X.

    Args:
        feature_probs (np.ndarray): P(X = x_j) for each support point j.
        propensities (np.ndarray): P(A = 1 | X = x_j).
        outcome_values (np.ndarray): Support of Y (shared across x).
        outcome_probs (np.ndarray): Matrix P(Y = y_m | X = x_j), rows summing to 1.
        members (np.ndarray): Indices j of the support points inside the bin.

    Returns:
        float: TV distance in [0, 1].
    """
    members = np.asarray(members, dtype=np.int64)
    px = np.asarray(feature_probs, dtype=float)[members]
    p = np.asarray(propensities, dtype=float)[members]
    table = np.asarray(outcome_probs, dtype=float)[members]
    observed_joint = (px * p) @ table
    missing_joint = (px * (1.0 - p)) @ table
    observed = WeightedDiscreteDist.from_atoms(
        outcome_values, observed_joint / observed_joint.sum()
    )
    missing = WeightedDiscreteDist.from_atoms(outcome_values, missing_joint / missing_joint.sum())
    return tv_distance(observed, missing)
