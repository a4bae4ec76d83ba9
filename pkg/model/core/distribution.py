"""
Weighted discrete distributions and their generalized quantile.

Every prediction set in this library has the form {y : s(x, y) <= Q(P)}, where P is
a finite mixture of point masses on observed scores, possibly carrying mass at
+infinity. This module provides that object and the two operations applied to it.

Classes:
    WeightedDiscreteDist: Immutable canonical list of (value, weight) atoms.

Functions:
    weighted_quantile(dist, level): inf{t : P(T <= t) >= level}.
    tv_distance(p, q): Total-variation distance between two distributions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from model.core.errors import InvalidDistributionError

MASS_TOLERANCE = 1e-9
QUANTILE_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class WeightedDiscreteDist:
    """
    A discrete distribution on the reals extended with +infinity.

    Atoms are kept sorted by value, with equal values merged and zero-weight atoms
    removed, so two distributions with the same law have identical arrays.
    Construct instances with from_atoms or point_mass.

    Attributes:
        values (np.ndarray): Strictly increasing atom locations; +inf allowed last.
        weights (np.ndarray): Positive weights summing to one.
    """

    values: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_atoms(cls, values, weights):
        """
        Builds a canonical distribution from possibly unsorted, repeated atoms.

        Args:
            values: Atom locations (finite reals or +inf).
            weights: Nonnegative weights; their sum must be 1 within 1e-9.

        Returns:
            WeightedDiscreteDist: The normalized, merged distribution.

        Raises:
            InvalidDistributionError: On negative, NaN or -inf entries, length
                mismatch, or a total mass away from one.
        """
        values = np.asarray(values, dtype=float).ravel()
        weights = np.asarray(weights, dtype=float).ravel()
        if values.shape != weights.shape:
            raise InvalidDistributionError(
                f"{values.size} values but {weights.size} weights"
            )
        if np.isnan(values).any() or np.isneginf(values).any():
            raise InvalidDistributionError("atom values must be real or +inf")
        if not np.isfinite(weights).all() or (weights < 0).any():
            raise InvalidDistributionError("weights must be finite and nonnegative")
        total = math.fsum(weights.tolist())
        if abs(total - 1.0) > MASS_TOLERANCE:
            raise InvalidDistributionError(f"weights sum to {total!r}, expected 1")

        keep = weights > 0
        unique, inverse = np.unique(values[keep], return_inverse=True)
        merged = np.bincount(inverse.ravel(), weights=weights[keep], minlength=unique.size)
        merged = merged / total
        return cls(values=unique, weights=merged)

    @classmethod
    def point_mass(cls, value):
        """Returns the distribution putting all mass on a single value."""
        return cls.from_atoms([value], [1.0])

    @property
    def atoms(self):
        """list[tuple[float, float]]: The (value, weight) pairs in increasing order."""
        return list(zip(self.values.tolist(), self.weights.tolist()))

    @property
    def mass_at_infinity(self):
        """float: Weight of the +inf atom (0 when absent)."""
        if self.values.size and np.isposinf(self.values[-1]):
            return float(self.weights[-1])
        return 0.0

    def cdf(self, t):
        """Returns P(T <= t)."""
        return float(self.weights[self.values <= t].sum())

    def __len__(self):
        return int(self.values.size)


def weighted_quantile(dist, level):
    """
    Computes the generalized (inf-CDF) quantile of a weighted discrete distribution.

    Args:
        dist (WeightedDiscreteDist): The distribution.
        level (float): Any real level; values <= 0 and >= 1 are allowed.

    Returns:
        float: inf{t : P(T <= t) >= level}. Levels <= 0 give -inf and levels > 1
        give +inf. A level above the total finite mass resolves to +inf when an
        infinite atom exists and to the largest atom otherwise.
    """
    if level <= 0:
        return -math.inf
    if level > 1:
        return math.inf
    cumulative = np.cumsum(dist.weights)
    position = int(np.searchsorted(cumulative, level - QUANTILE_TOLERANCE, side="left"))
    if position >= dist.values.size:
        return float(dist.values[-1])
    return float(dist.values[position])


def tv_distance(p, q):
    """
    Total-variation distance, half the L1 distance between the two mass functions.

    Args:
        p (WeightedDiscreteDist): First distribution.
        q (WeightedDiscreteDist): Second distribution.

    Returns:
        float: A value in [0, 1].
    """
    support = np.union1d(p.values, q.values)
    p_mass = np.zeros(support.size)
    q_mass = np.zeros(support.size)
    p_mass[np.searchsorted(support, p.values)] = p.weights
    q_mass[np.searchsorted(support, q.values)] = q.weights
    return min(1.0, 0.5 * math.fsum(np.abs(p_mass - q_mass).tolist()))
