"""
Datasets with outcomes missing at random.

A MaskedDataset holds the observable triple (X_i, A_i, Y_i A_i): a feature matrix,
the missingness indicator (1 = outcome observed) and the outcomes, which are
stored as NaN wherever the indicator is 0 and can never be read there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from model.core.errors import DimensionMismatchError, InvalidLevelError, MissingOutcomeError


@dataclass(frozen=True, eq=False)
class MaskedDataset:
    """
    Features, missingness mask and partially observed outcomes.

    Attributes:
        features (np.ndarray): n x d float matrix.
        mask (np.ndarray): Length-n int8 vector in {0, 1}.
        outcomes (np.ndarray): Length-n float vector, NaN where mask is 0.
        row_ids (np.ndarray): Length-n identifiers carried through subsetting.
    """

    features: np.ndarray
    mask: np.ndarray
    outcomes: np.ndarray
    row_ids: np.ndarray

    @classmethod
    def build(cls, features, mask, outcomes, row_ids=None):
        """
        Validates and freezes raw arrays into a dataset.

        Args:
            features: n x d (or length-n, treated as d = 1) array of reals.
            mask: Length-n 0/1 vector.
            outcomes: Length-n vector; entries where mask is 0 are discarded.
            row_ids: Optional identifiers, defaulting to 0..n-1.

        Raises:
            DimensionMismatchError: When lengths disagree or n is zero.
            ValueError: When the mask is not 0/1 or an observed outcome is not finite.
        """
        features = np.asarray(features, dtype=float)
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        if features.ndim != 2:
            raise DimensionMismatchError("features must be a 1-d or 2-d array")
        mask = np.asarray(mask)
        outcomes = np.asarray(outcomes, dtype=float).ravel()
        n = features.shape[0]
        if n < 1:
            raise DimensionMismatchError("a dataset needs at least one row")
        if mask.shape != (n,) or outcomes.shape != (n,):
            raise DimensionMismatchError(
                f"features have {n} rows, mask {mask.size} entries, outcomes {outcomes.size}"
            )
        if not np.isin(mask, (0, 1)).all():
            raise ValueError("mask entries must be 0 or 1")
        mask = mask.astype(np.int8)
        observed = mask == 1
        if not np.isfinite(outcomes[observed]).all():
            raise ValueError("observed outcomes must be finite")
        outcomes = np.where(observed, outcomes, np.nan)
        if row_ids is None:
            row_ids = np.arange(n)
        row_ids = np.asarray(row_ids)
        if row_ids.shape != (n,):
            raise DimensionMismatchError("row_ids must have one entry per row")
        for array in (features, mask, outcomes, row_ids):
            array.setflags(write=False)
        return cls(features=features, mask=mask, outcomes=outcomes, row_ids=row_ids)

    @property
    def n(self):
        """int: Number of rows."""
        return int(self.features.shape[0])

    @property
    def d(self):
        """int: Feature dimension."""
        return int(self.features.shape[1])

    @property
    def missing_indices(self):
        """np.ndarray: I_{A=0}, indices with unobserved outcomes."""
        return np.flatnonzero(self.mask == 0)

    @property
    def observed_indices(self):
        """np.ndarray: I_{A=1}, indices with observed outcomes."""
        return np.flatnonzero(self.mask == 1)

    @property
    def n_missing(self):
        """int: N^(0)."""
        return int(self.n - self.mask.sum())

    @property
    def n_observed(self):
        """int: N^(1)."""
        return int(self.mask.sum())

    def outcome(self, index):
        """
        Returns Y_i for an observed index.

        Raises:
            MissingOutcomeError: If the outcome at index is not observed.
        """
        if self.mask[index] != 1:
            raise MissingOutcomeError(f"outcome at index {index} is not observed")
        return float(self.outcomes[index])

    def subset(self, indices):
        """Returns the rows at indices, in the given order."""
        indices = np.asarray(indices, dtype=np.int64)
        return MaskedDataset.build(
            self.features[indices],
            self.mask[indices],
            self.outcomes[indices],
            row_ids=self.row_ids[indices],
        )

    def split(self, ratio, seed=0):
        """
        Splits rows into a training part and a calibration part.

        Args:
            ratio (float): Fraction of rows sent to training, in (0, 1).
            seed (int): Seed of the shuffling permutation.

        Returns:
            tuple[MaskedDataset, MaskedDataset]: (train, calibration); each keeps
            the original row order among its rows.
        """
        if not 0 < ratio < 1:
            raise InvalidLevelError(f"split ratio must lie in (0, 1), got {ratio}")
        rng = np.random.default_rng(seed)
        permutation = rng.permutation(self.n)
        n_train = int(round(ratio * self.n))
        if n_train < 1 or n_train >= self.n:
            raise DimensionMismatchError(
                f"split ratio {ratio} leaves an empty part for n={self.n}"
            )
        train = np.sort(permutation[:n_train])
        calibration = np.sort(permutation[n_train:])
        return self.subset(train), self.subset(calibration)
