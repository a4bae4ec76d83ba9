"""
Data-generating processes for the simulation lab.

Every process draws features, a missingness indicator A ~ Bernoulli(p(X)) and
outcomes, and returns the observable MaskedDataset together with the hidden truth
(full outcomes and true propensities). The truth is for evaluation only and is
never handed to a constructor.

Classes:
    DgpSpec: Kind, sample size, seed and parameters of a process.
    SimulatedData: Observable dataset plus hidden truth.
    DataGeneratingProcess: Base class.
    SettingOne, SettingTwo: Uniform features on [0, 10], heteroscedastic normal outcomes.
    HighDimLogistic: Gaussian features in 30 dimensions, logistic missingness.
    SemiSynthetic: A fixed complete dataset with logistic missingness redrawn per call.
    CustomDgp: Built from user callables.

Functions:
    build_dgp(spec): Factory from a DgpSpec.
    generate(spec): One draw, deterministic given spec.seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from model.core.errors import NotResamplableError, PropensityRangeError
from model.core.masked_dataset import MaskedDataset
from model.propensity.propensity_models import KnownPropensity

SETTING_LOW, SETTING_HIGH = 0.0, 10.0


@dataclass(frozen=True)
class DgpSpec:
    """
    Attributes:
        kind (str): setting1, setting2, highdim-logistic, semi-synthetic or custom.
        n (int): Rows per draw.
        seed (int): Seed of the process parameters and of generate().
        params (dict): Kind-specific parameters.
    """

    kind: str
    n: int = 500
    seed: int = 0
    params: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class SimulatedData:
    """
    Attributes:
        dataset (MaskedDataset): What a constructor may see.
        full_outcomes (np.ndarray): Every outcome, including the missing ones.
        propensities (np.ndarray): True P(A = 1 | X) per row.
    """

    dataset: MaskedDataset
    full_outcomes: np.ndarray
    propensities: np.ndarray


class DataGeneratingProcess:
    """
    Base class for data-generating processes.

    Subclasses implement sample_features, propensity and sample_outcomes.
    """

    kind = "abstract"

    def sample_features(self, rng, n):
        """Draws an n x d feature matrix."""
        raise NotImplementedError("Subclasses should implement this!")

    def propensity(self, features):
        """True P(A = 1 | X) for an n x d matrix."""
        raise NotImplementedError("Subclasses should implement this!")

    def sample_outcomes(self, rng, features):
        """Draws outcomes given features."""
        raise NotImplementedError("Subclasses should implement this!")

    def propensity_model(self, clamp=1e-3):
        """The true propensity as a PropensityModel."""
        return KnownPropensity(self.propensity, clamp=clamp, name=self.kind)

    def resample_features(self, rng, bin_index, epsilon):
        """
        Redraws features from their law conditional on the propensity bin.

        Raises:
            NotResamplableError: For processes without a within-bin sampler.
        """
        raise NotResamplableError(
            f"{self.kind} does not support feature resampling within propensity bins"
        )

    def checked_propensity(self, features):
        """Evaluates the propensity and checks it lies strictly inside (0, 1)."""
        propensities = np.asarray(self.propensity(features), dtype=float).reshape(-1)
        if not ((propensities > 0) & (propensities < 1)).all():
            raise PropensityRangeError(f"{self.kind} propensity escapes (0, 1)")
        return propensities

    def draw_mask(self, rng, propensities):
        """A_i ~ Bernoulli(p_i)."""
        return (rng.random(propensities.size) < propensities).astype(np.int8)

    def assemble(self, features, mask, outcomes, propensities):
        """Packs one draw into SimulatedData."""
        dataset = MaskedDataset.build(features, mask, outcomes)
        return SimulatedData(
            dataset=dataset,
            full_outcomes=np.asarray(outcomes, dtype=float),
            propensities=propensities,
        )

    def generate(self, n, rng):
        """Draws (X, A, Y) for n rows."""
        features = self.sample_features(rng, n)
        propensities = self.checked_propensity(features)
        mask = self.draw_mask(rng, propensities)
        outcomes = self.sample_outcomes(rng, features)
        return self.assemble(features, mask, outcomes, propensities)


class UniformSetting(DataGeneratingProcess):
    """X ~ Unif[0, 10], Y | X ~ N(X, (3 + X)^2)."""

    def sample_features(self, rng, n):
        return rng.uniform(SETTING_LOW, SETTING_HIGH, size=(n, 1))

    def sample_outcomes(self, rng, features):
        x = features[:, 0]
        return rng.normal(x, 3.0 + x)


class SettingOne(UniformSetting):
    """
    Linear propensity p(x) = 0.9 - 0.02 x, between 0.7 and 0.9.

    The propensity is decreasing, so each propensity bin is an interval of x and
    features can be redrawn within a bin by uniform sampling on that interval.
    """

    kind = "setting1"

    def propensity(self, features):
        return 0.9 - 0.02 * np.asarray(features, dtype=float)[:, 0]

    def bin_interval(self, k, epsilon):
        """The x-interval of propensity bin k, clipped to [0, 10]."""
        odds_low, odds_high = (1.0 + epsilon) ** k, (1.0 + epsilon) ** (k + 1)
        p_low, p_high = odds_low / (1.0 + odds_low), odds_high / (1.0 + odds_high)
        x_low = max(SETTING_LOW, (0.9 - p_high) / 0.02)
        x_high = min(SETTING_HIGH, (0.9 - p_low) / 0.02)
        return x_low, x_high

    def resample_features(self, rng, bin_index, epsilon):
        bin_index = np.asarray(bin_index)
        features = np.empty((bin_index.size, 1))
        for k in np.unique(bin_index):
            members = np.flatnonzero(bin_index == k)
            low, high = self.bin_interval(int(k), epsilon)
            features[members, 0] = rng.uniform(low, high, size=members.size)
        return features


class SettingTwo(UniformSetting):
    """Oscillating propensity p(x) = 0.8 - 0.1 (1 + 0.1 x) sin(3x)."""

    kind = "setting2"

    def propensity(self, features):
        x = np.asarray(features, dtype=float)[:, 0]
        return 0.8 - 0.1 * (1.0 + 0.1 * x) * np.sin(3.0 * x)


class HighDimLogistic(DataGeneratingProcess):
    """
    X ~ N(1, 2 I_d), Y | X ~ N(beta_0 + beta . X, sigma_X^2) with sigma_X = |X|^2 / d,
    and A | X logistic with gamma_0 = 1.2 and gamma = (0.2, -0.3, 0.2, 0, ..., 0).

    beta is drawn once from Unif(-2, 2)^d with the process seed.
    """

    kind = "highdim-logistic"

    def __init__(self, d=30, seed=0, beta_0=5.0, gamma_0=1.2, gamma_head=(0.2, -0.3, 0.2)):
        self.d = d
        self.beta_0 = beta_0
        self.beta = np.random.default_rng([seed, 7]).uniform(-2.0, 2.0, size=d)
        self.gamma_0 = gamma_0
        self.gamma = np.zeros(d)
        self.gamma[: len(gamma_head)] = gamma_head

    def sample_features(self, rng, n):
        return rng.normal(1.0, np.sqrt(2.0), size=(n, self.d))

    def propensity(self, features):
        return expit(self.gamma_0 + np.asarray(features, dtype=float) @ self.gamma)

    def sample_outcomes(self, rng, features):
        sigma = (features ** 2).sum(axis=1) / self.d
        return rng.normal(self.beta_0 + features @ self.beta, sigma)


class SemiSynthetic(DataGeneratingProcess):
    """
    A fixed complete dataset whose missingness is redrawn from a logistic model.

    Each draw subsamples n rows without replacement (all rows when n is at least
    the dataset size). Outcomes are fixed, so they cannot be redrawn.
    """

    kind = "semi-synthetic"

    def __init__(self, features, outcomes, intercept, coefficients):
        self.features = np.asarray(features, dtype=float)
        if self.features.ndim == 1:
            self.features = self.features.reshape(-1, 1)
        self.outcomes = np.asarray(outcomes, dtype=float)
        self.intercept = float(intercept)
        self.coefficients = np.asarray(coefficients, dtype=float)

    def propensity(self, features):
        return expit(self.intercept + np.asarray(features, dtype=float) @ self.coefficients)

    def sample_outcomes(self, rng, features):
        raise NotResamplableError("semi-synthetic outcomes are fixed and cannot be redrawn")

    def generate(self, n, rng):
        rows = self.features.shape[0]
        chosen = np.sort(rng.choice(rows, size=n, replace=False)) if n < rows else np.arange(rows)
        features = self.features[chosen]
        propensities = self.checked_propensity(features)
        mask = self.draw_mask(rng, propensities)
        return self.assemble(features, mask, self.outcomes[chosen], propensities)


class CustomDgp(DataGeneratingProcess):
    """
    A process built from three callables.

    Attributes:
        feature_sampler (Callable[[Generator, int], np.ndarray]): Draws n x d features.
        propensity_function (Callable[[np.ndarray], np.ndarray]): p(X), must stay in (0, 1).
        outcome_sampler (Callable[[Generator, np.ndarray], np.ndarray]): Draws Y given X.
    """

    kind = "custom"

    def __init__(self, feature_sampler, propensity_function, outcome_sampler):
        self.feature_sampler = feature_sampler
        self.propensity_function = propensity_function
        self.outcome_sampler = outcome_sampler

    def sample_features(self, rng, n):
        features = np.asarray(self.feature_sampler(rng, n), dtype=float)
        return features.reshape(n, -1)

    def propensity(self, features):
        return self.propensity_function(features)

    def sample_outcomes(self, rng, features):
        return np.asarray(self.outcome_sampler(rng, features), dtype=float).reshape(-1)


def build_dgp(spec):
    """
    Creates the process described by a DgpSpec.

    Raises:
        ValueError: If the kind is unknown.
    """
    params = dict(spec.params)
    if spec.kind == "setting1":
        return SettingOne()
    if spec.kind == "setting2":
        return SettingTwo()
    if spec.kind == "highdim-logistic":
        return HighDimLogistic(seed=spec.seed, **params)
    if spec.kind == "semi-synthetic":
        return SemiSynthetic(**params)
    if spec.kind == "custom":
        return CustomDgp(**params)
    raise ValueError(f"Unknown DGP kind: {spec.kind}")


def generate(spec, rng=None):
    """
    Draws one dataset of spec.n rows.

    Args:
        spec (DgpSpec): The process.
        rng (np.random.Generator | None): Stream to draw from; defaults to one
            seeded with spec.seed, so generate(spec) is reproducible.
    """
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    return build_dgp(spec).generate(spec.n, rng)
