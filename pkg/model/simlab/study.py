"""
Monte-Carlo studies over repeated draws of a data-generating process.

A study fits the score (and, when estimated, the propensity) once on a training
draw, then repeats: draw a calibration dataset, build the prediction rule, and
score it against the hidden outcomes. Trial t draws from the stream seeded with
(seed, 1, t), so serial and parallel runs give the same trials, and all aggregates
use exactly rounded sums so trial order does not matter.

Classes:
    MethodConfig: Constructor and propensity settings of a study.
    FittedModels: Score and propensity models shared by all trials.
    StudySummary: Per-trial metrics and aggregates with standard errors.
    ConditionalCoverageResult: Bin- or feature-conditional coverage estimates.
    FrontierPoint: One (method, alpha) point of a coverage/width sweep.

Functions:
    run_study, conditional_coverage_study, frontier_study, histograms.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from model.backend.event_hub import EventHub, warn
from model.conformal.method_factory import PROPENSITY_METHODS, MethodFactory
from model.conformal.methods import CalibrationContext
from model.conformal.partition import contiguous_partition
from model.core.errors import InsufficientDataError
from model.core.levels import check_alpha
from model.discretize.bins import assign_bins
from model.propensity.odds import odds_diagnostic_from_values
from model.propensity.propensity_models import DEFAULT_CLAMP, fit_kernel, fit_logistic
from model.scores.mean_model import fit_mean_lsq
from model.scores.score_model import ResidualScore
from model.simlab.dgp import build_dgp
from model.simlab.metrics import evaluate

COVERAGE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class MethodConfig:
    """
    Attributes:
        method (str): Method key understood by MethodFactory.
        alpha (float): Miscoverage level.
        epsilon (float): Propensity discretization level.
        delta (float | None): PAC failure probability.
        block_size (int | None): Contiguous partition block size; None disables
            partitioning.
        shuffle_partition (bool): Cut a seeded permutation into blocks.
        propensity (str): known, kernel or logistic.
        clamp (float): eta for propensity models.
        bandwidth_grid (tuple | None): Kernel bandwidth candidates.
        budget (int): mar-pac-small placement budget.
    """

    method: str
    alpha: float = 0.2
    epsilon: float = 0.1
    delta: float | None = None
    block_size: int | None = 50
    shuffle_partition: bool = False
    propensity: str = "known"
    clamp: float = DEFAULT_CLAMP
    bandwidth_grid: tuple | None = None
    budget: int = 10 ** 6


@dataclass(frozen=True)
class FittedModels:
    """
    Attributes:
        score (ResidualScore): Residual score around the training mean fit.
        propensity (PropensityModel): Propensity handed to the constructors.
        truth (PropensityModel): True propensity, for slack diagnostics only.
        estimated (bool): Whether propensity differs from truth.
    """

    score: object
    propensity: object
    truth: object
    estimated: bool


def fit_models(dgp, config, n_train, seed):
    """
    Fits the mean model and the propensity on one training draw.

    Raises:
        ValueError: If the propensity source is unknown.
    """
    train = dgp.generate(n_train, np.random.default_rng([seed, 0])).dataset
    score = ResidualScore(fit_mean_lsq(train))
    truth = dgp.propensity_model(config.clamp)
    if config.propensity == "known":
        return FittedModels(score, truth, truth, estimated=False)
    if config.propensity == "kernel":
        estimate = fit_kernel(train, config.bandwidth_grid, seed=seed, clamp=config.clamp)
    elif config.propensity == "logistic":
        estimate = fit_logistic(train, clamp=config.clamp)
    else:
        raise ValueError(f"Unknown propensity source: {config.propensity}")
    warn(
        "approximate-slack",
        f"{config.propensity} propensity: the slack is a sample max against the true propensity",
        source=config.propensity,
    )
    return FittedModels(score, estimate, truth, estimated=True)


def construct(data, config, models, partition_seed=0):
    """
    Builds the prediction rule of one calibration draw.

    Returns:
        PredictionRule: The rule for data.dataset.
    """
    cal = data.dataset
    scores = models.score.dataset_scores(cal)
    propensities = None
    slack = 0.0
    needs_propensity = config.method in PROPENSITY_METHODS or config.method == "mar-pac-small"
    if needs_propensity:
        propensities = models.propensity.for_dataset(cal)
        if models.estimated:
            slack = odds_diagnostic_from_values(
                models.truth.for_dataset(cal), propensities
            ).delta_hat
    partition = None
    if config.block_size:
        partition = contiguous_partition(
            cal.n, config.block_size, shuffle=config.shuffle_partition, seed=partition_seed
        )
    context = CalibrationContext(
        cal=cal,
        scores=scores,
        alpha=config.alpha,
        epsilon=config.epsilon,
        delta=config.delta,
        propensities=propensities,
        propensity_slack=slack,
        approximate=models.estimated,
        partition=partition,
        budget=config.budget,
        score_id=models.score.score_id,
    )
    return MethodFactory.create_method(config.method).execute(context)


def true_bins(data, config):
    """Propensity bin of every row under the true propensity."""
    propensities = np.clip(data.propensities, config.clamp, 1.0 - config.clamp)
    return assign_bins(propensities, config.epsilon).bin_index


def run_trial(dgp, n, config, models, seed, trial):
    """
    One trial of a study.

    Returns:
        tuple[TrialMetrics, list[str]]: Metrics and the kinds of warnings raised.
    """
    rng = np.random.default_rng([seed, 1, trial])
    with EventHub.get_instance().capture() as collector:
        data = dgp.generate(n, rng)
        rule = construct(data, config, models, partition_seed=int(rng.integers(2 ** 31)))
        metrics = evaluate(rule, data, models.score, bins=true_bins(data, config))
    return metrics, [event.kind for event in collector.warnings()]


def mean_and_se(values):
    """Exactly rounded mean and standard error (0 for a single value)."""
    values = [float(v) for v in values if not math.isnan(v)]
    if not values:
        return math.nan, math.nan
    mean = math.fsum(values) / len(values)
    if len(values) == 1:
        return mean, 0.0
    if not math.isfinite(mean):
        return mean, math.nan
    variance = math.fsum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return mean, math.sqrt(variance / len(values))


def republish(warning_kinds):
    """Publishes each warning kind collected inside trials once, with its count."""
    for kind, count in sorted(Counter(warning_kinds).items()):
        warn(kind, f"{kind} raised in {count} trial evaluation(s)", count=count)


@dataclass(frozen=True)
class StudySummary:
    """
    Aggregates of a study; every statistic comes with its Monte-Carlo standard error.

    Attributes:
        method (str): Method key.
        alpha (float): Nominal level.
        trials (tuple[TrialMetrics, ...]): Per-trial metrics in trial order.
        warning_counts (dict[str, int]): Warnings raised across trials.
    """

    method: str
    alpha: float
    trials: tuple
    warning_counts: dict = field(default_factory=dict)

    @property
    def n_trials(self):
        """int: Number of trials."""
        return len(self.trials)

    def coverage(self):
        """(mean coverage, SE)."""
        return mean_and_se([t.coverage for t in self.trials])

    def prob_coverage(self):
        """(P(coverage >= 1 - alpha), SE)."""
        target = 1.0 - self.alpha - COVERAGE_TOLERANCE
        return mean_and_se([1.0 if t.coverage >= target else 0.0 for t in self.trials])

    def median_width(self):
        """(mean median width, SE); trials without missing outcomes are skipped."""
        return mean_and_se([t.median_width for t in self.trials])

    def squared_miscoverage(self):
        """(mean of (1 - coverage)^2, SE)."""
        return mean_and_se([t.squared_miscoverage for t in self.trials])

    def as_row(self):
        """Flat dict suitable for a summary table."""
        row = {"method": self.method, "alpha": self.alpha, "trials": self.n_trials}
        for name, (mean, se) in (
            ("prob_coverage", self.prob_coverage()),
            ("mean_coverage", self.coverage()),
            ("median_width", self.median_width()),
            ("squared_miscoverage", self.squared_miscoverage()),
        ):
            row[name] = mean
            row[f"{name}_se"] = se
        return row


def run_study(spec, config, n_trials, seed, n_train=500, threads=1):
    """
    Repeats generate -> construct -> evaluate n_trials times.

    Args:
        spec (DgpSpec): Process and calibration size.
        config (MethodConfig): Method settings.
        n_trials (int): Number of trials, >= 1.
        seed (int): Master seed.
        n_train (int): Size of the shared training draw.
        threads (int): joblib workers.

    Returns:
        StudySummary: Per-trial metrics and aggregates.
    """
    if n_trials < 1:
        raise InsufficientDataError(f"a study needs at least one trial, got {n_trials}")
    check_alpha(config.alpha, allow_zero=config.method == "mar-pac-small")
    dgp = build_dgp(spec)
    models = fit_models(dgp, config, n_train, seed)
    results = Parallel(n_jobs=threads)(
        delayed(run_trial)(dgp, spec.n, config, models, seed, trial)
        for trial in range(n_trials)
    )
    kinds = [kind for _, trial_kinds in results for kind in trial_kinds]
    republish(kinds)
    return StudySummary(
        method=config.method,
        alpha=config.alpha,
        trials=tuple(metrics for metrics, _ in results),
        warning_counts=dict(Counter(kinds)),
    )


@dataclass(frozen=True, eq=False)
class ConditionalCoverageResult:
    """
    Attributes:
        method (str): Method key.
        estimates (np.ndarray): Conditional coverage estimate per outer trial.
        standard_errors (np.ndarray): Inner Monte-Carlo SE per outer trial.
        certified_level (float): 1 - alpha - epsilon.
        outcome_only (bool): True for feature-conditional estimates.
    """

    method: str
    estimates: np.ndarray
    standard_errors: np.ndarray
    certified_level: float
    outcome_only: bool


def conditional_trial(dgp, n, config, models, seed, outer, n_inner, outcome_only):
    """
    Freezes (bins, A) of one outer draw and averages coverage over inner redraws.

    Returns:
        tuple[float, float, list[str]]: Estimate, its SE and warning kinds.
    """
    base = dgp.generate(n, np.random.default_rng([seed, 2, outer]))
    mask = base.dataset.mask
    frozen_bins = true_bins(base, config)
    coverages = []
    with EventHub.get_instance().capture() as collector:
        for inner in range(n_inner):
            rng = np.random.default_rng([seed, 3, outer, inner])
            if outcome_only:
                features = base.dataset.features
            else:
                features = dgp.resample_features(rng, frozen_bins, config.epsilon)
            outcomes = dgp.sample_outcomes(rng, features)
            data = dgp.assemble(features, mask, outcomes, dgp.checked_propensity(features))
            rule = construct(data, config, models, partition_seed=outer)
            coverages.append(evaluate(rule, data, models.score).coverage)
    estimate, se = mean_and_se(coverages)
    return estimate, se, [event.kind for event in collector.warnings()]


def conditional_coverage_study(spec, config, n_outer, n_inner, seed, outcome_only=False,
                               n_train=500, threads=1):
    """
    Estimates coverage conditional on the propensity bins and the mask.

    For each of n_outer draws of (X, A) the bins and the mask are frozen, and
    n_inner datasets are redrawn: features within their bin and outcomes given
    features, or outcomes only when outcome_only is set (coverage conditional on
    the features themselves).

    Raises:
        NotResamplableError: When the process cannot redraw what is required.
    """
    if n_outer < 1 or n_inner < 1:
        raise InsufficientDataError("conditional coverage needs n_outer >= 1 and n_inner >= 1")
    dgp = build_dgp(spec)
    models = fit_models(dgp, config, n_train, seed)
    results = Parallel(n_jobs=threads)(
        delayed(conditional_trial)(dgp, spec.n, config, models, seed, outer, n_inner, outcome_only)
        for outer in range(n_outer)
    )
    republish([kind for _, _, kinds in results for kind in kinds])
    return ConditionalCoverageResult(
        method=config.method,
        estimates=np.array([estimate for estimate, _, _ in results]),
        standard_errors=np.array([se for _, se, _ in results]),
        certified_level=1.0 - config.alpha - config.epsilon,
        outcome_only=outcome_only,
    )


@dataclass(frozen=True)
class FrontierPoint:
    """One point of a coverage/width sweep."""

    method: str
    alpha: float
    mean_coverage: float
    mean_median_width: float


def frontier_study(spec, configs, alpha_grid, n_trials, seed, n_train=500, threads=1):
    """
    Sweeps alpha for several methods and records (mean coverage, mean median width).

    Returns:
        list[FrontierPoint]: Points ordered by method, then alpha.
    """
    points = []
    for config in configs:
        for alpha in alpha_grid:
            summary = run_study(
                spec, replace(config, alpha=float(alpha)), n_trials, seed,
                n_train=n_train, threads=threads,
            )
            points.append(
                FrontierPoint(
                    config.method, float(alpha), summary.coverage()[0], summary.median_width()[0]
                )
            )
    return points


def histograms(summary, n_bins=20):
    """
    Plot-ready histograms of the trial coverage proportions and median widths.

    Returns:
        dict[str, pd.DataFrame]: "coverage" and "median_width" tables with
        columns left, right and count. Unbounded widths are counted in a final row
        whose edges are both +inf.
    """
    coverage = np.array([t.coverage for t in summary.trials])
    counts, edges = np.histogram(coverage, bins=n_bins, range=(0.0, 1.0))
    tables = {
        "coverage": pd.DataFrame({"left": edges[:-1], "right": edges[1:], "count": counts})
    }
    widths = np.array([t.median_width for t in summary.trials])
    widths = widths[~np.isnan(widths)]
    finite = widths[np.isfinite(widths)]
    if finite.size:
        counts, edges = np.histogram(finite, bins=n_bins)
    else:
        counts, edges = np.zeros(0, dtype=np.int64), np.zeros(1)
    table = pd.DataFrame({"left": edges[:-1], "right": edges[1:], "count": counts})
    infinite = int(np.isinf(widths).sum())
    table = pd.concat(
        [table, pd.DataFrame({"left": [math.inf], "right": [math.inf], "count": [infinite]})],
        ignore_index=True,
    )
    tables["median_width"] = table
    return tables
