"""
Nominal levels and the guarantee each constructor certifies.

Level holds what the caller asks for (alpha, epsilon, delta). GuaranteeReport
records what a particular run actually certifies once discretization and
propensity-estimation slack are accounted for. Effective levels are always
derived from the nominal ones, never stored independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from model.core.errors import InvalidLevelError


class GuaranteeType(str, Enum):
    """Kind of coverage statement attached to a prediction rule."""

    MEAN_COVERAGE = "mean-coverage"
    SQUARED_COVERAGE = "squared-coverage"
    MCAR_PAC = "mcar-pac"
    MAR_PAC = "mar-pac"
    MARGINAL_COVERAGE = "marginal-coverage"


def check_alpha(alpha, allow_zero=False):
    """Validates a miscoverage level, returning it as a float."""
    alpha = float(alpha)
    lower_ok = alpha >= 0 if allow_zero else alpha > 0
    if not (lower_ok and alpha < 1):
        bound = "[0, 1)" if allow_zero else "(0, 1)"
        raise InvalidLevelError(f"alpha must lie in {bound}, got {alpha}")
    return alpha


def check_delta(delta):
    """Validates a PAC failure probability, returning it as a float."""
    if delta is None:
        raise InvalidLevelError("delta is required for PAC constructions")
    delta = float(delta)
    if not 0 < delta < 1:
        raise InvalidLevelError(f"delta must lie in (0, 1), got {delta}")
    return delta


def check_epsilon(epsilon, strict=False):
    """Validates a discretization level, returning it as a float."""
    epsilon = float(epsilon)
    if epsilon < 0 or (strict and epsilon == 0) or not math.isfinite(epsilon):
        relation = "> 0" if strict else ">= 0"
        raise InvalidLevelError(f"epsilon must be finite and {relation}, got {epsilon}")
    return epsilon


def discretization_slack(epsilon, propensity_slack=0.0):
    """Returns eps + delta_p + eps * delta_p, the total slack of the discretized guarantees."""
    return epsilon + propensity_slack + epsilon * propensity_slack


@dataclass(frozen=True)
class Level:
    """
    Nominal levels requested by the caller.

    Attributes:
        alpha (float): Miscoverage level in (0, 1).
        epsilon (float): Discretization level, 0 for exact discrete features.
        delta (float | None): PAC failure probability in (0, 1), MCAR only.
    """

    alpha: float
    epsilon: float = 0.0
    delta: float | None = None

    def __post_init__(self):
        check_alpha(self.alpha)
        check_epsilon(self.epsilon)
        if self.delta is not None:
            check_delta(self.delta)


@dataclass(frozen=True)
class GuaranteeReport:
    """
    The guarantee certified by one constructed prediction rule.

    Attributes:
        method (str): Constructor name.
        guarantee_type (GuaranteeType): Kind of statement.
        alpha (float): Nominal miscoverage level (per block levels are not listed).
        epsilon (float): Discretization level, 0 for exact discrete features.
        propensity_slack (float): delta_p from the odds diagnostic, 0 when known.
        delta (float | None): PAC failure probability where applicable.
        approximate (bool): True when the slack comes from a sample max rather than
            a certified sup-norm.
        vacuous (bool): True when there were no missing outcomes (coverage is 1).
    """

    method: str
    guarantee_type: GuaranteeType
    alpha: float
    epsilon: float = 0.0
    propensity_slack: float = 0.0
    delta: float | None = None
    approximate: bool = False
    vacuous: bool = False
    notes: tuple = field(default_factory=tuple)

    @property
    def slack(self):
        """float: eps + delta_p + eps * delta_p."""
        return discretization_slack(self.epsilon, self.propensity_slack)

    @property
    def effective_level(self):
        """
        float: The certified number for this guarantee type.

        Mean coverage: 1 - alpha - slack (a lower bound on expected coverage).
        Squared coverage: alpha^2 + 2 * slack (an upper bound on E[miscoverage^2]).
        PAC: 1 - delta (a lower bound on P(coverage >= 1 - alpha)).
        Marginal: 1 - alpha for each missing outcome.
        """
        if self.guarantee_type is GuaranteeType.MEAN_COVERAGE:
            return 1.0 - self.alpha - self.slack
        if self.guarantee_type is GuaranteeType.SQUARED_COVERAGE:
            return self.alpha ** 2 + 2.0 * self.slack
        if self.guarantee_type in (GuaranteeType.MCAR_PAC, GuaranteeType.MAR_PAC):
            return 1.0 - self.delta
        return 1.0 - self.alpha

    def as_record(self):
        """Returns the report as an ordered dict of strings for structured-text output."""
        record = {
            "method": self.method,
            "guarantee_type": self.guarantee_type.value,
            "alpha": repr(self.alpha),
            "epsilon": repr(self.epsilon),
            "propensity_slack": repr(self.propensity_slack),
            "slack": repr(self.slack),
            "effective_level": repr(self.effective_level),
            "approximate": str(self.approximate).lower(),
            "vacuous": str(self.vacuous).lower(),
        }
        if self.delta is not None:
            record["delta"] = repr(self.delta)
        if self.notes:
            record["notes"] = "; ".join(self.notes)
        return record
