"""
Exception hierarchy for the prediction-set library.

Every error raised on purpose by the library derives from ProcpError, so the CLI
can report it and exit with a nonzero status. Each subclass also derives from
the closest builtin exception, which lets callers that only know about
ValueError or KeyError keep working.

Classes:
    ProcpError: Root of the hierarchy.
    InvalidDistributionError, InvalidLevelError, MissingOutcomeError,
    DimensionMismatchError, InsufficientDataError, RankDeficientError,
    ScoreKindError, SingleClassError, SeparationError, PropensityRangeError,
    IndexMismatchError, PartitionError, BudgetExceededError, UndefinedPmfError,
    NotResamplableError, SchemaError, ConfigError.
"""


class ProcpError(Exception):
    """Base class for all errors raised deliberately by the library."""


class InvalidDistributionError(ProcpError, ValueError):
    """Weights are negative, non-finite, or do not sum to one."""


class InvalidLevelError(ProcpError, ValueError):
    """A miscoverage level, discretization level or failure probability is out of range."""


class MissingOutcomeError(ProcpError, LookupError):
    """An outcome was requested at an index where it is not observed."""


class DimensionMismatchError(ProcpError, ValueError):
    """Array shapes or feature dimensions disagree."""


class InsufficientDataError(ProcpError, ValueError):
    """Too few rows to fit the requested model."""


class RankDeficientError(ProcpError, ArithmeticError):
    """
    The least-squares design matrix does not have full column rank.

    Attributes:
        column (int): Index of the first design column that is linearly dependent on
            the previous ones (0 is the intercept, j >= 1 is feature j - 1).
    """

    def __init__(self, message, column):
        super().__init__(message)
        self.column = column


class ScoreKindError(ProcpError, TypeError):
    """The operation is not defined for this kind of score model."""


class SingleClassError(ProcpError, ValueError):
    """The missingness indicator takes only one value in the training data."""


class SeparationError(ProcpError, ArithmeticError):
    """Logistic coefficients diverge, which signals (quasi-)perfect separation."""


class PropensityRangeError(ProcpError, ValueError):
    """A propensity score lies outside the open unit interval."""


class IndexMismatchError(ProcpError, KeyError):
    """A prediction rule does not cover exactly the missing indices."""


class PartitionError(ProcpError, ValueError):
    """Blocks overlap or fail to cover the index range."""


class BudgetExceededError(ProcpError, RuntimeError):
    """An exhaustive enumeration would exceed its configured budget."""


class UndefinedPmfError(ProcpError, ArithmeticError):
    """The hypergeometric denominator is zero."""


class NotResamplableError(ProcpError, TypeError):
    """The data-generating process cannot redraw outcomes or features."""


class SchemaError(ProcpError, ValueError):
    """
    A CSV input violates the expected schema.

    Attributes:
        row (int | None): 1-based data row number (header excluded), if known.
        column (str | None): Offending column name, if known.
    """

    def __init__(self, message, row=None, column=None):
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column '{column}'")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)
        self.row = row
        self.column = column


class ConfigError(ProcpError, ValueError):
    """Run configuration is incomplete or inconsistent."""
