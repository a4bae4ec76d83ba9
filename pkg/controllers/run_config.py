"""
This module defines RunConfig, the settings of one command-line run, and the
loading of those settings from a flat key=value file.

Precedence is dataclass defaults < config file < command-line flags. The config
file needs no section header; keys mirror the long flag names with either dashes
or underscores, e.g.

    method = pro-cp
    alpha = 0.2
    block-size = 50

Classes:
    RunConfig: Validated run settings.

Functions:
    read_config_file(path): Parses a flat config file into raw string values.
    load_run_config(path, overrides): Builds a RunConfig from file and flags.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, fields, replace

from model.conformal.method_factory import PROPENSITY_METHODS, MethodFactory
from model.conformal.pac import DEFAULT_BUDGET
from model.core.errors import ConfigError, InvalidLevelError
from model.core.levels import check_alpha, check_delta, check_epsilon
from model.propensity.propensity_models import DEFAULT_CLAMP, check_clamp

SECTION = "run"
PROPENSITY_SOURCES = ("column", "known-formula", "logistic", "kernel")
SETTINGS = {
    "1": "setting1",
    "2": "setting2",
    "highdim": "highdim-logistic",
}
THREADS_VARIABLE = "PROCP_THREADS"


def default_threads():
    """Worker cap from PROCP_THREADS, 1 when unset."""
    value = os.environ.get(THREADS_VARIABLE, "1")
    try:
        threads = int(value)
    except ValueError as error:
        raise ConfigError(f"{THREADS_VARIABLE} must be an integer, got {value!r}") from error
    if threads < 1:
        raise ConfigError(f"{THREADS_VARIABLE} must be at least 1, got {threads}")
    return threads


def _as_bool(value):
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _as_list(value):
    if isinstance(value, (list, tuple)):
        return tuple(value)
    return tuple(part.strip() for part in str(value).split(",") if part.strip())


def _as_floats(value):
    return tuple(float(part) for part in _as_list(value))


def _as_pair(value):
    pair = tuple(int(part) for part in _as_list(value))
    if len(pair) != 2:
        raise ValueError(f"expected two comma-separated integers, got {value!r}")
    return pair


def _as_optional_float(value):
    if value is None or str(value).strip().lower() in ("", "none"):
        return None
    return float(value)


def _as_optional_str(value):
    if value is None or str(value).strip() == "":
        return None
    return str(value).strip()


CONVERTERS = {
    "method": str,
    "alpha": float,
    "epsilon": float,
    "delta": _as_optional_float,
    "block_size": int,
    "propensity": _as_optional_str,
    "truth": str,
    "seed": int,
    "split_ratio": float,
    "shuffle_partition": _as_bool,
    "clamp": float,
    "n": int,
    "n_train": int,
    "trials": int,
    "setting": str,
    "categorical": _as_list,
    "score_column": _as_optional_str,
    "budget": int,
    "threads": int,
    "out": str,
    "alpha_grid": _as_floats,
    "conditional": _as_pair,
    "outcome_only": _as_bool,
    "save_models": _as_optional_str,
    "load_models": _as_optional_str,
    "quiet": _as_bool,
    "input": _as_optional_str,
}


@dataclass(frozen=True)
class RunConfig:
    """
    Settings of one run.

    Attributes:
        method (str): Constructor key, see MethodFactory.method_names().
        alpha (float): Miscoverage level.
        epsilon (float): Propensity discretization level.
        delta (float | None): PAC failure probability (mcar-pac, mar-pac-small).
        block_size (int): Contiguous partition block size; 0 disables partitioning.
        propensity (str | None): column, known-formula, logistic or kernel. None
            lets the command choose: the `p` column when the file has one for
            predict, the closed-form propensity for simulate, logistic for diagnose.
        truth (str): Reference propensity of diagnose (column or known-formula).
        seed (int): Master seed; every random draw of the run derives from it.
        split_ratio (float): Fraction of rows used to fit models in predict.
        shuffle_partition (bool): Cut a seeded permutation into blocks.
        clamp (float): eta, propensities are clipped to [eta, 1 - eta].
        n (int): Calibration rows per simulated draw.
        n_train (int): Training rows of simulate.
        trials (int): Number of simulated trials.
        setting (str): Simulation setting: 1, 2 or highdim.
        categorical (tuple[str, ...]): CSV feature columns holding labels.
        score_column (str | None): CSV column with precomputed scores.
        budget (int): Placement budget of mar-pac-small.
        threads (int): joblib workers for trials.
        out (str): Output directory.
        alpha_grid (tuple[float, ...]): Alphas swept by simulate (frontier).
        conditional (tuple[int, int] | None): (n_outer, n_inner) of a
            conditional coverage study.
        outcome_only (bool): Conditional study holds features fixed.
        save_models (str | None): Directory receiving the fitted model records.
        load_models (str | None): Directory holding a models.ini to reuse in predict.
        quiet (bool): Silence the info events of the run logger.
        input (str | None): Input CSV of predict and diagnose.
    """

    method: str = "pro-cp"
    alpha: float = 0.2
    epsilon: float = 0.1
    delta: float | None = None
    block_size: int = 50
    propensity: str | None = None
    truth: str = "column"
    seed: int = 0
    split_ratio: float = 0.5
    shuffle_partition: bool = False
    clamp: float = DEFAULT_CLAMP
    n: int = 500
    n_train: int = 500
    trials: int = 100
    setting: str = "1"
    categorical: tuple = field(default_factory=tuple)
    score_column: str | None = None
    budget: int = DEFAULT_BUDGET
    threads: int = field(default_factory=default_threads)
    out: str = "out"
    alpha_grid: tuple = field(default_factory=tuple)
    conditional: tuple | None = None
    outcome_only: bool = False
    save_models: str | None = None
    load_models: str | None = None
    quiet: bool = False
    input: str | None = None

    @property
    def dgp_kind(self):
        """str: DgpSpec kind of the configured setting."""
        try:
            return SETTINGS[str(self.setting)]
        except KeyError:
            raise ConfigError(
                f"unknown setting {self.setting!r}, expected one of {', '.join(SETTINGS)}"
            ) from None

    @property
    def needs_propensity(self):
        """bool: Whether the method cannot run without propensities."""
        return self.method in PROPENSITY_METHODS

    def validate(self):
        """
        Checks ranges and cross-field requirements.

        Returns:
            RunConfig: self, for chaining.

        Raises:
            ConfigError: On any invalid setting.
        """
        if self.method not in MethodFactory.method_names():
            raise ConfigError(
                f"unknown method {self.method!r}, expected one of "
                f"{', '.join(MethodFactory.method_names())}"
            )
        try:
            check_alpha(self.alpha, allow_zero=self.method == "mar-pac-small")
            check_epsilon(self.epsilon, strict=self.needs_propensity)
            if self.delta is not None:
                check_delta(self.delta)
            check_clamp(self.clamp)
            for alpha in self.alpha_grid:
                check_alpha(alpha)
        except InvalidLevelError as error:
            raise ConfigError(str(error)) from error
        if self.method in ("mcar-pac", "mar-pac-small") and self.delta is None:
            raise ConfigError(f"{self.method} requires delta")
        if self.propensity is not None and self.propensity not in PROPENSITY_SOURCES:
            raise ConfigError(
                f"unknown propensity source {self.propensity!r}, expected one of "
                f"{', '.join(PROPENSITY_SOURCES)}"
            )
        if self.truth not in ("column", "known-formula"):
            raise ConfigError(f"diagnose truth must be column or known-formula, got {self.truth!r}")
        if not 0 < self.split_ratio < 1:
            raise ConfigError(f"split ratio must lie in (0, 1), got {self.split_ratio}")
        for name in ("n", "n_train", "trials", "budget", "threads"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name.replace('_', '-')} must be at least 1")
        if self.block_size < 0:
            raise ConfigError(f"block size must be >= 0, got {self.block_size}")
        if self.conditional is not None and min(self.conditional) < 1:
            raise ConfigError("conditional needs N_OUTER,N_INNER both at least 1")
        return self


def read_config_file(path):
    """
    Reads a flat key=value file.

    Args:
        path (str | Path): The file; a [run] section header is implied.

    Returns:
        dict[str, str]: Raw values keyed by field name (dashes become underscores).

    Raises:
        ConfigError: If the file is missing or malformed, or a key is unknown.
    """
    try:
        with open(path, encoding="utf-8") as stream:
            text = stream.read()
    except OSError as error:
        raise ConfigError(f"cannot read config file {path}: {error}") from error
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(f"[{SECTION}]\n{text}")
    except configparser.Error as error:
        raise ConfigError(f"cannot parse config file {path}: {error}") from error
    values = {}
    for section in parser.sections():
        for key, value in parser[section].items():
            values[key.replace("-", "_")] = value
    unknown = sorted(set(values) - set(CONVERTERS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return values


def _convert(values):
    converted = {}
    for key, value in values.items():
        try:
            converted[key] = CONVERTERS[key](value)
        except (TypeError, ValueError) as error:
            raise ConfigError(f"invalid value for {key}: {value!r} ({error})") from error
    return converted


def load_run_config(path=None, overrides=None):
    """
    Builds and validates a RunConfig.

    Args:
        path (str | None): Optional config file.
        overrides (dict | None): Flag values; None entries are ignored so that
            unset flags do not mask the file.

    Returns:
        RunConfig: The validated configuration.
    """
    config = RunConfig()
    known = {f.name for f in fields(RunConfig)}
    if path is not None:
        config = replace(config, **_convert(read_config_file(path)))
    if overrides:
        values = {k: v for k, v in overrides.items() if v is not None and k in known}
        config = replace(config, **_convert(values))
    return config.validate()
