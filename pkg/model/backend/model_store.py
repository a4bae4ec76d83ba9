"""
This module stores fitted models as small structured-text records.

Each model is one section of an INI-style file read and written with
configparser; values are the strings produced by the models' as_record methods.
"""

import configparser
import io

import numpy as np

from model.core.errors import ConfigError
from model.propensity.propensity_models import KernelPropensity, LogisticPropensity
from model.scores.mean_model import MeanModel


def render_records(records):
    """
    Renders {section: {key: value}} as INI text.

    Args:
        records (dict[str, dict[str, str]]): Sections in output order.
    """
    parser = configparser.ConfigParser(interpolation=None)
    for section, record in records.items():
        parser[section] = record
    buffer = io.StringIO()
    parser.write(buffer)
    return buffer.getvalue()


def parse_records(text):
    """Parses INI text back to {section: {key: value}}."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as error:
        raise ConfigError(f"cannot parse model records: {error}") from error
    return {section: dict(parser[section]) for section in parser.sections()}


def mean_model_from_record(record):
    """Rebuilds a MeanModel."""
    if record.get("kind") != "mean-lsq":
        raise ConfigError(f"record of kind {record.get('kind')!r} is not a mean model")
    return MeanModel.from_record(record)


def propensity_from_record(record, train_features=None, train_mask=None):
    """
    Rebuilds a logistic or kernel propensity model.

    Kernel records hold only the bandwidth, so the training features and mask
    must be supplied again.

    Raises:
        ConfigError: For unsupported kinds or a kernel record without training data.
    """
    kind = record.get("kind")
    clamp = float(record.get("clamp", 1e-3))
    if kind == "logistic":
        coefficients = np.array([float(c) for c in record["coefficients"].split()], dtype=float)
        return LogisticPropensity(
            float(record["intercept"]), coefficients, clamp=clamp,
            converged=record.get("converged", "true") == "true",
            n_iter=int(record.get("n_iter", 0)),
        )
    if kind == "kernel":
        if train_features is None or train_mask is None:
            raise ConfigError("a kernel propensity record needs its training data to be rebuilt")
        return KernelPropensity(train_features, train_mask, float(record["bandwidth"]), clamp=clamp)
    raise ConfigError(f"cannot rebuild a propensity model of kind {kind!r}")
