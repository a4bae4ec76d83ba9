"""
This module reads and writes datasets with missing outcomes as CSV.

Schema: a header row; column `a` in {0, 1}; column `y`, numeric and empty where
a = 0; optional column `p` with known propensities in (0, 1); an optional score
column; every other column is a feature. Features are numeric unless declared
categorical, in which case labels are mapped to integer codes by first
appearance. Files are UTF-8, comma separated, with `.` as decimal mark.

Functions:
    read_dataset(source, categorical, score_column): Parses and validates a file.
    parse_frame(frame, categorical, score_column): Validates an all-string frame.
    serialize_dataset(loaded): Canonical CSV text for a parsed dataset.
    format_float(value): Round-trip text for a float.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from model.backend.event_hub import warn
from model.core.errors import SchemaError
from model.core.masked_dataset import MaskedDataset

MASK_COLUMN = "a"
OUTCOME_COLUMN = "y"
PROPENSITY_COLUMN = "p"


@dataclass(frozen=True, eq=False)
class LoadedData:
    """
    A parsed CSV file.

    Attributes:
        dataset (MaskedDataset): Features, mask and outcomes; row ids are the data
            row positions 0..n-1.
        feature_columns (tuple[str, ...]): Feature column names in file order.
        categorical (dict[str, tuple[str, ...]]): Labels of each categorical column,
            indexed by code.
        propensities (pd.Series | None): Column `p` keyed by row id.
        scores (pd.Series | None): The score column keyed by row id.
        score_column (str | None): Name of the score column.
    """

    dataset: MaskedDataset
    feature_columns: tuple
    categorical: dict
    propensities: pd.Series | None = None
    scores: pd.Series | None = None
    score_column: str | None = None


def format_float(value):
    """Shortest text that parses back to the same float ('inf', '-inf' for infinities)."""
    value = float(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(value)


def _numeric(frame, column, allow_empty=None):
    text = frame[column].str.strip()
    values = pd.to_numeric(text.where(text != "", None), errors="coerce").astype(float)
    empty = text == ""
    bad = (values.isna() | np.isinf(values)) & ~empty
    if allow_empty is None:
        bad |= empty
    else:
        bad |= empty & ~allow_empty
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise SchemaError(
            f"value {frame[column].iloc[row]!r} is not a valid number", row=row + 1, column=column
        )
    return values.to_numpy()


def parse_frame(frame, categorical=(), score_column=None):
    """
    Validates an all-string DataFrame and builds the dataset.

    Raises:
        SchemaError: On a missing required column, a bad mask value, an empty
            or non-numeric observed outcome, a non-numeric feature, or a
            propensity outside (0, 1).
    """
    for column in (MASK_COLUMN, OUTCOME_COLUMN):
        if column not in frame.columns:
            raise SchemaError(f"required column {column!r} is missing", column=column)
    categorical = tuple(categorical)
    reserved = {MASK_COLUMN, OUTCOME_COLUMN, PROPENSITY_COLUMN, score_column}
    for column in categorical:
        if column not in frame.columns or column in reserved:
            raise SchemaError(f"categorical column {column!r} is not a feature column",
                              column=column)
    feature_columns = tuple(c for c in frame.columns if c not in reserved)
    if not feature_columns:
        raise SchemaError("the file has no feature columns")

    mask_text = frame[MASK_COLUMN].str.strip()
    bad_mask = ~mask_text.isin(("0", "1"))
    if bad_mask.any():
        row = int(np.flatnonzero(bad_mask.to_numpy())[0])
        raise SchemaError(
            f"mask value {frame[MASK_COLUMN].iloc[row]!r} is not 0 or 1",
            row=row + 1, column=MASK_COLUMN,
        )
    mask = mask_text.astype(int).to_numpy()
    outcomes = _numeric(frame, OUTCOME_COLUMN, allow_empty=pd.Series(mask == 0))
    dropped = (mask == 0) & ~np.isnan(outcomes)
    if dropped.any():
        warn(
            "outcome-dropped",
            f"{int(dropped.sum())} row(s) with a=0 carried an outcome; it was ignored",
            rows=tuple(int(i) + 1 for i in np.flatnonzero(dropped)),
        )

    columns = []
    labels = {}
    for column in feature_columns:
        if column in categorical:
            codes, uniques = pd.factorize(frame[column], sort=False)
            columns.append(codes.astype(float))
            labels[column] = tuple(str(u) for u in uniques)
        else:
            columns.append(_numeric(frame, column))
    features = np.column_stack(columns)

    row_ids = np.arange(len(frame))
    propensities = None
    if PROPENSITY_COLUMN in frame.columns:
        values = _numeric(frame, PROPENSITY_COLUMN)
        outside = ~((values > 0) & (values < 1))
        if outside.any():
            row = int(np.flatnonzero(outside)[0])
            raise SchemaError(
                f"propensity {values[row]!r} is outside (0, 1)",
                row=row + 1, column=PROPENSITY_COLUMN,
            )
        propensities = pd.Series(values, index=row_ids)
    scores = None
    if score_column is not None:
        if score_column not in frame.columns:
            raise SchemaError(f"score column {score_column!r} is missing", column=score_column)
        scores = pd.Series(
            _numeric(frame, score_column, allow_empty=pd.Series(mask == 0)), index=row_ids
        )

    dataset = MaskedDataset.build(features, mask, np.where(mask == 1, outcomes, np.nan), row_ids)
    return LoadedData(
        dataset=dataset,
        feature_columns=feature_columns,
        categorical=labels,
        propensities=propensities,
        scores=scores,
        score_column=score_column,
    )


def read_dataset(source, categorical=(), score_column=None):
    """
    Reads a CSV file (path or text buffer) and validates it.

    Returns:
        LoadedData: The parsed dataset and its side columns.
    """
    try:
        frame = pd.read_csv(
            source, dtype=str, keep_default_na=False, encoding="utf-8", skipinitialspace=False
        )
    except pd.errors.EmptyDataError as error:
        raise SchemaError("the file is empty") from error
    if frame.empty:
        raise SchemaError("the file has a header but no data rows")
    return parse_frame(frame, categorical=categorical, score_column=score_column)


def serialize_dataset(loaded):
    """
    Canonical CSV text: features in file order, then a, y, p and the score column.

    Outcomes are written only where a = 1.
    """
    dataset = loaded.dataset
    columns = {}
    for position, column in enumerate(loaded.feature_columns):
        values = dataset.features[:, position]
        if column in loaded.categorical:
            names = loaded.categorical[column]
            columns[column] = [names[int(code)] for code in values]
        else:
            columns[column] = [format_float(v) for v in values]
    columns[MASK_COLUMN] = [str(int(a)) for a in dataset.mask]
    columns[OUTCOME_COLUMN] = [
        format_float(y) if a == 1 else "" for a, y in zip(dataset.mask, dataset.outcomes)
    ]
    if loaded.propensities is not None:
        columns[PROPENSITY_COLUMN] = [format_float(p) for p in loaded.propensities]
    if loaded.score_column is not None:
        columns[loaded.score_column] = [
            format_float(s) if a == 1 else "" for a, s in zip(dataset.mask, loaded.scores)
        ]
    buffer = io.StringIO()
    pd.DataFrame(columns).to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()
