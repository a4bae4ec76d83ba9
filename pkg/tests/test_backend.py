"""
This module contains unit tests for the backend: the EventHub singleton, CSV
reading and writing, atomic output files and model records.
"""
import io
import os
from unittest.mock import MagicMock, patch

import numpy as np
import pytest

from model.backend.csv_io import format_float, read_dataset, serialize_dataset
from model.backend.event_hub import EventHub, Observer, publish, warn
from model.backend.model_store import (
    mean_model_from_record,
    parse_records,
    propensity_from_record,
    render_records,
)
from model.backend.output_writer import write_outputs
from model.core.errors import ConfigError, SchemaError
from model.propensity.propensity_models import KernelPropensity, LogisticPropensity
from model.scores.mean_model import MeanModel

CANONICAL = "x1,x2,a,y,p\n1.0,2.5,1,3.25,0.5\n0.0,-1.0,0,,0.75\n4.0,0.5,1,-2.0,0.25\n"


@pytest.fixture(autouse=True)
def reset_event_hub():
    """
    Pytest fixture to reset the EventHub before each test.
    """
    EventHub.reset_instance()
    yield
    EventHub.reset_instance()


# EventHub


def test_singleton_instance():
    """
    Test that EventHub returns the same instance for multiple get_instance() calls.
    """
    assert EventHub.get_instance() is EventHub.get_instance()
    with pytest.raises(RuntimeError):
        EventHub()


def test_attach_notify_detach():
    """
    Attached observers receive published events until they are detached.
    """
    hub = EventHub.get_instance()
    observer = MagicMock(spec=Observer)
    hub.attach(observer)
    hub.attach(observer)
    event = publish("kernel-fallback", "2 points", count=2)
    observer.update.assert_called_once_with(event)
    assert event.data["count"] == 2 and not event.is_warning
    hub.detach(observer)
    warn("alpha-clamped", "clamped")
    observer.update.assert_called_once()


def test_capture_shadows_observers():
    """
    While a capture is active, only the collector receives events.
    """
    hub = EventHub.get_instance()
    observer = MagicMock(spec=Observer)
    hub.attach(observer)
    with hub.capture() as collector:
        warn("outcome-dropped", "ignored")
        publish("progress", "half way")
    observer.update.assert_not_called()
    assert collector.kinds() == ["outcome-dropped", "progress"]
    assert [event.kind for event in collector.warnings()] == ["outcome-dropped"]


def test_observer_base_is_abstract():
    """
    The Observer base class requires an update implementation.
    """
    with pytest.raises(NotImplementedError, match="Subclass must implement abstract method"):
        Observer().update(None)


# CSV


def test_read_canonical_file():
    """
    Features, mask, outcomes and propensities are parsed; row ids are data rows.
    """
    loaded = read_dataset(io.StringIO(CANONICAL))
    dataset = loaded.dataset
    assert loaded.feature_columns == ("x1", "x2")
    assert dataset.features.tolist() == [[1.0, 2.5], [0.0, -1.0], [4.0, 0.5]]
    assert dataset.mask.tolist() == [1, 0, 1]
    assert dataset.outcome(2) == -2.0
    assert loaded.propensities.tolist() == [0.5, 0.75, 0.25]
    assert dataset.row_ids.tolist() == [0, 1, 2]


def test_canonical_file_round_trips():
    """
    Serializing a canonical file gives back the same bytes.
    """
    assert serialize_dataset(read_dataset(io.StringIO(CANONICAL))) == CANONICAL


@pytest.mark.parametrize(
    "text, row, column",
    [
        ("x,a,y\n1,2,3\n", 1, "a"),
        ("x,a,y\n1,1,3\n2,1,\n", 2, "y"),
        ("x,a,y\n1,1,3\nfoo,0,\n", 2, "x"),
        ("x,a,y\n1,1,inf\n", 1, "y"),
        ("x,a,y,p\n1,1,3,1.0\n", 1, "p"),
        ("x,y\n1,3\n", None, "a"),
    ],
)
def test_schema_errors_name_row_and_column(text, row, column):
    """
    Schema violations report the data row and the column.
    """
    with pytest.raises(SchemaError) as raised:
        read_dataset(io.StringIO(text))
    assert raised.value.row == row
    assert raised.value.column == column


def test_empty_files_are_rejected():
    """
    An empty file and a header without rows are schema errors.
    """
    for text in ("", "x,a,y\n"):
        with pytest.raises(SchemaError):
            read_dataset(io.StringIO(text))


def test_outcome_on_missing_row_is_dropped_with_warning():
    """
    A value in y where a = 0 is discarded and reported.
    """
    with EventHub.get_instance().capture() as events:
        loaded = read_dataset(io.StringIO("x,a,y\n1,0,7.5\n2,1,1.0\n"))
    assert np.isnan(loaded.dataset.outcomes[0])
    assert events.kinds() == ["outcome-dropped"]
    assert events.events[0].data["rows"] == (1,)


def test_categorical_columns_are_coded_by_first_appearance():
    """
    Labels become integer codes and serialize back to labels.
    """
    text = "city,a,y\nParis,1,1.0\nOslo,0,\nParis,1,2.0\n"
    loaded = read_dataset(io.StringIO(text), categorical=("city",))
    assert loaded.dataset.features[:, 0].tolist() == [0.0, 1.0, 0.0]
    assert loaded.categorical == {"city": ("Paris", "Oslo")}
    assert serialize_dataset(loaded) == text
    with pytest.raises(SchemaError):
        read_dataset(io.StringIO(text), categorical=("y",))


def test_score_column_is_not_a_feature():
    """
    The score column is split off and keyed by row id.
    """
    loaded = read_dataset(io.StringIO("x,s,a,y\n1,0.5,1,2\n2,,0,\n"), score_column="s")
    assert loaded.feature_columns == ("x",)
    assert loaded.scores.iloc[0] == 0.5 and np.isnan(loaded.scores.iloc[1])
    with pytest.raises(SchemaError):
        read_dataset(io.StringIO("x,a,y\n1,1,2\n"), score_column="s")


def test_format_float_round_trips():
    """
    Shortest repr, with plain inf markers.
    """
    assert format_float(0.1) == "0.1"
    assert float(format_float(1 / 3)) == 1 / 3
    assert format_float(float("inf")) == "inf"
    assert format_float(float("-inf")) == "-inf"


# output files


def test_write_outputs_creates_directories(tmp_path):
    """
    Every file of the mapping is written, parent directories included.
    """
    outputs = {tmp_path / "out" / "a.csv": "a\n1\n", tmp_path / "out" / "b.ini": "[run]\n"}
    written = write_outputs(outputs)
    assert written == list(outputs)
    assert (tmp_path / "out" / "a.csv").read_text(encoding="utf-8") == "a\n1\n"
    assert sorted(p.name for p in (tmp_path / "out").iterdir()) == ["a.csv", "b.ini"]


def test_write_outputs_leaves_target_untouched_on_failure(tmp_path):
    """
    A failed write removes its temporary file and keeps the old content.
    """
    target = tmp_path / "report.ini"
    target.write_text("old", encoding="utf-8")
    with patch("model.backend.output_writer.os.replace", side_effect=OSError("disk full")):
        with pytest.raises(OSError):
            write_outputs({target: "new"})
    assert target.read_text(encoding="utf-8") == "old"
    assert [p.name for p in tmp_path.iterdir()] == ["report.ini"]


def test_write_outputs_stages_every_file_before_renaming(tmp_path):
    """
    When the second file cannot be staged the first target is never created.
    """
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory", encoding="utf-8")
    outputs = {tmp_path / "out" / "report.ini": "[run]\n", blocker / "intervals.csv": "row_id\n"}
    with pytest.raises(OSError):
        write_outputs(outputs)
    assert list((tmp_path / "out").iterdir()) == []


def test_write_outputs_cleans_temporaries_after_a_failed_rename(tmp_path):
    """
    A rename failure midway removes the temporaries that were not renamed.
    """
    real_replace = os.replace
    calls = []

    def replace_once(source, target):
        calls.append(target)
        if len(calls) > 1:
            raise OSError("disk full")
        real_replace(source, target)

    outputs = {tmp_path / "report.ini": "[run]\n", tmp_path / "intervals.csv": "row_id\n"}
    with patch("model.backend.output_writer.os.replace", side_effect=replace_once):
        with pytest.raises(OSError, match="disk full"):
            write_outputs(outputs)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["report.ini"]


# model records


def test_records_round_trip():
    """
    Mean and logistic models survive render_records and parse_records.
    """
    mean = MeanModel(1.5, np.array([0.25, -2.0]))
    logistic = LogisticPropensity(0.3, np.array([1.0, -0.5]), clamp=0.01, n_iter=6)
    records = parse_records(
        render_records({"mean": mean.as_record(), "propensity": logistic.as_record()})
    )
    rebuilt = mean_model_from_record(records["mean"])
    assert rebuilt.intercept == 1.5 and rebuilt.coefficients.tolist() == [0.25, -2.0]
    restored = propensity_from_record(records["propensity"])
    assert restored.coefficients.tolist() == [1.0, -0.5]
    assert restored.clamp == 0.01 and restored.n_iter == 6 and restored.converged


def test_kernel_record_needs_training_data():
    """
    A kernel record holds the bandwidth only.
    """
    features, mask = np.array([[0.0], [1.0]]), np.array([1, 0])
    record = KernelPropensity(features, mask, 0.5).as_record()
    with pytest.raises(ConfigError):
        propensity_from_record(record)
    assert propensity_from_record(record, features, mask).bandwidth == 0.5


def test_record_kind_is_checked():
    """
    Records of the wrong kind and malformed text are configuration errors.
    """
    with pytest.raises(ConfigError):
        mean_model_from_record({"kind": "logistic"})
    with pytest.raises(ConfigError):
        propensity_from_record({"kind": "known"})
    with pytest.raises(ConfigError):
        parse_records("no section header")
