"""
This module renders run results, either as text destined for output files or
as rich tables on the console.

Text renderers are pure functions returning strings; the controller collects
their output and writes every file at the end of a run. The ReportView class
only ever prints.

Classes:
    ReportView: Console presentation of reports, rule summaries and study rows.

Functions:
    render_report(sections): Structured-text report (INI sections).
    render_intervals(rule, cal, score_model): Per-missing-row intervals CSV.
    render_table(rows, columns): CSV of dict rows with round-trip floats.
    render_histogram(table): CSV of a left/right/count histogram table.
"""

import io
import math

import numpy as np
import pandas as pd
from rich.console import Console
from rich.table import Table

from model.backend.csv_io import format_float
from model.backend.model_store import render_records
from model.core.errors import ScoreKindError

INTERVAL_COLUMNS = ("row_id", "threshold", "lower", "upper")

BOLD_MAGENTA = "bold magenta"
BOLD_CYAN = "bold cyan"
BOLD_GREEN = "bold green"


def _text(value):
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (float, np.floating)):
        return "nan" if math.isnan(value) else format_float(value)
    if isinstance(value, (list, tuple)):
        return ",".join(_text(v) for v in value)
    if value is None:
        return ""
    return str(value)


def render_report(sections):
    """
    Renders {section: {key: value}} as INI text, converting values to strings.

    Args:
        sections (dict[str, dict]): Sections in output order; empty sections are skipped.

    Returns:
        str: The report text.
    """
    records = {
        name: {str(key): _text(value) for key, value in record.items()}
        for name, record in sections.items()
        if record
    }
    return render_records(records)


def render_intervals(rule, cal, score_model):
    """
    Renders one line per missing calibration row: row id, threshold and the
    materialized interval.

    Lower and upper are left empty for scores whose sets are not intervals.

    Args:
        rule (PredictionRule): Thresholds keyed by positions in cal.
        cal (MaskedDataset): The calibration rows.
        score_model (ScoreModel): The score the thresholds refer to.

    Returns:
        str: CSV text with a header, even when the rule is empty.
    """
    lines = [",".join(INTERVAL_COLUMNS)]
    for index, threshold in rule.thresholds.items():
        try:
            interval = score_model.interval(cal.features[index], threshold)
            lower, upper = format_float(interval.lower), format_float(interval.upper)
        except ScoreKindError:
            lower, upper = "", ""
        lines.append(
            f"{int(cal.row_ids[index])},{format_float(threshold)},{lower},{upper}"
        )
    return "\n".join(lines) + "\n"


def render_table(rows, columns=None):
    """
    Renders a list of flat dicts as CSV.

    Args:
        rows (list[dict]): Rows with identical keys.
        columns (list[str] | None): Column order; defaults to the keys of the first row.
    """
    frame = pd.DataFrame(rows, columns=columns)
    for column in frame.columns:
        if pd.api.types.is_float_dtype(frame[column]):
            frame[column] = frame[column].map(_text)
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


def render_histogram(table):
    """Renders a histogram DataFrame (left, right, count) as CSV."""
    return render_table(table.to_dict("records"), columns=["left", "right", "count"])


class ReportView:
    """
    A class presenting run results on a rich console.

    Attributes:
        console (Console): Output console.
    """

    def __init__(self, console=None):
        self.console = console if console is not None else Console()

    def show_message(self, message, style=None):
        """
        Displays the given message.

        Args:
            message (str): The message to be displayed.
            style (str | None): rich style name.
        """
        self.console.print(message, style=style, markup=False)

    def show_report(self, title, record):
        """Shows a key/value record as a two-column table."""
        table = Table(title=title, show_header=False, title_style=BOLD_MAGENTA)
        table.add_column("key", style=BOLD_CYAN)
        table.add_column("value")
        for key, value in record.items():
            table.add_row(str(key), _text(value))
        self.console.print(table)

    def show_rows(self, title, rows):
        """Shows a list of flat dicts as a table with one column per key."""
        if not rows:
            self.show_message(f"{title}: no rows")
            return
        table = Table(title=title, title_style=BOLD_MAGENTA)
        for column in rows[0]:
            table.add_column(str(column), style=BOLD_CYAN if column == "method" else None)
        for row in rows:
            table.add_row(*(_text(value) for value in row.values()))
        self.console.print(table)

    def show_written(self, paths):
        """Lists the files written by a run."""
        for path in paths:
            self.show_message(f"wrote {path}", style=BOLD_GREEN)
