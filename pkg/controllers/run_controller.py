"""
Module running the predict, simulate and diagnose pipelines.

The RunController owns the observers of a run: at construction it attaches a
RunLogger and an AlertSystem to the EventHub singleton, so every event published
by library code while a pipeline runs is rendered on the console and warnings are
counted for the report. Each pipeline renders all of its outputs in memory first
and only then writes them, one atomic file at a time, so a failing run leaves no
partial files behind.

Classes:
    RunResult: Rendered outputs and the objects they were rendered from.
    RunController: Entry point of the three pipelines.

Example:
    controller = RunController(load_run_config("config.ini", {"input": "data.csv"}))
    result = controller.predict()
    controller.close()
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from model.backend.csv_io import read_dataset
from model.backend.event_hub import EventHub, publish, warn
from model.backend.model_store import (
    mean_model_from_record,
    parse_records,
    propensity_from_record,
    render_records,
)
from model.backend.output_writer import write_outputs
from model.conformal.method_factory import MethodFactory
from model.conformal.methods import CalibrationContext
from model.conformal.partition import contiguous_partition
from model.core.errors import ConfigError
from model.core.levels import GuaranteeReport, GuaranteeType
from model.propensity.odds import odds_diagnostic_from_values
from model.propensity.propensity_models import ValuePropensity, fit_kernel, fit_logistic
from model.scores.mean_model import fit_mean_lsq
from model.scores.score_model import ResidualScore, TableScore
from model.simlab.dgp import DgpSpec, build_dgp
from model.simlab.study import (
    MethodConfig,
    conditional_coverage_study,
    frontier_study,
    histograms,
    run_study,
)
from observers.alert_system import AlertSystem
from observers.run_logger import RunLogger
from views.report_view import (
    ReportView,
    render_histogram,
    render_intervals,
    render_report,
    render_table,
)

ESTIMATED_SOURCES = ("logistic", "kernel")
MODELS_FILE = "models.ini"


@dataclass
class RunResult:
    """
    Outcome of one pipeline.

    Attributes:
        command (str): predict, simulate or diagnose.
        outputs (dict[Path, str]): Rendered file contents keyed by destination.
        written (list[Path]): Files actually written.
        details (dict): Objects behind the outputs (rule, summary, diagnostic, ...).
    """

    command: str
    outputs: dict
    written: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def __str__(self):
        return f"{self.command}: {len(self.written)} file(s) written"


class RunController:
    """
    RunController runs the command pipelines for a RunConfig.

    Args:
        config (RunConfig): Validated run settings.
        view (ReportView, optional): Console presentation. Defaults to a new ReportView.
        console (Console, optional): Console handed to the observers.

    Attributes:
        event_hub (EventHub): The singleton subject.
        logger (RunLogger): Observer printing info events.
        alerts (AlertSystem): Observer printing and counting warnings.
    """

    def __init__(self, config, view=None, console=None):
        self.config = config
        self.view = view if view is not None else ReportView()
        self.event_hub = EventHub.get_instance()
        self.logger = RunLogger(console, quiet=config.quiet)
        self.alerts = AlertSystem(console)
        self.event_hub.attach(self.logger)
        self.event_hub.attach(self.alerts)

    def close(self):
        """Detaches the observers from the EventHub."""
        for observer in (self.logger, self.alerts):
            if observer in self.event_hub.observers:
                self.event_hub.detach(observer)

    @property
    def out_dir(self):
        """Path: Directory receiving the outputs."""
        return Path(self.config.out)

    def _finish(self, command, outputs, details):
        written = write_outputs(outputs)
        self.view.show_written(written)
        return RunResult(command=command, outputs=outputs, written=written, details=details)

    def _run_section(self):
        config = self.config
        section = {
            "method": config.method,
            "alpha": config.alpha,
            "epsilon": config.epsilon,
            "delta": config.delta,
            "block_size": config.block_size,
            "shuffle_partition": config.shuffle_partition,
            "seed": config.seed,
            "clamp": config.clamp,
        }
        return {key: value for key, value in section.items() if value is not None}

    # predict

    def load_models(self, loaded):
        """
        Reads the models.ini written by an earlier predict with save_models.

        Returns:
            dict: "mean_model" and "propensity" entries for the stored sections.

        Raises:
            ConfigError: If the file is missing or malformed, a kernel propensity
                is stored (it needs its training rows), or the feature count differs.
        """
        path = Path(self.config.load_models) / MODELS_FILE
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as error:
            raise ConfigError(f"cannot read stored models {path}: {error}") from error
        records = parse_records(text)
        models = {}
        if "mean_model" in records:
            models["mean_model"] = mean_model_from_record(records["mean_model"])
        if "propensity" in records:
            models["propensity"] = propensity_from_record(records["propensity"])
        d = loaded.dataset.d
        for name, model in models.items():
            coefficients = getattr(model, "coefficients", None)
            if coefficients is not None and coefficients.size != d:
                raise ConfigError(
                    f"stored {name} expects {coefficients.size} feature(s), the input has {d}"
                )
        publish("load", f"loaded {', '.join(models) or 'no models'} from {path}")
        return models

    def predict_propensity_source(self, loaded, stored=None):
        """
        Resolves the propensity source of predict.

        An explicit propensity setting wins, then a stored propensity model, then
        the p column of the input.

        Returns:
            str | None: column, logistic, kernel, or None when no propensity is used.

        Raises:
            ConfigError: If the method needs propensities and none are available,
                the source cannot be used on a CSV file, or it contradicts the
                stored model.
        """
        source = self.config.propensity
        if source is None and stored is not None:
            source = stored.kind
        if source is None and loaded.propensities is not None:
            source = "column"
        if source == "known-formula":
            raise ConfigError("known-formula propensities exist only for simulated settings")
        if source == "column" and loaded.propensities is None:
            raise ConfigError("propensity source 'column' needs a p column in the input file")
        if stored is not None and source != stored.kind:
            raise ConfigError(
                f"propensity source {source!r} contradicts the stored {stored.kind} model"
            )
        if source is None and self.config.needs_propensity:
            raise ConfigError(
                f"{self.config.method} requires a propensity source: add a p column or "
                "pass --propensity logistic|kernel"
            )
        return source

    def predict(self):
        """
        Builds prediction sets for the missing outcomes of a CSV file.

        The rows are split into a training part (mean model, estimated
        propensity) and a calibration part; no split is made when a score column
        is given and no propensity has to be fitted. Intervals are written for the
        missing rows of the calibration part.

        Returns:
            RunResult: report.ini and intervals.csv (plus models.ini with save_models).
        """
        config = self.config
        if config.input is None:
            raise ConfigError("predict needs an input CSV")
        self.alerts.reset()
        loaded = read_dataset(
            config.input, categorical=config.categorical, score_column=config.score_column
        )
        dataset = loaded.dataset
        stored = self.load_models(loaded) if config.load_models else {}
        stored_mean = stored.get("mean_model")
        stored_propensity = stored.get("propensity")
        source = self.predict_propensity_source(loaded, stored_propensity)
        # with every outcome observed a propensity fit sees a single class
        skip_propensity_fit = (
            dataset.n_missing == 0 and source in ESTIMATED_SOURCES and stored_propensity is None
        )
        needs_fit = (loaded.scores is None and stored_mean is None) or (
            source in ESTIMATED_SOURCES and stored_propensity is None and not skip_propensity_fit
        )
        if needs_fit:
            train, cal = dataset.split(config.split_ratio, seed=config.seed)
        else:
            train, cal = None, dataset
        publish(
            "split",
            f"{dataset.n} rows: {0 if train is None else train.n} for fitting, {cal.n} for calibration",
        )

        records = {}
        if loaded.scores is not None:
            score_model = TableScore(loaded.scores, score_id=loaded.score_column)
        elif stored_mean is not None:
            score_model = ResidualScore(stored_mean)
            records["mean_model"] = stored_mean.as_record()
        else:
            mean_model = fit_mean_lsq(train)
            score_model = ResidualScore(mean_model)
            records["mean_model"] = mean_model.as_record()
            publish("fit", f"fitted the mean model on {train.n_observed} observed rows")

        propensities = None
        slack = 0.0
        approximate = False
        uses_propensity = config.needs_propensity or (
            config.method == "mar-pac-small" and source is not None
        )
        if uses_propensity:
            if skip_propensity_fit:
                propensities = np.full(cal.n, 1.0 - config.clamp)
                publish("fit", f"no missing outcomes, the {source} propensity fit is skipped")
            elif source == "column":
                propensities = ValuePropensity(loaded.propensities, clamp=config.clamp).for_dataset(cal)
            else:
                if stored_propensity is not None:
                    model = stored_propensity
                elif source == "kernel":
                    model = fit_kernel(train, seed=config.seed, clamp=config.clamp)
                else:
                    model = fit_logistic(train, clamp=config.clamp)
                records["propensity"] = model.as_record()
                propensities = model.for_dataset(cal)
                approximate = True
                if loaded.propensities is not None:
                    reference = ValuePropensity(loaded.propensities, clamp=config.clamp)
                    slack = odds_diagnostic_from_values(
                        reference.for_dataset(cal), propensities
                    ).delta_hat
                    warn(
                        "approximate-slack",
                        f"slack {slack:.6g} is a sample max against the p column",
                        slack=slack,
                    )
                else:
                    warn(
                        "approximate-slack",
                        f"{source} propensity without a reference column: slack is not estimated",
                    )

        partition = None
        if config.block_size:
            partition = contiguous_partition(
                cal.n, config.block_size, shuffle=config.shuffle_partition, seed=config.seed
            )
        context = CalibrationContext(
            cal=cal,
            scores=score_model.dataset_scores(cal),
            alpha=config.alpha,
            epsilon=config.epsilon,
            delta=config.delta,
            propensities=propensities,
            propensity_slack=slack,
            approximate=approximate,
            partition=partition,
            budget=config.budget,
            score_id=score_model.score_id,
        )
        rule = MethodFactory.create_method(config.method).execute(context)
        publish("construct", f"{rule.report.method}: {len(rule)} prediction set(s)")

        run = self._run_section()
        run["input"] = config.input
        if config.load_models:
            run["load_models"] = config.load_models
        run["propensity"] = source if source is not None else "none"
        run["split_ratio"] = config.split_ratio if needs_fit else "none"
        sections = {
            "run": run,
            "data": {
                "rows": dataset.n,
                "training_rows": 0 if train is None else train.n,
                "calibration_rows": cal.n,
                "missing": cal.n_missing,
                "observed": cal.n_observed,
            },
            "guarantee": rule.report.as_record(),
            "block_levels": {f"block_{k}": v for k, v in rule.block_levels.items()},
            "warnings": self.alerts.summary(),
        }
        outputs = {
            self.out_dir / "report.ini": render_report(sections),
            self.out_dir / "intervals.csv": render_intervals(rule, cal, score_model),
        }
        if config.save_models:
            outputs[Path(config.save_models) / MODELS_FILE] = render_records(records)
        self.view.show_report("Guarantee", rule.report.as_record())
        return self._finish(
            "predict", outputs, {"rule": rule, "calibration": cal, "score_model": score_model}
        )

    # simulate

    def method_config(self):
        """
        Translates the run settings into a simulation MethodConfig.

        Raises:
            ConfigError: For the column source, which needs a file.
        """
        config = self.config
        source = config.propensity or "known-formula"
        if source == "column":
            raise ConfigError("propensity source 'column' is not available in simulate")
        return MethodConfig(
            method=config.method,
            alpha=config.alpha,
            epsilon=config.epsilon,
            delta=config.delta,
            block_size=config.block_size or None,
            shuffle_partition=config.shuffle_partition,
            propensity="known" if source == "known-formula" else source,
            clamp=config.clamp,
            budget=config.budget,
        )

    def simulate(self):
        """
        Runs a Monte-Carlo study on a simulated setting.

        Returns:
            RunResult: summary.csv, report.ini and two histogram files; frontier.csv
            with an alpha grid; conditional.csv with a conditional study.
        """
        config = self.config
        self.alerts.reset()
        spec = DgpSpec(config.dgp_kind, n=config.n, seed=config.seed)
        method_config = self.method_config()
        publish("study", f"{config.trials} trial(s) of {config.method} on {spec.kind}")
        summary = run_study(
            spec, method_config, config.trials, config.seed,
            n_train=config.n_train, threads=config.threads,
        )
        row = summary.as_row()
        outputs = {self.out_dir / "summary.csv": render_table([row])}
        for name, table in histograms(summary).items():
            outputs[self.out_dir / f"histogram_{name}.csv"] = render_histogram(table)
        details = {"summary": summary}

        if config.alpha_grid:
            points = frontier_study(
                spec, [method_config], config.alpha_grid, config.trials, config.seed,
                n_train=config.n_train, threads=config.threads,
            )
            outputs[self.out_dir / "frontier.csv"] = render_table(
                [asdict(point) for point in points]
            )
            details["frontier"] = points

        conditional_section = {}
        if config.conditional is not None:
            n_outer, n_inner = config.conditional
            result = conditional_coverage_study(
                spec, method_config, n_outer, n_inner, config.seed,
                outcome_only=config.outcome_only, n_train=config.n_train,
                threads=config.threads,
            )
            outputs[self.out_dir / "conditional.csv"] = render_table(
                [
                    {"outer": outer, "coverage": float(estimate), "se": float(se)}
                    for outer, (estimate, se) in enumerate(
                        zip(result.estimates, result.standard_errors)
                    )
                ]
            )
            conditional_section = {
                "outer": n_outer,
                "inner": n_inner,
                "outcome_only": config.outcome_only,
                "certified_level": result.certified_level,
                "fraction_at_level": float((result.estimates >= result.certified_level).mean()),
            }
            details["conditional"] = result

        run = self._run_section()
        run.update(
            setting=config.setting, n=config.n, n_train=config.n_train,
            trials=config.trials, propensity=method_config.propensity,
        )
        sections = {
            "run": run,
            "summary": row,
            "conditional": conditional_section,
            "warnings": self.alerts.summary(),
        }
        outputs[self.out_dir / "report.ini"] = render_report(sections)
        self.view.show_rows("Study summary", [row])
        return self._finish("simulate", outputs, details)

    # diagnose

    def _diagnose_truth(self, loaded):
        config = self.config
        if config.truth == "column":
            if loaded.propensities is None:
                raise ConfigError("diagnose truth 'column' needs a p column in the input file")
            return ValuePropensity(loaded.propensities, clamp=config.clamp).for_dataset(
                loaded.dataset
            )
        model = build_dgp(DgpSpec(config.dgp_kind, seed=config.seed)).propensity_model(config.clamp)
        return model.for_dataset(loaded.dataset)

    def _diagnose_estimate(self, loaded):
        config = self.config
        source = config.propensity or "logistic"
        if source == "column":
            if loaded.propensities is None:
                raise ConfigError("propensity source 'column' needs a p column in the input file")
            return ValuePropensity(loaded.propensities, clamp=config.clamp).for_dataset(
                loaded.dataset
            ), source
        if source == "known-formula":
            raise ConfigError("the estimate of diagnose must be column, logistic or kernel")
        if source == "kernel":
            model = fit_kernel(loaded.dataset, seed=config.seed, clamp=config.clamp)
        else:
            model = fit_logistic(loaded.dataset, clamp=config.clamp)
        return model.for_dataset(loaded.dataset), source

    def diagnose(self):
        """
        Compares a reference propensity with an estimate on the rows of a CSV file.

        Returns:
            RunResult: diagnose.ini with max |log f|, the implied slack and the
            effective levels of pro-cp and pro-cp2 at the configured alpha and epsilon.
        """
        config = self.config
        if config.input is None:
            raise ConfigError("diagnose needs an input CSV")
        self.alerts.reset()
        loaded = read_dataset(
            config.input, categorical=config.categorical, score_column=config.score_column
        )
        truth = self._diagnose_truth(loaded)
        estimate, source = self._diagnose_estimate(loaded)
        diagnostic = odds_diagnostic_from_values(truth, estimate)
        reports = {
            name: GuaranteeReport(
                method=name,
                guarantee_type=guarantee_type,
                alpha=config.alpha,
                epsilon=config.epsilon,
                propensity_slack=diagnostic.delta_hat,
                approximate=diagnostic.approximate,
            )
            for name, guarantee_type in (
                ("pro-cp", GuaranteeType.MEAN_COVERAGE),
                ("pro-cp2", GuaranteeType.SQUARED_COVERAGE),
            )
        }
        odds = {
            "truth": config.truth,
            "estimate": source,
            "max_abs_log_f": diagnostic.max_abs_log_f,
            "delta_hat": diagnostic.delta_hat,
            "n_points": diagnostic.n_points,
        }
        sections = {"odds": odds}
        sections.update({name: report.as_record() for name, report in reports.items()})
        sections["warnings"] = self.alerts.summary()
        outputs = {self.out_dir / "diagnose.ini": render_report(sections)}
        self.view.show_report("Odds diagnostic", odds)
        return self._finish(
            "diagnose", outputs, {"diagnostic": diagnostic, "reports": reports}
        )
