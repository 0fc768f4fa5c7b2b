from __future__ import annotations

from django.core.management.base import BaseCommand, CommandError, CommandParser

from django_stable_limits.exceptions import ConfigError
from django_stable_limits.harness.config import ExperimentConfig, ExperimentKind, build_config, load_config_file
from django_stable_limits.harness.experiments import run_experiment
from django_stable_limits.harness.reports import StatReport, report_stem

ALL = "all"


class Command(BaseCommand):
    help = "Run a limit-law experiment and check its acceptance verdicts."

    def add_arguments(self, parser: CommandParser) -> None:
        parser.add_argument(
            "experiment",
            choices=[kind.cli_name for kind in ExperimentKind] + [ALL],
            help="Experiment to run, or 'all'.",
        )
        parser.add_argument("--config", default="", help="JSON config file for a single experiment.")
        parser.add_argument("--seed", type=int, default=None, help="Master seed (unsigned 64-bit).")
        parser.add_argument("--paths", type=int, default=None, help="Number of Monte-Carlo paths.")
        parser.add_argument("--out", default=None, help="Output directory for the JSON and CSV reports.")
        parser.add_argument("--workers", type=int, default=None, help="joblib workers; -1 uses every core.")
        parser.add_argument(
            "--no-write",
            action="store_true",
            help="Print verdicts without writing report files.",
        )

    def handle(self, *args: object, **options: object) -> None:
        experiment = str(options["experiment"])
        config_path = str(options["config"])
        workers = options["workers"]
        write = not bool(options["no_write"])
        verbosity = int(options["verbosity"])  # type: ignore[arg-type]

        if experiment == ALL and config_path:
            raise CommandError("--config describes a single experiment and cannot be combined with 'all'.")
        kinds = list(ExperimentKind) if experiment == ALL else [ExperimentKind.from_cli(experiment)]
        overrides = {"seed": options["seed"], "num_paths": options["paths"], "output_dir": options["out"]}

        # Every config is validated before the first simulation starts.
        try:
            file_values = load_config_file(config_path) if config_path else {}
            configs = [build_config(kind, file_values, overrides) for kind in kinds]
        except ConfigError as exc:
            raise CommandError(str(exc)) from exc

        failed: list[str] = []
        for config in configs:
            report = self._run(config, workers, write, verbosity)  # type: ignore[arg-type]
            if not report.passed:
                failed.append(config.experiment.cli_name)

        if failed:
            self.stderr.write(f"Verdicts failed for: {', '.join(failed)}")
            raise SystemExit(1)
        if verbosity >= 1:
            self.stdout.write(self.style.SUCCESS(f"All verdicts passed ({len(configs)} experiment(s))."))

    def _run(self, config: ExperimentConfig, workers: int | None, write: bool, verbosity: int) -> StatReport:
        if verbosity >= 1:
            self.stdout.write(
                f"Running {config.experiment.cli_name} (seed {config.seed}, {config.num_paths} paths)"
            )
        report = run_experiment(config, workers=workers, write=write)
        if verbosity >= 1:
            self._write_verdicts(report)
        if verbosity >= 2:
            self._write_rows(report)
        if write and verbosity >= 1:
            self.stdout.write(f"Report written: {config.output_dir / report_stem(report)}.json")
        return report

    def _write_verdicts(self, report: StatReport) -> None:
        self.stdout.write(f"{'Verdict':<50} {'Value':>14} {'Threshold':>14} {'Result':<6}")
        self.stdout.write("-" * 87)
        for verdict in report.verdicts:
            value = self._format_number(verdict.value)
            threshold = self._format_number(verdict.threshold)
            line = f"{verdict.name:<50} {value:>14} {threshold:>14} "
            if verdict.passed:
                self.stdout.write(line + self.style.SUCCESS("PASS"))
            else:
                self.stdout.write(line + self.style.ERROR("FAIL"))
                if verdict.detail:
                    self.stdout.write(f"    {verdict.detail}")

    def _write_rows(self, report: StatReport) -> None:
        for row in report.rows:
            self.stdout.write(
                f"  {row.normalization} n={row.n} t={row.t:g} order={row.order} "
                f"empirical={self._format_number(row.empirical)} target={self._format_number(row.target)} "
                f"z={self._format_number(row.z_score)}"
            )

    @staticmethod
    def _format_number(value: float | None) -> str:
        return "-" if value is None else f"{value:.6g}"
