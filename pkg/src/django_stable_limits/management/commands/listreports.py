from __future__ import annotations

from django.core.management.base import BaseCommand, CommandParser

from django_stable_limits.harness.config import default_output_dir
from django_stable_limits.harness.reports import list_reports


class Command(BaseCommand):
    help = "List experiment reports in the output directory."

    def add_arguments(self, parser: CommandParser) -> None:
        parser.add_argument(
            "--out",
            default="",
            help="Report directory (default: OUTPUT_DIR setting or STABLE_LIMITS_OUTPUT_DIR).",
        )
        parser.add_argument(
            "--failed",
            action="store_true",
            help="Only list reports with at least one failed verdict.",
        )

    def handle(self, *args: object, **options: object) -> None:
        output_dir = str(options["out"]) or default_output_dir()
        failed_only = bool(options["failed"])

        reports = list_reports(output_dir)
        if failed_only:
            reports = [report for report in reports if report["passed"] < report["total"]]

        if not reports:
            self.stdout.write("No reports found.")
            return

        self.stdout.write(f"{'Experiment':<20} {'Seed':>22} {'Verdicts':>10} {'Created':<25}")
        self.stdout.write("-" * 80)
        for report in reports:
            verdicts = f"{report['passed']}/{report['total']}"
            line = f"{report['experiment']:<20} {report['seed']:>22} {verdicts:>10} {report['created_at']:<25}"
            self.stdout.write(line)
