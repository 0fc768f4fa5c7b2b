from __future__ import annotations

from io import StringIO

from django.core.management import call_command
from django.test import override_settings

from django_stable_limits.harness.reports import StatReport, Verdict, write_report


def _write(output_dir, experiment, seed, passed=True):
    report = StatReport(
        config={"experiment": experiment, "seed": seed},
        verdicts=[
            Verdict("A9", "A9.t_independence", True, 0.02, 0.1),
            Verdict("A9", "A9.means_agree", passed, 0.5, 0.3),
        ],
        created_at="2026-01-15T12:00:00+00:00",
    )
    write_report(report, output_dir)


class TestListreportsCommand:
    def test_lists_reports(self, tmp_path):
        _write(tmp_path, "log_n_remark", 7)
        _write(tmp_path, "cf_identity", 3, passed=False)

        out = StringIO()
        call_command("listreports", out=str(tmp_path), stdout=out)

        lines = out.getvalue().splitlines()
        assert lines[0].startswith("Experiment")
        assert lines[1] == "-" * 80
        assert lines[2].split() == ["cf_identity", "3", "1/2", "2026-01-15T12:00:00+00:00"]
        assert lines[3].split() == ["log_n_remark", "7", "2/2", "2026-01-15T12:00:00+00:00"]

    def test_failed_only(self, tmp_path):
        _write(tmp_path, "log_n_remark", 7)
        _write(tmp_path, "cf_identity", 3, passed=False)

        out = StringIO()
        call_command("listreports", out=str(tmp_path), failed=True, stdout=out)

        output = out.getvalue()
        assert "cf_identity" in output
        assert "log_n_remark" not in output

    def test_no_reports(self, tmp_path):
        out = StringIO()
        call_command("listreports", out=str(tmp_path / "empty"), stdout=out)

        assert "No reports found." in out.getvalue()

    def test_default_directory_from_settings(self, tmp_path):
        _write(tmp_path, "rosen", 1)

        out = StringIO()
        with override_settings(DJANGO_STABLE_LIMITS={"OUTPUT_DIR": str(tmp_path)}):
            call_command("listreports", stdout=out)

        assert "rosen" in out.getvalue()
