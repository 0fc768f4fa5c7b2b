from __future__ import annotations

import json
from io import StringIO
from unittest.mock import MagicMock, patch

import pytest
from django.core.management import call_command
from django.core.management.base import CommandError

from django_stable_limits.harness.config import ExperimentKind
from django_stable_limits.harness.reports import StatReport, StatRow, Verdict

RUN = "django_stable_limits.management.commands.stablecheck.run_experiment"


def _report(config, passed=True):
    return StatReport(
        config=config.as_report_dict(),
        rows=[StatRow(config.experiment.value, "increment_cf", None, 2.0, None, 0.41, 0.01, 0.4, 1.0)],
        verdicts=[
            Verdict("A6", "A6.case_1", True, 0.01, 0.09),
            Verdict("A6", "A6.case_2", passed, 0.2, 0.09, detail="x=[0.5], s=[1.0]"),
        ],
    )


def _passing(config, *, workers=None, write=True):
    return _report(config)


def _failing(config, *, workers=None, write=True):
    return _report(config, passed=False)


class TestStablecheckCommand:
    @patch(RUN, side_effect=_passing)
    def test_runs_one_experiment(self, mock_run: MagicMock, tmp_path):
        out = StringIO()
        call_command("stablecheck", "cf-identity", seed=5, paths=300, out=str(tmp_path), stdout=out)

        config = mock_run.call_args.args[0]
        assert config.experiment is ExperimentKind.CF_IDENTITY
        assert config.seed == 5
        assert config.num_paths == 300
        assert config.output_dir == tmp_path
        assert mock_run.call_args.kwargs == {"workers": None, "write": True}

        output = out.getvalue()
        assert "Running cf-identity (seed 5, 300 paths)" in output
        assert "A6.case_1" in output
        assert "PASS" in output
        assert f"Report written: {tmp_path / 'cf_identity-seed5'}.json" in output
        assert "All verdicts passed (1 experiment(s))." in output

    @patch(RUN, side_effect=_passing)
    def test_no_write_and_workers(self, mock_run: MagicMock):
        out = StringIO()
        call_command("stablecheck", "log-n", seed=1, workers=2, no_write=True, stdout=out)

        assert mock_run.call_args.kwargs == {"workers": 2, "write": False}
        assert "Report written" not in out.getvalue()

    @patch(RUN, side_effect=_failing)
    def test_failed_verdicts_exit_nonzero(self, mock_run: MagicMock):
        out = StringIO()
        err = StringIO()
        with pytest.raises(SystemExit) as exc_info:
            call_command("stablecheck", "cf-identity", seed=5, no_write=True, stdout=out, stderr=err)

        assert exc_info.value.code == 1
        assert "FAIL" in out.getvalue()
        assert "x=[0.5], s=[1.0]" in out.getvalue()
        assert "Verdicts failed for: cf-identity" in err.getvalue()

    @patch(RUN, side_effect=_passing)
    def test_all_experiments(self, mock_run: MagicMock):
        out = StringIO()
        call_command("stablecheck", "all", seed=3, no_write=True, stdout=out)

        kinds = [call.args[0].experiment for call in mock_run.call_args_list]
        assert kinds == list(ExperimentKind)
        assert f"All verdicts passed ({len(ExperimentKind)} experiment(s))." in out.getvalue()

    @patch(RUN)
    def test_all_rejects_config_file(self, mock_run: MagicMock, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"seed": 1}))

        with pytest.raises(CommandError, match="cannot be combined"):
            call_command("stablecheck", "all", config=str(path))
        mock_run.assert_not_called()

    @patch(RUN, side_effect=_passing)
    def test_config_file(self, mock_run: MagicMock, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"experiment": "rosen", "seed": 21, "alpha": 1.25, "n_values": [500]}))

        call_command("stablecheck", "rosen", config=str(path), seed=22, no_write=True, verbosity=0)

        config = mock_run.call_args.args[0]
        assert config.alpha == 1.25
        assert config.n_values == (500,)
        assert config.seed == 22

    @patch(RUN)
    def test_missing_seed(self, mock_run: MagicMock):
        with pytest.raises(CommandError, match="seed is required"):
            call_command("stablecheck", "first-law")
        mock_run.assert_not_called()

    @patch(RUN)
    def test_invalid_config_runs_nothing(self, mock_run: MagicMock):
        # Validation covers every experiment before the first one starts.
        with pytest.raises(CommandError, match="at least 100"):
            call_command("stablecheck", "all", seed=1, paths=10)
        mock_run.assert_not_called()

    @patch(RUN)
    def test_unknown_experiment(self, mock_run: MagicMock):
        with pytest.raises(CommandError):
            call_command("stablecheck", "third-law", seed=1)

    @patch(RUN, side_effect=_passing)
    def test_verbose_rows(self, mock_run: MagicMock):
        out = StringIO()
        call_command("stablecheck", "cf-identity", seed=5, no_write=True, verbosity=2, stdout=out)

        assert "increment_cf n=None t=2 order=None" in out.getvalue()

    @patch(RUN, side_effect=_passing)
    def test_quiet(self, mock_run: MagicMock):
        out = StringIO()
        call_command("stablecheck", "cf-identity", seed=5, no_write=True, verbosity=0, stdout=out)

        assert out.getvalue() == ""
