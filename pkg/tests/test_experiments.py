from __future__ import annotations

import math
from unittest.mock import patch

import numpy as np

from django_stable_limits import signals
from django_stable_limits.exceptions import NumericalError
from django_stable_limits.harness.config import ExperimentKind, build_config
from django_stable_limits.harness.experiments import CF_CASES, CRITERIA, RUNNERS, RunResult, run_experiment
from django_stable_limits.moment_oracle import OracleResult
from django_stable_limits.quadrature import Estimate


def _config(experiment, tmp_path, **values):
    return build_config(experiment, {"seed": 11, "output_dir": str(tmp_path), **values})


class TestRunResult:
    def test_check_defaults_to_threshold(self):
        result = RunResult("A1")
        assert result.check("small", 0.1, 0.2).passed
        assert not result.check("large", 0.3, 0.2).passed
        assert not result.check("nan", math.nan, 0.2).passed
        assert not result.check("missing", None, 0.2).passed
        assert [verdict.name for verdict in result.verdicts] == ["A1.small", "A1.large", "A1.nan", "A1.missing"]

    def test_explicit_outcome(self):
        verdict = RunResult("A7").check("converging", 0.5, None, passed=True, detail="ladder")
        assert verdict.passed
        assert verdict.criterion == "A7"
        assert verdict.detail == "ladder"

    def test_every_experiment_has_a_runner(self):
        assert set(RUNNERS) == set(ExperimentKind)
        assert set(CRITERIA) == set(ExperimentKind)


class TestRunExperiment:
    def test_cf_identity(self, tmp_path):
        report = run_experiment(_config("cf-identity", tmp_path, num_paths=2000), workers=1)
        assert report.passed
        assert [verdict.name for verdict in report.verdicts] == [f"A6.case_{i}" for i in range(1, len(CF_CASES) + 1)]
        assert (tmp_path / "cf_identity-seed11.json").exists()
        assert (tmp_path / "cf_identity-seed11.csv").exists()

    def test_report_does_not_depend_on_workers(self, tmp_path):
        config = _config("cf-identity", tmp_path, num_paths=300)
        serial = run_experiment(config, workers=1, write=False)
        parallel = run_experiment(config, workers=2, write=False)
        assert serial.rows == parallel.rows
        assert serial.verdicts == parallel.verdicts
        assert "workers" not in serial.config

    def test_limit_moments_rows(self, tmp_path):
        report = run_experiment(_config("limit-moments", tmp_path, num_paths=5000, t_values=[1.0]), write=False)
        assert len(report.rows) == 8
        assert {row.normalization for row in report.rows} == {"exponential", "mixed_gaussian"}
        assert [verdict.name for verdict in report.verdicts] == ["A4.exponential_t1", "A4.mixed_gaussian_t1"]

    def test_same_seed_same_report(self, tmp_path):
        config = _config("limit-moments", tmp_path, num_paths=1000, t_values=[0.5])
        first = run_experiment(config, write=False)
        second = run_experiment(config, write=False)
        assert first.rows == second.rows

    def test_no_write(self, tmp_path):
        run_experiment(_config("cf-identity", tmp_path, num_paths=200), write=False)
        assert list(tmp_path.iterdir()) == []

    def test_degenerate_input_fails(self, tmp_path):
        config = _config("first-law", tmp_path, f_id="zero", n_values=[2], num_paths=100)
        report = run_experiment(config, write=False)
        assert not report.passed
        assert [verdict.name for verdict in report.verdicts] == ["A1.degenerate_input"]
        assert "cannot be tested" in report.verdicts[0].detail

    def test_first_law_verdicts(self, tmp_path):
        config = _config("first-law", tmp_path, n_values=[2, 3], num_paths=100, fine_step=0.1)
        report = run_experiment(config, write=False)
        assert [verdict.name for verdict in report.verdicts] == [
            "A1.mean_error_t1",
            "A1.ks_t1",
            "A1.mean_trend_t1",
            "A1.ks_trend_t1",
            "A1.grid_bias_t1",
            "A1.refinement",
            "A1.variance_decay_slope",
        ]
        assert set(report.oracle["expected_mean_t1"]) == {"2", "3"}
        assert len(report.oracle["variance_decay"]["variances"]) == 2

    def test_first_law_single_n_skips_variance_decay(self, tmp_path):
        report = run_experiment(_config("first-law", tmp_path, n_values=[2], num_paths=100, fine_step=0.1), write=False)
        names = [verdict.name for verdict in report.verdicts]
        assert "A1.refinement" in names
        assert "A1.variance_decay_slope" not in names

    def _second_law(self, tmp_path, ensembles):
        oracle = OracleResult("second_moment_theorem2", 1.0, 1.0, 80, 2, 0.0, True)
        with (
            patch(
                "django_stable_limits.harness.experiments.functional_ensemble",
                side_effect=lambda normalization, alpha, n, *args, **kwargs: ensembles[n],
            ),
            patch("django_stable_limits.harness.experiments.theorem2_moment_at", return_value=Estimate(1.0, 0.0)),
            patch("django_stable_limits.harness.experiments.second_moment_theorem2", return_value=oracle),
        ):
            report = run_experiment(_config("second-law", tmp_path, n_values=[2, 3], num_paths=400), write=False)
        return next(verdict for verdict in report.verdicts if verdict.name == "A2.mean_ratio_trend")

    def test_second_law_mean_ratio_trend(self, tmp_path):
        base = np.random.default_rng(0).standard_normal(400)
        centred = base - base.mean()
        shifted = centred + 0.5 * centred.std(ddof=1)
        assert not self._second_law(tmp_path, {2: centred, 3: shifted}).passed
        assert self._second_law(tmp_path, {2: shifted, 3: centred}).passed

    def test_library_error_becomes_verdict(self, tmp_path):
        def failing(config, workers):
            raise NumericalError("k2", 1e-3, 1e-8)

        received: list[dict] = []

        def handler(sender, **kwargs):
            received.append(kwargs)

        signals.verdict_failed.connect(handler, dispatch_uid="test_verdict_failed")
        try:
            with patch.dict(RUNNERS, {ExperimentKind.SECOND_LAW: failing}):
                report = run_experiment(_config("second-law", tmp_path), write=False)
        finally:
            signals.verdict_failed.disconnect(dispatch_uid="test_verdict_failed")

        assert not report.passed
        verdict = report.verdicts[0]
        assert verdict.name == "A2.numerical_failure"
        assert "did not converge" in verdict.detail
        assert [item["verdict"] for item in received] == [verdict]

    def test_sends_experiment_signals(self, tmp_path):
        events: list[str] = []

        def on_pre(sender, **kwargs):
            events.append(f"pre:{kwargs['config'].experiment}")

        def on_post(sender, **kwargs):
            events.append(f"post:{kwargs['report'].experiment}")

        signals.pre_experiment.connect(on_pre, dispatch_uid="test_pre")
        signals.post_experiment.connect(on_post, dispatch_uid="test_post")
        try:
            run_experiment(_config("cf-identity", tmp_path, num_paths=200), write=False)
        finally:
            signals.pre_experiment.disconnect(dispatch_uid="test_pre")
            signals.post_experiment.disconnect(dispatch_uid="test_post")
        assert events == ["pre:cf_identity", "post:cf_identity"]
