from __future__ import annotations

import pytest

from .conftest import failed_names

pytestmark = pytest.mark.acceptance


class TestLimitLaws:
    def test_first_law(self, run):
        report = run("first-law", num_paths=4000, fine_step=0.05, n_values=[6, 8, 10], t_values=[1.0], workers=-1)
        assert report.passed, failed_names(report)
        assert report.oracle["k1"] == pytest.approx((2 / 3.141592653589793) ** 0.5, rel=1e-8)

    def test_second_law_and_oracle_agreement(self, run):
        report = run("second-law", num_paths=4000, n_values=[6, 9, 12], t_values=[1.0], oracle_n=80, workers=-1)
        assert report.passed, failed_names(report)
        names = {verdict.name for verdict in report.verdicts}
        assert {"A3.pipelines_meet", "A3.oracle_limit", "A3.oracle_converging"} <= names

    def test_log_n_law_forgets_t(self, run):
        report = run("log-n", num_paths=4000, n_values=[10_000], t_values=[1.0, 2.0], workers=-1)
        assert report.passed, failed_names(report)
