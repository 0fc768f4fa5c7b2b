from __future__ import annotations

import pytest

from .conftest import failed_names

pytestmark = pytest.mark.acceptance


class TestOracles:
    def test_appendix_suite(self, run):
        report = run("appendix", n_values=[500], t_values=[1.0])
        assert report.passed, failed_names(report)

    def test_rosen_constant(self, run):
        report = run("rosen", alpha=1.5, f_id="dog", g_id="hat", num_paths=4000, workers=-1)
        assert report.passed, failed_names(report)
        assert report.oracle["second_moment_rosen"]["matched"] == "one_over_pi"

    def test_constants(self, run):
        report = run("constants", alpha=1.5)
        assert report.passed, failed_names(report)
        constants = report.oracle["constants"]
        assert constants["rosen_c"]["value"] == pytest.approx(constants["rosen_c"]["closed_form"], rel=1e-5)
