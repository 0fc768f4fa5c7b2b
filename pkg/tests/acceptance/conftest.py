from __future__ import annotations

from collections.abc import Callable

import pytest

from django_stable_limits.harness.config import build_config
from django_stable_limits.harness.experiments import run_experiment
from django_stable_limits.harness.reports import StatReport

SEED = 20_240_117


def failed_names(report: StatReport) -> list[str]:
    return [
        f"{verdict.name}: {verdict.value} vs {verdict.threshold} {verdict.detail}" for verdict in report.failed_verdicts
    ]


@pytest.fixture
def run(tmp_path) -> Callable[..., StatReport]:
    """Run an experiment at its acceptance scale with the fixed seed."""

    def _run(experiment: str, workers: int | None = None, **values: object) -> StatReport:
        config = build_config(experiment, {"seed": SEED, "output_dir": str(tmp_path), **values})
        return run_experiment(config, workers=workers, write=False)

    return _run
