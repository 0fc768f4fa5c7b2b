from __future__ import annotations

import json

import pytest

from django_stable_limits.harness.config import build_config
from django_stable_limits.harness.experiments import run_experiment

from .conftest import SEED

pytestmark = pytest.mark.acceptance


def _written(tmp_path, name, workers, **values):
    output_dir = tmp_path / name
    config = build_config("first-law", {"seed": SEED, "output_dir": str(output_dir), **values})
    run_experiment(config, workers=workers)
    data = json.loads((output_dir / f"first_law-seed{SEED}.json").read_text())
    # The only field that depends on the wall clock.
    data.pop("created_at")
    return data, (output_dir / f"first_law-seed{SEED}.csv").read_bytes()


class TestInvariants:
    def test_reports_do_not_depend_on_workers(self, tmp_path):
        values = {"num_paths": 400, "n_values": [4, 5], "t_values": [1.0]}
        assert _written(tmp_path, "serial", 1, **values) == _written(tmp_path, "parallel", 4, **values)

    def test_seed_determines_report(self, tmp_path):
        values = {"num_paths": 400, "n_values": [4], "t_values": [1.0]}
        assert _written(tmp_path, "first", 2, **values) == _written(tmp_path, "second", 2, **values)
