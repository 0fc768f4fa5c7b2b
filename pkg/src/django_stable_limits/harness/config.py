"""Experiment configuration: JSON files, per-experiment defaults and validation.

Values are resolved in this order, highest first: command-line overrides, the
config file, the experiment's own defaults, then the DJANGO_STABLE_LIMITS
settings.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields
from enum import StrEnum
from pathlib import Path
from typing import Any

from ..exceptions import ConfigError, FunctionNotFound, ParameterError
from ..functions.registry import get_test_function
from ..moment_oracle import MAX_LOG_HORIZON
from ..settings import get_setting
from ..stable_sim import Discretization

OUTPUT_DIR_ENV = "STABLE_LIMITS_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "stable-limits-reports"
MIN_PATHS = 100
MAX_SEED = 2**64 - 1


class ExperimentKind(StrEnum):
    FIRST_LAW = "first_law"
    SECOND_LAW = "second_law"
    ROSEN = "rosen"
    LOG_N_REMARK = "log_n_remark"
    CONSTANTS = "constants"
    APPENDIX = "appendix"
    CF_IDENTITY = "cf_identity"
    LIMIT_MOMENTS = "limit_moments"
    LOCAL_TIME = "local_time"

    @property
    def cli_name(self) -> str:
        return "log-n" if self is ExperimentKind.LOG_N_REMARK else self.value.replace("_", "-")

    @classmethod
    def from_cli(cls, name: str) -> ExperimentKind:
        for kind in cls:
            if name in (kind.cli_name, kind.value):
                return kind
        raise ConfigError(f"Unknown experiment: {name}")


# Experiment-specific defaults; anything missing falls back to settings.
EXPERIMENT_DEFAULTS: dict[ExperimentKind, dict[str, Any]] = {
    ExperimentKind.FIRST_LAW: {"alpha": 1.0, "f_id": "gauss", "n_values": [6, 8, 10], "t_values": [1.0]},
    ExperimentKind.SECOND_LAW: {
        "alpha": 1.0,
        "f_id": "gauss_deriv",
        "n_values": [6, 9, 12],
        "t_values": [1.0],
        "oracle_n": 80,
    },
    ExperimentKind.ROSEN: {
        "alpha": 1.5,
        "f_id": "dog",
        "g_id": "hat",
        "n_values": [2000],
        "t_values": [1.0],
        "oracle_n": 20000,
    },
    ExperimentKind.LOG_N_REMARK: {"alpha": 1.0, "f_id": "gauss", "n_values": [10000], "t_values": [1.0, 2.0]},
    ExperimentKind.CONSTANTS: {"alpha": 1.5, "f_id": "dog", "g_id": "hat", "n_values": [1], "t_values": [1.0]},
    ExperimentKind.APPENDIX: {"alpha": 1.0, "f_id": "gauss_deriv", "n_values": [500], "t_values": [1.0]},
    ExperimentKind.CF_IDENTITY: {"alpha": 1.0, "n_values": [1], "t_values": [1.0], "num_paths": 100_000},
    ExperimentKind.LIMIT_MOMENTS: {"n_values": [1], "t_values": [0.5, 1.0, 2.0], "num_paths": 1_000_000},
    ExperimentKind.LOCAL_TIME: {"alpha_values": [1.5, 2.0], "n_values": [1], "t_values": [1.0]},
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: ExperimentKind
    seed: int
    alpha: float = 1.0
    f_id: str = "gauss"
    g_id: str = "hat"
    n_values: tuple[int, ...] = (10,)
    t_values: tuple[float, ...] = (1.0,)
    num_paths: int = 4000
    fine_step: float = 0.05
    switch_radius: float | None = None
    coarse_ratio: float = 0.01
    distance_ratio: float = 0.02
    epsilon_local_time: float | None = None
    alpha_values: tuple[float, ...] = (1.5, 2.0)
    oracle_n: int | None = None
    bias_budget: float = 0.01
    output_dir: Path = field(default_factory=lambda: Path(DEFAULT_OUTPUT_DIR))

    def __post_init__(self) -> None:
        object.__setattr__(self, "experiment", ExperimentKind(self.experiment))
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        object.__setattr__(self, "t_values", tuple(float(t) for t in self.t_values))
        object.__setattr__(self, "alpha_values", tuple(float(a) for a in self.alpha_values))
        object.__setattr__(self, "output_dir", Path(self.output_dir))

    @property
    def discretization(self) -> Discretization:
        return Discretization.from_settings(
            fine_step=self.fine_step,
            coarse_ratio=self.coarse_ratio,
            distance_ratio=self.distance_ratio,
            switch_radius=self.switch_radius,
        )

    def as_report_dict(self) -> dict[str, Any]:
        """The config as echoed into reports; the output directory is left out."""
        data = asdict(self)
        data.pop("output_dir")
        data["experiment"] = self.experiment.value
        data["n_values"] = list(self.n_values)
        data["t_values"] = list(self.t_values)
        data["alpha_values"] = list(self.alpha_values)
        return data


CONFIG_KEYS = frozenset(f.name for f in fields(ExperimentConfig))


def load_config_file(path: str | Path) -> dict[str, Any]:
    """Read one experiment's JSON config into a plain dict."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"Cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must hold a JSON object.")
    unknown = sorted(set(data) - CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"Unknown config keys in {path}: {', '.join(unknown)}")
    return data


def default_output_dir() -> Path:
    configured = get_setting("OUTPUT_DIR")
    if configured:
        return Path(str(configured))
    return Path(os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR)


def _settings_defaults() -> dict[str, Any]:
    return {
        "num_paths": get_setting("NUM_PATHS"),
        "fine_step": get_setting("FINE_STEP"),
        "coarse_ratio": get_setting("COARSE_RATIO"),
        "distance_ratio": get_setting("DISTANCE_RATIO"),
        "switch_radius": get_setting("SWITCH_RADIUS"),
        "epsilon_local_time": get_setting("LOCAL_TIME_EPSILON"),
        "bias_budget": get_setting("BIAS_BUDGET"),
        "output_dir": default_output_dir(),
    }


def build_config(
    experiment: ExperimentKind | str,
    file_values: dict[str, Any] | None = None,
    overrides: dict[str, Any] | None = None,
) -> ExperimentConfig:
    """Merge the layers for one experiment and validate the result."""
    kind = experiment if isinstance(experiment, ExperimentKind) else ExperimentKind.from_cli(experiment)
    file_values = dict(file_values or {})
    named = file_values.pop("experiment", None)
    if named is not None and ExperimentKind.from_cli(str(named)) is not kind:
        raise ConfigError(f"Config file is for experiment '{named}', not '{kind.cli_name}'.")

    values: dict[str, Any] = _settings_defaults()
    values.update(EXPERIMENT_DEFAULTS[kind])
    values.update(file_values)
    values.update({key: value for key, value in (overrides or {}).items() if value is not None})
    if values.get("seed") is None:
        raise ConfigError("A seed is required; pass --seed or set 'seed' in the config file.")
    try:
        config = ExperimentConfig(experiment=kind, **values)
        validate_config(config)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"Invalid config for {kind.cli_name}: {exc}") from exc
    return config


def validate_config(config: ExperimentConfig) -> None:
    """Check ranges and the α-regime of the experiment; raises ConfigError."""
    if not 0 <= config.seed <= MAX_SEED:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {config.seed}.")
    if config.num_paths < MIN_PATHS:
        raise ConfigError(f"num_paths must be at least {MIN_PATHS}, got {config.num_paths}.")
    if not config.n_values or any(n < 1 for n in config.n_values):
        raise ConfigError("n_values must be a non-empty list of positive integers.")
    if not config.t_values or any(not t > 0 for t in config.t_values):
        raise ConfigError("t_values must be a non-empty list of positive numbers.")
    if config.epsilon_local_time is not None and not config.epsilon_local_time > 0:
        raise ConfigError("epsilon_local_time must be positive.")
    if config.oracle_n is not None and config.oracle_n < 1:
        raise ConfigError("oracle_n must be a positive integer.")
    if not 0 < config.bias_budget < 1:
        raise ConfigError(f"bias_budget must lie in (0, 1), got {config.bias_budget}.")

    kind = config.experiment
    if kind in (ExperimentKind.FIRST_LAW, ExperimentKind.SECOND_LAW, ExperimentKind.LOG_N_REMARK):
        if config.alpha != 1.0:
            raise ConfigError(f"{kind.cli_name} runs the Cauchy process; alpha must be 1, got {config.alpha}.")
    if kind in (ExperimentKind.ROSEN, ExperimentKind.CONSTANTS) and not 1.0 < config.alpha < 2.0:
        raise ConfigError(f"{kind.cli_name} needs 1 < alpha < 2, got {config.alpha}.")
    exponential = (ExperimentKind.FIRST_LAW, ExperimentKind.SECOND_LAW, ExperimentKind.APPENDIX)
    if kind in exponential and max(config.n_values) * max(config.t_values) > MAX_LOG_HORIZON:
        raise ConfigError(f"{kind.cli_name} runs to e^(n·t); n·t must not exceed {MAX_LOG_HORIZON:g}.")
    if kind is ExperimentKind.LOG_N_REMARK and min(config.n_values) < 3:
        raise ConfigError("log-n needs n >= 3.")
    if kind is ExperimentKind.LOCAL_TIME and any(not 1.0 < a <= 2.0 for a in config.alpha_values):
        raise ConfigError("local-time needs every alpha in (1, 2].")

    try:
        config.discretization  # noqa: B018
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc
    if kind not in (ExperimentKind.CF_IDENTITY, ExperimentKind.LIMIT_MOMENTS, ExperimentKind.LOCAL_TIME):
        paired = kind in (ExperimentKind.ROSEN, ExperimentKind.CONSTANTS)
        for f_id in (config.f_id, config.g_id) if paired else (config.f_id,):
            try:
                get_test_function(f_id)
            except (FunctionNotFound, ParameterError) as exc:
                raise ConfigError(str(exc)) from exc
