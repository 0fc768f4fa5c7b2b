"""Report assembly and the JSON / CSV writers."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from datetime import UTC, datetime
from pathlib import Path
from typing import Any

from ..signals import report_written

SCHEMA_VERSION = 1
CSV_COLUMNS = (
    "experiment",
    "normalization",
    "n",
    "t",
    "order",
    "empirical",
    "std_error",
    "target",
    "z_score",
    "ks",
    "cf_distance",
)


@dataclass(frozen=True)
class StatRow:
    experiment: str
    normalization: str
    n: int | None
    t: float
    order: int | None
    empirical: float
    std_error: float
    target: float | None = None
    z_score: float | None = None
    ks: float | None = None
    cf_distance: float | None = None


@dataclass(frozen=True)
class Verdict:
    """Pass/fail of one check, named after the acceptance criterion it belongs to."""

    criterion: str
    name: str
    passed: bool
    value: float | None
    threshold: float | None
    detail: str = ""


@dataclass
class StatReport:
    config: dict[str, Any]
    rows: list[StatRow] = field(default_factory=list)
    oracle: dict[str, Any] = field(default_factory=dict)
    verdicts: list[Verdict] = field(default_factory=list)
    created_at: str = field(default_factory=lambda: datetime.now(tz=UTC).isoformat(timespec="seconds"))

    @property
    def experiment(self) -> str:
        return str(self.config["experiment"])

    @property
    def passed(self) -> bool:
        return all(verdict.passed for verdict in self.verdicts)

    @property
    def failed_verdicts(self) -> list[Verdict]:
        return [verdict for verdict in self.verdicts if not verdict.passed]

    def as_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "created_at": self.created_at,
            "config": self.config,
            "rows": [asdict(row) for row in self.rows],
            "oracle": self.oracle,
            "verdicts": [asdict(verdict) for verdict in self.verdicts],
        }

    def to_json(self) -> str:
        return json.dumps(_finite(self.as_dict()), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _finite(value: Any) -> Any:
    # JSON has no NaN or infinity; they are written as null.
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {str(key): _finite(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(item) for item in value]
    return value


def report_stem(report: StatReport) -> str:
    return f"{report.experiment}-seed{report.config['seed']}"


def write_csv(report: StatReport, path: Path) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in report.rows:
            data = _finite(asdict(row))
            writer.writerow(["" if data[column] is None else data[column] for column in CSV_COLUMNS])


def write_report(report: StatReport, output_dir: str | Path) -> tuple[Path, Path]:
    """Write `<experiment>-seed<seed>.json` and `.csv` into output_dir."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    stem = report_stem(report)
    json_path = output_dir / f"{stem}.json"
    csv_path = output_dir / f"{stem}.csv"
    json_path.write_text(report.to_json())
    write_csv(report, csv_path)
    report_written.send(sender=StatReport, json_path=json_path, csv_path=csv_path)
    return json_path, csv_path


def read_report(path: str | Path) -> dict[str, Any]:
    return json.loads(Path(path).read_text())


def list_reports(output_dir: str | Path) -> list[dict[str, Any]]:
    """Summaries of the JSON reports in output_dir, sorted by file name."""
    output_dir = Path(output_dir)
    if not output_dir.is_dir():
        return []
    summaries = []
    for path in sorted(output_dir.glob("*.json")):
        try:
            data = read_report(path)
        except (OSError, json.JSONDecodeError):
            continue
        if not isinstance(data, dict) or data.get("schema_version") != SCHEMA_VERSION:
            continue
        verdicts = data.get("verdicts", [])
        summaries.append(
            {
                "path": path,
                "experiment": data["config"]["experiment"],
                "seed": data["config"]["seed"],
                "passed": sum(1 for verdict in verdicts if verdict["passed"]),
                "total": len(verdicts),
                "created_at": data.get("created_at", ""),
            }
        )
    return summaries
