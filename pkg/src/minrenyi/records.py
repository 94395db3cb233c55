"""Run records, JSONL rows and CSV export for the experiment runner.

Layout of one run: ``OUT/<run_id>/record.json``, ``rows.jsonl`` and
``export.csv``. Floats are written with Python's shortest round-trip repr,
so re-reading any file reproduces every double bit for bit.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

__all__ = [
    "ROW_SCHEMA",
    "RECORD_SCHEMA",
    "RunRecord",
    "make_run_id",
    "canonical_json",
    "write_run",
    "read_rows",
    "read_csv",
]

ROW_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["trial", "metrics"],
    "additionalProperties": False,
    "properties": {
        "trial": {"type": "integer", "minimum": 0},
        "metrics": {"type": "object", "additionalProperties": {"type": "number"}},
    },
}

RECORD_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": [
        "run_id",
        "command",
        "parameters",
        "master_seed",
        "metrics",
        "artifact_paths",
        "timestamp",
    ],
    "properties": {
        "run_id": {"type": "string"},
        "command": {"type": "string"},
        "parameters": {"type": "object"},
        "master_seed": {"type": "integer"},
        "metrics": {"type": "object", "additionalProperties": {"type": "number"}},
        "artifact_paths": {"type": "array", "items": {"type": "string"}},
        "timestamp": {"type": "string"},
    },
}


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def make_run_id(command: str, parameters: dict, master_seed: int) -> str:
    """Content hash of (command, parameters, seed); timestamps never enter it."""
    payload = canonical_json({"command": command, "parameters": parameters, "seed": master_seed})
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass
class RunRecord:
    command: str
    parameters: dict
    master_seed: int
    metrics: dict = field(default_factory=dict)
    artifact_paths: list = field(default_factory=list)
    timestamp: str = ""
    run_id: str = ""

    def __post_init__(self):
        if not self.run_id:
            self.run_id = make_run_id(self.command, self.parameters, self.master_seed)
        if not self.timestamp:
            self.timestamp = datetime.now(timezone.utc).isoformat()

    def to_dict(self) -> dict:
        return asdict(self)


def write_run(out: Path, record: RunRecord, rows=(), csv_rows=None, extra_files=None) -> Path:
    """Write a run directory and return its path.

    ``rows`` are ``(trial, metrics)`` pairs, written in trial order;
    ``csv_rows`` are flat dicts for ``export.csv``; ``extra_files`` maps
    file names to JSON-serializable payloads.
    """
    run_dir = Path(out) / record.run_id
    run_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    rows = sorted(rows, key=lambda r: r[0])
    with open(run_dir / "rows.jsonl", "w") as fh:
        for trial, metrics in rows:
            fh.write(json.dumps({"trial": int(trial), "metrics": metrics}, allow_nan=False) + "\n")
    paths.append(str(run_dir / "rows.jsonl"))
    if csv_rows:
        fields = list(csv_rows[0])
        with open(run_dir / "export.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields)
            writer.writeheader()
            writer.writerows(csv_rows)
        paths.append(str(run_dir / "export.csv"))
    for name, payload in (extra_files or {}).items():
        with open(run_dir / name, "w") as fh:
            json.dump(payload, fh, allow_nan=False)
            fh.write("\n")
        paths.append(str(run_dir / name))
    record.artifact_paths = paths
    with open(run_dir / "record.json", "w") as fh:
        json.dump(record.to_dict(), fh, indent=2, allow_nan=False)
        fh.write("\n")
    return run_dir


def read_rows(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def read_csv(path) -> list[dict]:
    """Rows of an export.csv with numeric columns parsed back to float."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            parsed = {}
            for k, v in row.items():
                try:
                    parsed[k] = float(v)
                except ValueError:
                    parsed[k] = v
            out.append(parsed)
    return out
