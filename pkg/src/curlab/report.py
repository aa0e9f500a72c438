"""JSON reports emitted by the command-line tool.

A report is ``{"schema_version", "command", "inputs", "results"}``. Index sets
are 1-based in reports; floats are written with ``repr`` so every value
round-trips bit-exactly.
"""

from __future__ import annotations

import json
import math

import numpy as np

SCHEMA_VERSION = "1.0"
COMMANDS = ("decompose", "check", "select", "verify-sweep", "verify-open-question")


def jsonable(obj):
    """Convert numpy values and tuples to plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            raise ValueError(f"non-finite value {v} cannot be reported")
        return v
    return obj


def one_based(indices) -> list[int]:
    return [int(i) + 1 for i in indices]


def make_report(command: str, inputs: dict, results: dict) -> dict:
    if command not in COMMANDS:
        raise ValueError(f"unknown command {command!r}")
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "inputs": jsonable(inputs),
        "results": jsonable(results),
    }


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def parse_report(text: str) -> dict:
    """Parse a report and check its envelope; raises ``ValueError`` on mismatch."""
    report = json.loads(text)
    if not isinstance(report, dict):
        raise ValueError("report must be a JSON object")
    missing = {"schema_version", "command", "inputs", "results"} - report.keys()
    if missing:
        raise ValueError(f"report is missing {sorted(missing)}")
    major = str(report["schema_version"]).split(".")[0]
    if major != SCHEMA_VERSION.split(".")[0]:
        raise ValueError(f"unsupported schema_version {report['schema_version']!r}")
    if report["command"] not in COMMANDS:
        raise ValueError(f"unknown command {report['command']!r}")
    return report
