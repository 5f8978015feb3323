"""Deterministic artifact emission: JSON reports and CSV profiles.

Identical inputs must produce byte-identical files, so floats are written
with shortest round-trip precision and nothing time- or host-dependent goes
into an artifact (timings are logged to the console instead).
"""

from __future__ import annotations

import csv
import json
import math
from importlib import resources
from pathlib import Path

import jsonschema


def _sanitize(obj):
    """json-safe copy: tuples to lists, numpy scalars to python, nan to null."""
    import numpy as np

    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def make_report(command: str, config_hash: str, seed: int, results: dict,
                units: dict, notes: list[str] | None = None) -> dict:
    """Assemble the standard report envelope all JSON artifacts share."""
    return {
        "command": command,
        "config_hash": config_hash,
        "seed": seed,
        "results": _sanitize(results),
        "units": dict(units),
        "notes": list(notes or []),
    }


def write_json(path: str | Path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_sanitize(payload), indent=2, sort_keys=True)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def write_csv(path: str | Path, header: list[str], rows) -> Path:
    """CSV with a unit-bearing header row; floats keep full precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(x) for x in row])
    return path


def _format_cell(x) -> str:
    import numpy as np

    if isinstance(x, (np.floating,)):
        x = float(x)
    if isinstance(x, float):
        return repr(x)
    return str(x)


def report_schema() -> dict:
    with resources.files("mesodrop.schemas").joinpath("report.schema.json").open() as fh:
        return json.load(fh)


def config_schema() -> dict:
    with resources.files("mesodrop.schemas").joinpath("config.schema.json").open() as fh:
        return json.load(fh)


def validate_report(payload: dict) -> None:
    """Raise jsonschema.ValidationError when the envelope is malformed."""
    jsonschema.validate(payload, report_schema())
