"""
Output writers shared by every CLI command.

CSV: '#'-prefixed metadata lines (one ``key: json`` pair each), a header
row, then data rows with floats in 17 significant digits. JSON: one object
with "metadata", "columns" and "rows".
"""

import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from solvers.base_solver import Profile, unwrapped_phase
from tools.errors import ConfigError

FORMATS: tuple[str, ...] = ("csv", "json")
FLOAT_FORMAT = "{:.16e}"


def _plain(value: Any) -> Any:
    """Numpy scalars and complex numbers down to JSON types."""
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def format_cell(value: Any) -> str:
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return FLOAT_FORMAT.format(value)
    if isinstance(value, complex):
        return f"{FLOAT_FORMAT.format(value.real)}{FLOAT_FORMAT.format(value.imag):+}j"
    if value is None:
        return ""
    return str(value)


def profile_rows(profile: Profile) -> tuple[list[str], list[dict[str, Any]]]:
    """z, then Re/Im/abs/phase of every component; phases unwrapped along the grid."""
    columns = ["z"]
    for label in profile.labels:
        columns += [f"re_{label}", f"im_{label}", f"abs_{label}", f"phase_{label}"]
    phases = {label: unwrapped_phase(profile[label]) for label in profile.labels}
    rows = []
    for i, z in enumerate(profile.z):
        row: dict[str, Any] = {"z": float(z)}
        for label in profile.labels:
            v = complex(profile[label][i])
            row[f"re_{label}"] = v.real
            row[f"im_{label}"] = v.imag
            row[f"abs_{label}"] = abs(v)
            row[f"phase_{label}"] = float(phases[label][i])
        rows.append(row)
    return columns, rows


def render_csv(columns: Sequence[str], rows: Iterable[dict[str, Any]], metadata: dict[str, Any]) -> str:
    buf = io.StringIO()
    for key in sorted(metadata):
        buf.write(f"# {key}: {json.dumps(_plain(metadata[key]), sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def render_json(columns: Sequence[str], rows: Iterable[dict[str, Any]], metadata: dict[str, Any]) -> str:
    body = {
        "metadata": _plain(metadata),
        "columns": list(columns),
        "rows": [{c: _plain(row.get(c)) for c in columns} for row in rows],
    }
    return json.dumps(body, indent=2, sort_keys=True) + "\n"


def render(fmt: str, columns: Sequence[str], rows: Iterable[dict[str, Any]], metadata: dict[str, Any]) -> str:
    if fmt == "csv":
        return render_csv(columns, rows, metadata)
    if fmt == "json":
        return render_json(columns, rows, metadata)
    raise ConfigError("unknown output format", parameter="format", value=fmt)


def write_output(text: str, out: Optional[str]) -> None:
    """Write to ``out`` or stdout when no path (or '-') is given."""
    if out is None or out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def read_csv_metadata(text: str) -> dict[str, Any]:
    """Metadata lines of a CSV written by ``render_csv``."""
    meta: dict[str, Any] = {}
    for line in text.splitlines():
        if not line.startswith("# "):
            break
        key, _, raw = line[2:].partition(": ")
        meta[key] = json.loads(raw)
    return meta


def read_csv_rows(text: str) -> tuple[list[str], list[list[str]]]:
    body = [line for line in text.splitlines() if not line.startswith("#")]
    reader = csv.reader(body)
    columns = next(reader)
    return columns, [row for row in reader]
