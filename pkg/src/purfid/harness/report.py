"""CSV and JSON renderings of a :class:`SweepReport`.

All floats are written with 17 significant digits so both formats round-trip
to the same doubles. CSV slope fits follow the data as ``#`` comment lines.
"""

from __future__ import annotations

import csv
import io
import math

from .slopes import SlopeFit
from .sweep import COLUMNS, SweepReport


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def to_csv(report: SweepReport) -> str:
    buf = io.StringIO()
    buf.write(",".join(COLUMNS) + "\n")
    for row in report.rows:
        buf.write(",".join(fmt(row[c]) for c in COLUMNS) + "\n")
    for name, fit in report.slopes.items():
        if fit is None:
            buf.write(f"# slope,{name},insufficient points\n")
        else:
            buf.write(
                f"# slope,{name},{fmt(fit.slope)},{fmt(fit.intercept)},{fmt(fit.r2)},{len(fit.used)}\n"
            )
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    """Rows of a report CSV; comment lines are skipped."""
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    reader = csv.DictReader(lines)
    missing = set(COLUMNS) - set(reader.fieldnames or ())
    if missing:
        raise ValueError(f"report is missing columns: {', '.join(sorted(missing))}")
    return [{c: float(row[c]) for c in COLUMNS} for row in reader]


def _json(value, indent: int = 0) -> str:
    pad = "  " * (indent + 1)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f'{pad}"{k}": {_json(v, indent + 1)}' for k, v in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + "  " * indent + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        return "[\n" + ",\n".join(pad + _json(v, indent + 1) for v in value) + "\n" + "  " * indent + "]"
    if isinstance(value, bool) or value is None:
        return {True: "true", False: "false", None: "null"}[value]
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return fmt(value) if math.isfinite(value) else "null"
    escaped = str(value).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def _slope_dict(fit: SlopeFit | None):
    if fit is None:
        return None
    return {"slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2,
            "used": list(fit.used), "excluded": list(fit.excluded)}


def to_json(report: SweepReport) -> str:
    doc = {
        "meta": report.meta,
        "columns": list(COLUMNS),
        "rows": [{c: row[c] for c in COLUMNS} for row in report.rows],
        "slopes": {name: _slope_dict(fit) for name, fit in report.slopes.items()},
    }
    return _json(doc) + "\n"


def render(report: SweepReport, fmt_name: str) -> str:
    return to_json(report) if fmt_name == "json" else to_csv(report)
