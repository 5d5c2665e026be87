from __future__ import annotations

import csv
import io
import json
import math
from datetime import datetime
from typing import Iterable, Optional

import pytz

from .config import Config

_tz = pytz.timezone(Config.timezone)


def now_local() -> datetime:
    return datetime.now(_tz)


def format_datetime(dt: Optional[datetime] = None, fmt: str = "%d %b %Y %H:%M %Z") -> str:
    if dt is None:
        dt = now_local()
    elif dt.tzinfo is None:
        dt = _tz.localize(dt)
    return dt.strftime(fmt)


def format_section_header(title: str) -> str:
    return f"**{title}**"


def format_number(value, digits: int = Config.significant_digits) -> str:
    """Format a report number with fixed significant digits; '' when absent.

    Integers stay integers so grid columns read '3', not '3.00000000000'.
    """
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if math.isnan(value):
        return "nan"
    if value == 0.0:
        return "0"
    return f"{value:.{digits}g}"


def format_verdict(ok: Optional[bool]) -> str:
    if ok is None:
        return ""
    return "pass" if ok else "fail"


def format_interval(center: float, sigma: float, level: float = Config.sigma_level) -> str:
    """Format a confidence interval like '0.875 ± 0.00314'."""
    return f"{format_number(center, 6)} ± {format_number(level * sigma, 3)}"


def _row_strings(row: dict) -> dict:
    out = {}
    for col in Config.csv_columns:
        value = row.get(col)
        if col in ("task", "verdict", "provenance"):
            out[col] = "" if value is None else str(value)
        else:
            out[col] = format_number(value)
    return out


def render_csv(rows: Iterable[dict]) -> str:
    """Render report rows as CSV with the fixed column order and a header."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(Config.csv_columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(_row_strings(row))
    return buf.getvalue()


def render_json(rows: Iterable[dict]) -> str:
    """Render report rows as a JSON array; numbers as decimal strings, absent as null."""
    payload = []
    for row in rows:
        strings = _row_strings(row)
        payload.append({
            col: (None if strings[col] == "" and col not in ("task", "verdict", "provenance") else strings[col])
            for col in Config.csv_columns
        })
    return json.dumps(payload, indent=2) + "\n"


def format_summary(rows: list[dict], title: str) -> str:
    """Short terminal summary printed to stderr after a verification run."""
    failed = [r for r in rows if r.get("verdict") == "fail"]
    lines = [format_section_header(title), f"Rows: {len(rows)} | Failed: {len(failed)}"]
    for r in failed:
        lines.append(f"  - {row_id(r)}")
    return "\n".join(lines)


def row_id(row: dict) -> str:
    parts = [str(row.get("task", "?"))]
    for key in ("d", "N", "epsilon"):
        if row.get(key) is not None:
            parts.append(f"{key}={format_number(row[key])}")
    return " ".join(parts)
