"""
Result Formatters
=================
Deterministic text rendering of reports. Key/value reports are what the
CLI writes to disk; the pipe table is used for multi-row summaries.
"""

import math
import logging

logger = logging.getLogger(__name__)


def format_value(value):
    """
    Render one value for a ``key = value`` line.

    - Floats use repr, so the text round-trips exactly
    - Sequences are comma-joined
    - Dicts are rendered as ``k:v`` pairs in key order
    """
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return repr(float(value))
    if isinstance(value, dict):
        return ", ".join(f"{k}:{format_value(v)}" for k, v in sorted(value.items()))
    if isinstance(value, (list, tuple)):
        return ", ".join(format_value(v) for v in value)
    if hasattr(value, "item"):
        return format_value(value.item())
    return str(value)


def format_key_values(data, title=None):
    """``key = value`` lines in insertion order, optional ``# title`` line."""
    lines = []
    if title:
        lines.append(f"# {title}")
    for key, value in data.items():
        lines.append(f"{key} = {format_value(value)}")
    return "\n".join(lines) + "\n"


def format_table(rows, columns=None, digits=4):
    """
    Pipe-separated table.

    - Empty input → a fixed message
    - Floats are rounded to ``digits`` decimals for reading, not for parsing
    """
    if not rows:
        return "No results found."

    columns = columns or list(rows[0].keys())
    lines = [" | ".join(columns)]
    for row in rows:
        parts = []
        for col in columns:
            v = row.get(col, "")
            parts.append(f"{v:.{digits}f}" if isinstance(v, float) else str(v))
        lines.append(" | ".join(parts))
    return "\n".join(lines)
