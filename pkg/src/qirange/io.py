"""Flat key-value config files, dataset writers and run manifests."""

from __future__ import annotations

import json
import math
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Mapping


def parse_config(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, blank lines are skipped.

    Keys are normalised to lower case with dashes turned into underscores.
    Later occurrences of a key override earlier ones.
    """
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip().lower().replace("-", "_")
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        out[key] = value.strip()
    return out


def read_config(path: str | os.PathLike) -> dict[str, str]:
    return parse_config(Path(path).read_text())


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.16e}"
    if value is None:
        return ""
    return str(value)


def to_csv(rows: list[Mapping[str, Any]], columns: Iterable[str] | None = None) -> str:
    if not rows:
        return ""
    cols = list(columns) if columns is not None else list(rows[0])
    lines = [",".join(cols)]
    for row in rows:
        cells = [format_value(row.get(c)) for c in cols]
        for cell in cells:
            if "," in cell or "\n" in cell:
                raise ValueError(f"CSV cell {cell!r} contains a delimiter")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _json_value(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return format_value(value)
    return value


def to_json(rows: list[Mapping[str, Any]], columns: Iterable[str] | None = None) -> str:
    cols = list(columns) if columns is not None else (list(rows[0]) if rows else [])
    data = [{c: _json_value(row.get(c)) for c in cols} for row in rows]
    return json.dumps(data, indent=1) + "\n"


def render(rows: list[Mapping[str, Any]], fmt: str, columns: Iterable[str] | None = None) -> str:
    if fmt == "csv":
        return to_csv(rows, columns)
    if fmt == "json":
        return to_json(rows, columns)
    raise ValueError(f"unknown format {fmt!r}")


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to a temporary file next to ``path`` and rename it into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def manifest_text(
    command: str,
    version: str,
    params: Mapping[str, Any],
    warnings: Iterable[str] = (),
    notes: Iterable[str] = (),
) -> str:
    """Manifest in the config format, so it can be fed back through ``--config``.

    Keys keep their insertion order; for sweeps that order fixes the axis
    nesting, so it must survive the round trip.
    """
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    lines = [
        f"# qirange {version}",
        f"# command: {command}",
        f"# timestamp: {stamp}",
    ]
    lines += [f"# warning: {w}" for w in warnings]
    lines += [f"# note: {n}" for n in notes]
    for key in params:
        value = params[key]
        if value is None:
            continue
        if isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {format_value(value) if isinstance(value, bool) else value}")
    return "\n".join(lines) + "\n"
