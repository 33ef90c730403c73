"""Tabular result container with deterministic CSV/JSON serialization."""

from __future__ import annotations

import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path


def format_value(v) -> str:
    """Shortest round-trip text for numbers; plain ``str`` otherwise."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ";".join(format_value(x) for x in v)
    return str(v)


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return format_value(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item"):
        return _jsonable(v.item())
    return v


@dataclass
class Report:
    columns: list[str]
    rows: list[dict] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def add(self, **row) -> None:
        unknown = set(row) - set(self.columns)
        if unknown:
            raise KeyError(f"unknown report columns {sorted(unknown)}")
        self.rows.append(row)

    def column(self, name: str, status: str | None = "ok") -> list:
        return [r.get(name) for r in self.rows if status is None or r.get("status", "ok") == status]

    def summarize(self, name: str) -> dict:
        vals = [float(v) for v in self.column(name) if v is not None]
        if not vals:
            return {}
        lo, hi = min(vals), max(vals)
        stats = {"max": hi, "min": lo, "ratio": hi / lo if lo > 0 else math.inf}
        self.summary[name] = stats
        return stats

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.columns) + "\n")
        for row in self.rows:
            buf.write(",".join(format_value(row.get(c)) for c in self.columns) + "\n")
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "metadata": _jsonable(self.metadata),
            "columns": self.columns,
            "summary": _jsonable(self.summary),
            "rows": [_jsonable({c: row.get(c) for c in self.columns}) for row in self.rows],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def write(self, directory: str | Path, name: str) -> tuple[Path, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        csv_path = directory / f"{name}.csv"
        meta_path = directory / f"{name}.meta.json"
        atomic_write(csv_path, self.to_csv())
        atomic_write(meta_path, self.to_json())
        return csv_path, meta_path


def atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
