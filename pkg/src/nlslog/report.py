"""Deterministic serialisation of results.

JSON keys are sorted, floats are written with 17 significant digits and
non-finite floats become null, so identical inputs give identical bytes.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .graph import fmt


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)}
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def dumps(obj, indent: int = 2) -> str:
    out: list[str] = []
    _write(_jsonable(obj), out, 0, indent)
    return "".join(out) + "\n"


def _write(obj, out, level, indent):
    obj = _jsonable(obj)
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(fmt(obj) if math.isfinite(obj) else "null")
    elif isinstance(obj, str):
        out.append(_quote(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = sorted(obj.items(), key=lambda kv: str(kv[0]))
        for j, (k, v) in enumerate(items):
            out.append(f"{pad}{_quote(str(k))}: ")
            _write(v, out, level + 1, indent)
            out.append(",\n" if j < len(items) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        out.append("[\n")
        for j, v in enumerate(obj):
            out.append(pad)
            _write(v, out, level + 1, indent)
            out.append(",\n" if j < len(obj) - 1 else "\n")
        out.append(end + "]")
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def _quote(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else fmt(v) for v in row))
    return "\n".join(lines) + "\n"


@dataclass
class ReportBundle:
    data: dict = field(default_factory=dict)  # written as report.json
    csv: dict = field(default_factory=dict)  # name -> CSV text
    table: list = field(default_factory=list)  # pass/fail lines


def write_text(path, text: str) -> Path:
    path = Path(path)
    try:
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def emit(report: ReportBundle, path) -> list:
    """Write the bundle into directory ``path``; returns the written files."""
    root = Path(path)
    written = [write_text(root / "report.json", dumps(report.data))]
    for name in sorted(report.csv):
        written.append(write_text(root / f"{name}.csv", report.csv[name]))
    if report.table:
        written.append(write_text(root / "table.txt", "\n".join(report.table) + "\n"))
    return written


def default_out_dir() -> Path | None:
    env = os.environ.get("NLSLOG_OUT_DIR")
    return Path(env) if env else None
