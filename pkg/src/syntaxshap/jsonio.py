"""Deterministic JSON/JSONL emission with pinned float formatting.

Floats are written with up to 17 significant digits (round-trip exact for
64-bit floats), so identical runs produce byte-identical output files.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Iterable


def format_float(value: float) -> str:
    if not math.isfinite(value):
        raise ValueError(f"cannot serialize non-finite float {value!r}")
    text = format(value, ".17g")
    if "e" not in text and "E" not in text and "." not in text:
        text += ".0"
    return text


def dumps(obj: Any, *, indent: int = 0, _level: int = 0) -> str:
    """Serialize to JSON with deterministic float text; insertion-ordered keys."""
    pad = " " * (indent * (_level + 1)) if indent else ""
    close_pad = " " * (indent * _level) if indent else ""
    separator = ",\n" if indent else ", "
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{pad}{json.dumps(str(k), ensure_ascii=False)}: "
            f"{dumps(v, indent=indent, _level=_level + 1)}"
            for k, v in obj.items()
        ]
        if indent:
            return "{\n" + separator.join(items) + f"\n{close_pad}}}"
        return "{" + separator.join(items) + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [
            f"{pad}{dumps(v, indent=indent, _level=_level + 1)}" for v in obj
        ]
        if indent:
            return "[\n" + separator.join(items) + f"\n{close_pad}]"
        return "[" + separator.join(items) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__} deterministically")


def write_json(path: Path | str, obj: Any) -> None:
    Path(path).write_text(dumps(obj, indent=2) + "\n", encoding="utf-8")


def write_jsonl(path: Path | str, rows: Iterable[Any]) -> None:
    text = "".join(dumps(row) + "\n" for row in rows)
    Path(path).write_text(text, encoding="utf-8")


def read_jsonl(path: Path | str) -> list[Any]:
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            rows.append(json.loads(line))
    return rows
