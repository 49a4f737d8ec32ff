"""Atomic file output and deterministic text encodings.

All primary artifacts (CSV, JSON, JSONL) are written through these helpers
so that identical inputs always produce byte-identical files and a failed
run never leaves a partial file behind.
"""

from __future__ import annotations

import json
import os
import tempfile
from typing import Iterable, Sequence


def atomic_write_text(path: str, text: str) -> None:
    """Write text to path via a same-directory temp file + rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def json_dumps(obj: object) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def atomic_write_json(path: str, obj: object) -> None:
    atomic_write_text(path, json_dumps(obj))


def read_json(path: str) -> object:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def format_cell(value: object) -> str:
    # repr() of a float is the shortest exact decimal, so CSV cells
    # round-trip and are reproducible byte for byte.
    if isinstance(value, float):
        return repr(value)
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def atomic_write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[object]]) -> None:
    atomic_write_text(path, csv_text(header, rows))
