"""Shared file helpers: jsonl with an optional metadata header line, atomic writes."""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Any, Iterable

META_KEY = "_meta"


def stable_json(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def config_hash(obj: Any) -> str:
    """Short fingerprint of a config mapping, embedded in stage output headers."""
    return hashlib.sha256(stable_json(obj).encode("utf-8")).hexdigest()[:12]


def atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def write_jsonl(path: str | Path, rows: Iterable[dict], meta: dict | None = None) -> int:
    """Write one JSON object per line; an optional {"_meta": ...} header comes first."""
    lines = []
    if meta is not None:
        lines.append(stable_json({META_KEY: meta}))
    n = 0
    for row in rows:
        lines.append(json.dumps(row, ensure_ascii=False, sort_keys=True))
        n += 1
    atomic_write_text(path, "\n".join(lines) + "\n")
    return n


def read_jsonl(path: str | Path) -> list[dict]:
    """Read a jsonl file, skipping a leading metadata header if present."""
    rows: list[dict] = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if i == 0 and isinstance(obj, dict) and META_KEY in obj and len(obj) == 1:
                continue
            rows.append(obj)
    return rows


def read_jsonl_meta(path: str | Path) -> dict | None:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
    if not first:
        return None
    obj = json.loads(first)
    if isinstance(obj, dict) and META_KEY in obj and len(obj) == 1:
        return obj[META_KEY]
    return None
