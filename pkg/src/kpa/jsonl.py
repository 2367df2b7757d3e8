"""Small JSONL helpers used by every stage that reads or writes artifacts."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterator

from .errors import DatasetError


def read_jsonl(path: Path | str) -> Iterator[tuple[int, dict]]:
    """Yield (line_number, record) for each non-blank line of a JSONL file.

    Raises DatasetError with the offending line number on malformed JSON or
    on a line whose top-level value is not an object.
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"file not found: {path}")
    with path.open("r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise DatasetError(f"{path}:{lineno}: malformed JSON: {e}") from e
            if not isinstance(record, dict):
                raise DatasetError(f"{path}:{lineno}: expected a JSON object")
            yield lineno, record


def write_jsonl(path: Path | str, records: list[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


def write_json(path: Path | str, obj: Any) -> None:
    """Write a JSON document with a stable layout so reruns are byte-identical."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        json.dump(obj, f, ensure_ascii=False, indent=2)
        f.write("\n")


def read_json(path: Path | str) -> Any:
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"file not found: {path}")
    with path.open("r", encoding="utf-8") as f:
        return json.load(f)
