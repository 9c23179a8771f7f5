"""
Result persistence: CSV tables, JSON summaries and the hashed manifest.

:copyright: (c) 2026 by the Chronos developers.
:license: MPL-2.0, see LICENSE for more details.
"""

import csv
import hashlib
import json
import logging
import math
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import numpy as np

from chronos.errors import InputError

_LOG = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
RESOLVED_NAME = "resolved.json"
SUMMARY_NAME = "summary.json"
DIAGNOSTIC_NAME = "diagnostic.json"


def format_value(value: Any) -> str:
    """17 significant digits for floats, 0/1 for flags, str for the rest."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write a table with LF line endings."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(value) for value in row])
    return path


def write_columns(path: Path, columns: dict[str, Sequence[Any] | np.ndarray]) -> Path:
    """Write equal-length columns side by side."""
    lengths = {len(values) for values in columns.values()}
    if len(lengths) > 1:
        raise InputError(f"columns of unequal length: {sorted(lengths)}")
    return write_csv(path, list(columns), zip(*columns.values()))


def _column(values: list[str]) -> np.ndarray:
    try:
        return np.array(values, dtype=float)
    except ValueError:
        return np.array(values, dtype=str)


def read_csv(path: Path) -> dict[str, np.ndarray]:
    """
    Load a table written by write_csv.

    Numeric columns come back as float arrays, text columns as str arrays.

    Raises:
        InputError: missing header, ragged rows or no data rows.
    """
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        rows = [row for row in reader if row]
    if not header or not rows:
        raise InputError(f"{path.name} holds no data rows")
    if any(len(row) != len(header) for row in rows):
        raise InputError(f"{path.name} has rows that do not match its header")
    return {name: _column(list(values)) for name, values in zip(header, zip(*rows))}


def write_json(path: Path, data: dict[str, Any]) -> Path:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(_jsonable(data), handle, indent=2, sort_keys=True)
        handle.write("\n")
    return path


def sha256_of(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def write_manifest(directory: Path) -> Path:
    """List every file below directory (relative path, sha256), sorted by path."""
    entries = [
        {"path": path.relative_to(directory).as_posix(), "sha256": sha256_of(path)}
        for path in sorted(directory.rglob("*"))
        if path.is_file() and path.name != MANIFEST_NAME
    ]
    entries.sort(key=lambda entry: entry["path"])
    _LOG.debug("Manifest of %d files in %s", len(entries), directory)
    return write_json(directory / MANIFEST_NAME, {"files": entries})


class RunOutput:
    """Output directory of one scenario run."""

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.files: list[Path] = []

    def _track(self, path: Path) -> Path:
        if path not in self.files:
            self.files.append(path)
        _LOG.debug("Wrote %s", path)
        return path

    def path(self, name: str) -> Path:
        return self.directory / name

    def csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        return self._track(write_csv(self.path(name), header, rows))

    def columns(self, name: str, columns: dict[str, Sequence[Any] | np.ndarray]) -> Path:
        return self._track(write_columns(self.path(name), columns))

    def json(self, name: str, data: dict[str, Any]) -> Path:
        return self._track(write_json(self.path(name), data))

    def adopt(self, path: Path) -> Path:
        """Record a file another writer produced in this directory."""
        return self._track(Path(path))

    def finalize(self) -> Path:
        return write_manifest(self.directory)
