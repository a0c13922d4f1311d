"""Run configuration files and deterministic artifact output.

Config files are flat text with dotted keys, one ``key = value`` pair per
line; ``#`` starts a comment.  CSV artifacts use ',' separators, '.' decimal
points, and 17 significant digits; JSON artifacts are sorted-key indented.
All files are written atomically (temp file + rename) so identical configs
reproduce identical artifact bytes.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from typing import Optional


class ConfigError(Exception):
    """Invalid or missing configuration; ``key`` names the first failing key."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass
class RunConfig:
    """Parsed flat-key configuration with typed accessors."""

    raw: dict = field(default_factory=dict)
    path: Optional[str] = None
    consumed: set = field(default_factory=set)

    @staticmethod
    def parse(path) -> "RunConfig":
        raw = {}
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                stripped = line.split("#", 1)[0].strip()
                if not stripped:
                    continue
                if "=" not in stripped:
                    raise ConfigError(f"line {lineno}",
                                      f"expected 'key = value', got {stripped!r}")
                key, value = stripped.split("=", 1)
                key = key.strip()
                if not key:
                    raise ConfigError(f"line {lineno}", "empty key")
                if key in raw:
                    raise ConfigError(key, "duplicate key")
                raw[key] = value.strip()
        return RunConfig(raw=raw, path=str(path))

    def _get(self, key: str, default, required: bool):
        if key in self.raw:
            self.consumed.add(key)
            return self.raw[key]
        if required and default is None:
            raise ConfigError(key, "required key is missing")
        return None

    def get_str(self, key: str, default: Optional[str] = None,
                required: bool = False, choices=None) -> Optional[str]:
        value = self._get(key, default, required)
        value = default if value is None else value
        if value is not None and choices is not None and value not in choices:
            raise ConfigError(key, f"must be one of {sorted(choices)}, got {value!r}")
        return value

    def get_float(self, key: str, default: Optional[float] = None,
                  required: bool = False) -> Optional[float]:
        value = self._get(key, default, required)
        if value is None:
            return default
        if isinstance(value, float):
            return value
        try:
            return float(value)
        except ValueError:
            raise ConfigError(key, f"expected a number, got {value!r}") from None

    def get_int(self, key: str, default: Optional[int] = None,
                required: bool = False) -> Optional[int]:
        value = self._get(key, default, required)
        if value is None:
            return default
        if isinstance(value, int):
            return value
        try:
            return int(value)
        except ValueError:
            raise ConfigError(key, f"expected an integer, got {value!r}") from None

    def get_bool(self, key: str, default: bool = False) -> bool:
        value = self._get(key, default, required=False)
        if value is None or isinstance(value, bool):
            return default if value is None else value
        lowered = value.lower()
        if lowered in ("true", "yes", "1", "on"):
            return True
        if lowered in ("false", "no", "0", "off"):
            return False
        raise ConfigError(key, f"expected a boolean, got {value!r}")

    def echo(self) -> dict:
        return dict(sorted(self.raw.items()))


def fmt17(x) -> str:
    """17-significant-digit decimal rendering used in every CSV cell."""
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return f"{float(x):.17g}"


def _atomic_write(path, payload: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows) -> None:
    """Write rows of numbers/strings as CSV, atomically, 17 significant digits."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(cell if isinstance(cell, str) else fmt17(cell)
                              for cell in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_json(path, obj) -> None:
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_csv(path):
    """Read a fluxlab CSV back as (header, list of string rows)."""
    with open(path) as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:]]
