"""Config files and CSV output for the experiment runner."""
from __future__ import annotations

import configparser
import csv
import dataclasses
import os
from pathlib import Path

from ..potential import InteractionFamily, parse_family_config


class ConfigError(ValueError):
    pass


def read_config(path: str | Path | None) -> configparser.ConfigParser:
    """Flat ``key = value`` text with ``[experiment]`` sections; a missing or empty file means defaults."""
    cp = configparser.ConfigParser(allow_no_value=True, strict=False, interpolation=None)
    cp.optionxform = str
    if path is None or str(path) == "defaults":
        return cp
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"malformed config: no such file {p}")
    try:
        cp.read_string(p.read_text())
    except configparser.Error as e:
        raise ConfigError(f"malformed config: {e}") from None
    return cp


def family_from_section(cp: configparser.ConfigParser, section: str = "family") -> InteractionFamily | None:
    if not cp.has_section(section):
        return None
    lines = [k if v is None else f"{k} = {v}" for k, v in cp.items(section)]
    try:
        return parse_family_config("\n".join(lines))
    except ValueError as e:
        raise ConfigError(str(e)) from None


def _coerce(raw: str, default):
    if isinstance(default, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(raw)
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, tuple):
        kind = type(default[0]) if default else float
        return tuple(kind(v) for v in raw.replace(",", " ").split())
    return raw


def apply_overrides(params, cp: configparser.ConfigParser, section: str):
    """Replace dataclass fields by values from ``[section]``."""
    if not cp.has_section(section):
        return params
    names = {f.name for f in dataclasses.fields(params)}
    updates = {}
    for key, raw in cp.items(section):
        if key not in names:
            raise ConfigError(f"malformed config: unknown key {key!r} in [{section}]")
        if raw is None:
            raise ConfigError(f"malformed config: key {key!r} needs a value")
        try:
            updates[key] = _coerce(raw, getattr(params, key))
        except ValueError:
            raise ConfigError(f"malformed config: bad value {raw!r} for {key!r}") from None
    return dataclasses.replace(params, **updates)


def output_dir(out: str | None) -> Path:
    return Path(out or os.environ.get("LAB_OUT") or "lab_out")


def fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
