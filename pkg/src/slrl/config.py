"""Flat ``key = value`` config files for the learner configs.

Keys are field names of :class:`QConfig`, :class:`PGConfig` or
:class:`EllaConfig`. A key shared by several configs (e.g. ``gamma``)
sets it on each of them. Blank lines and ``#`` comments are ignored.
"""
from __future__ import annotations

import dataclasses
from pathlib import Path

from .pgella import EllaConfig
from .policy_gradient import PGConfig
from .qlearning import QConfig

CONFIG_CLASSES = {"q": QConfig, "pg": PGConfig, "ella": EllaConfig}


class ConfigError(ValueError):
    pass


def known_keys() -> dict:
    """Field name -> ``{config name: default value}``."""
    keys = {}
    for name, cls in CONFIG_CLASSES.items():
        for f in dataclasses.fields(cls):
            keys.setdefault(f.name, {})[name] = getattr(cls(), f.name)
    return keys


def _convert(key: str, text: str, default):
    try:
        if isinstance(default, bool):
            if text.lower() in ("true", "1", "yes"):
                return True
            if text.lower() in ("false", "0", "no"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as {type(default).__name__}") from None
    return text


def parse_config(text: str, source: str = "<config>") -> dict:
    keys = known_keys()
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in keys:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        default = next(iter(keys[key].values()))
        values[key] = _convert(key, value, default)
    return values


def load_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    return parse_config(text, str(path))


def build_configs(values: dict | None = None, **overrides) -> dict:
    """Instantiate every config class from parsed values.

    ``overrides`` (e.g. ``episodes``) win over file values. Validation
    errors of the dataclasses surface as :class:`ConfigError`.
    """
    merged = dict(values or {})
    merged.update({k: v for k, v in overrides.items() if v is not None})
    out = {}
    for name, cls in CONFIG_CLASSES.items():
        names = {f.name for f in dataclasses.fields(cls)}
        try:
            out[name] = cls(**{k: v for k, v in merged.items() if k in names})
            if name == "ella":
                out[name].check(2 * 3)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid {cls.__name__}: {exc}") from exc
    return out
