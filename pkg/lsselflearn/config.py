"""Config files, flag overrides and provenance sidecars.

Config files are flat YAML mappings whose keys mirror the fields of a config
dataclass. Each field names its parser in its metadata, so list values may be
written as YAML lists or as comma-separated strings.
"""

import dataclasses
import json
import logging
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Tuple, Type, TypeVar, Union

import numpy as np
import yaml

from . import __version__
from .errors import ConfigError

logger = logging.getLogger(__name__)

T = TypeVar("T")


def _items(value: Any) -> list:
    if isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]


def as_bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def as_int(value: Any) -> int:
    if isinstance(value, bool):
        raise ValueError(f"not an integer: {value!r}")
    number = float(value)
    if not number.is_integer():
        raise ValueError(f"not an integer: {value!r}")
    return int(number)


def int_tuple(value: Any) -> Tuple[int, ...]:
    return tuple(as_int(v) for v in _items(value))


def float_tuple(value: Any) -> Tuple[float, ...]:
    return tuple(float(v) for v in _items(value))


def str_tuple(value: Any) -> Tuple[str, ...]:
    return tuple(str(v) for v in _items(value))


def float_pair(value: Any) -> Tuple[float, float]:
    pair = float_tuple(value)
    if len(pair) != 2:
        raise ValueError(f"expected two numbers, got {value!r}")
    return pair


def optional_str_pair(value: Any) -> Optional[Tuple[str, str]]:
    if value is None or value == "":
        return None
    pair = str_tuple(value)
    if len(pair) != 2:
        raise ValueError(f"expected two class symbols, got {value!r}")
    return pair


def config_field(default: Any, parse: Callable[[Any], Any]) -> Any:
    """Dataclass field carrying the parser for its config-file value."""
    return dataclasses.field(default=default, metadata={"parse": parse})


def _normalize_key(key: str) -> str:
    return str(key).strip().replace("-", "_")


def from_mapping(cls: Type[T], mapping: Mapping[str, Any]) -> T:
    """Build a config dataclass from a flat mapping, parsing every value."""
    fields = {f.name: f for f in dataclasses.fields(cls)}
    values: Dict[str, Any] = {}
    for key, raw in mapping.items():
        name = _normalize_key(key)
        if name not in fields:
            raise ConfigError(f"unknown config key {key!r}; known keys: {sorted(fields)}")
        if isinstance(raw, Mapping):
            raise ConfigError(f"config key {key!r}: nested mappings are not supported")
        parse = fields[name].metadata.get("parse", lambda v: v)
        try:
            values[name] = parse(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config key {key!r}: {exc}") from exc
    return cls(**values)


def load_config(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a flat YAML mapping."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config file ({exc})") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: malformed config file ({exc})") from exc
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config file must be a key-value mapping")
    return {_normalize_key(k): v for k, v in raw.items()}


def effective_config(
    cls: Type[T],
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> T:
    """Config file values, then flag overrides (``None`` means not given)."""
    mapping = load_config(path) if path else {}
    for key, value in (overrides or {}).items():
        if value is not None:
            mapping[_normalize_key(key)] = value
    return from_mapping(cls, mapping)


def to_plain(value: Any) -> Any:
    """Convert dataclasses, tuples and numpy scalars into JSON-ready values."""
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: to_plain(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return value


def write_json(path: Union[str, Path], payload: Any) -> Path:
    """Write sorted, indented JSON so identical payloads give identical bytes."""
    path = Path(path)
    path.write_text(json.dumps(to_plain(payload), indent=2, sort_keys=True) + "\n")
    logger.info("Wrote %s", path)
    return path


def provenance(command: str, config: Any, **extra: Any) -> Dict[str, Any]:
    """Sidecar describing how an output file was produced."""
    record = {
        "tool": "lsselflearn",
        "version": __version__,
        "numpy": np.__version__,
        "command": command,
        "config": to_plain(config),
    }
    record.update({k: to_plain(v) for k, v in extra.items()})
    return record
