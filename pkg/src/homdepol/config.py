"""YAML experiment configuration with line-precise validation errors."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .fock import DetectorParams
from .polarization import (
    ChannelModel,
    IdealDepolarizing,
    Pairing,
    RandomRotation,
    TemporalProfile,
    TimeEntanglement,
)


class ConfigError(ValueError):
    pass


SCHEMA: dict[str, Any] = {
    "channel": {
        "kind": str,
        "p": float,
        "tau": float,
        "tau_c": float,
        "omega": float,
        "alpha0": float,
        "pairing": str,
        "axis": list,
    },
    "mu": float,
    "n_pairs": int,
    "detector": {"eta_os": float, "eta1": float, "eta2": float, "dark_prob": float},
    "seed": int,
    "delta": float,
    "confidence": float,
    "k_sigma": float,
    "sweep": {"tau": None, "tau_c": None, "mu": None, "alpha0": None},
    "measurement": {"n_pairs": int, "coincidences_channel": int, "coincidences_reference": int},
    "output": {"path": str, "format": str},
}

FORMATS = ("csv", "jsonl")

_FLOAT = re.compile(r"[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?")


def _node_to_python(node: yaml.Node, path: tuple, lines: dict) -> Any:
    lines[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for key_node, value_node in node.value:
            key = key_node.value
            if key in out:
                raise ConfigError(f"line {key_node.start_mark.line + 1}: duplicate key {key!r}")
            out[key] = _node_to_python(value_node, path + (key,), lines)
            lines[path + (key,)] = key_node.start_mark.line + 1
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_node_to_python(v, path + (i,), lines) for i, v in enumerate(node.value)]
    value = yaml.constructor.SafeConstructor().construct_object(node)
    if isinstance(value, str) and node.style is None and _FLOAT.fullmatch(value):
        # YAML 1.1 reads exponent-only literals such as 1e-9 as strings
        value = float(value)
    return value


@dataclass
class RawConfig:
    """Parsed mapping plus ``path -> source line`` for error messages."""

    data: dict = field(default_factory=dict)
    lines: dict = field(default_factory=dict)
    source: str = "<config>"

    def where(self, path: tuple) -> str:
        while path and path not in self.lines:
            path = path[:-1]
        line = self.lines.get(path)
        return f"{self.source}:{line}" if line else self.source

    def error(self, path: tuple, message: str) -> ConfigError:
        name = ".".join(str(p) for p in path)
        return ConfigError(f"{self.where(path)}: {name}: {message}")

    def get(self, *path, default=None):
        node = self.data
        for p in path:
            if not isinstance(node, dict) or p not in node:
                return default
            node = node[p]
        return node


def parse_config_text(text: str, source: str = "<config>") -> RawConfig:
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}" if mark else source
        raise ConfigError(f"{where}: invalid YAML: {getattr(exc, 'problem', exc)}") from None
    raw = RawConfig(source=source)
    if root is None:
        return raw
    if not isinstance(root, yaml.MappingNode):
        raise ConfigError(f"{source}:{root.start_mark.line + 1}: top level must be a mapping")
    raw.data = _node_to_python(root, (), raw.lines)
    _check_schema(raw, raw.data, SCHEMA, ())
    return raw


def load_config(path: str | Path) -> RawConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"{p}: cannot read config: {exc.strerror}") from None
    return parse_config_text(text, str(p))


def _check_schema(raw: RawConfig, data: dict, schema: dict, path: tuple) -> None:
    for key, value in data.items():
        here = path + (key,)
        if key not in schema:
            raise raw.error(here, f"unknown key (allowed: {', '.join(schema)})")
        expected = schema[key]
        if isinstance(expected, dict):
            if not isinstance(value, dict):
                raise raw.error(here, "expected a mapping")
            _check_schema(raw, value, expected, here)
        elif expected is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise raw.error(here, f"expected a number, got {value!r}")
        elif expected is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise raw.error(here, f"expected an integer, got {value!r}")
        elif expected is not None and not isinstance(value, expected):
            raise raw.error(here, f"expected {expected.__name__}, got {value!r}")


def grid(raw: RawConfig, *path) -> list[float]:
    """A sweep axis given as a list of numbers or as ``{start, stop, num}`` (inclusive)."""
    section = raw.get(*path)
    if section is None:
        raise raw.error(path, "missing sweep grid")
    if isinstance(section, list):
        values = section
    elif isinstance(section, dict) and set(section) == {"start", "stop", "num"}:
        if not isinstance(section["num"], int) or section["num"] < 1:
            raise raw.error(path + ("num",), "num must be a positive integer")
        values = np.linspace(section["start"], section["stop"], section["num"]).tolist()
    else:
        raise raw.error(path, "expected a list or a mapping with start, stop, num")
    out = []
    for i, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise raw.error(path + (i,), f"expected a finite number, got {v!r}")
        out.append(float(v))
    if not out:
        raise raw.error(path, "grid is empty")
    return out


def channel_model(raw: RawConfig) -> ChannelModel:
    section = raw.get("channel")
    if section is None:
        raise raw.error(("channel",), "missing channel section")
    kind = section.get("kind")
    axis = section.get("axis", [0.0, 0.0])
    if len(axis) != 2:
        raise raw.error(("channel", "axis"), "axis must be [theta, phi]")
    axis = (float(axis[0]), float(axis[1]))
    allowed = {
        "ideal_depolarizing": {"kind", "p"},
        "time_entanglement": {"kind", "tau", "tau_c", "omega", "axis"},
        "random_rotation": {"kind", "alpha0", "pairing", "axis"},
    }
    if kind not in allowed:
        raise raw.error(("channel", "kind"), f"unknown channel kind {kind!r} (allowed: {', '.join(allowed)})")
    for key in section:
        if key not in allowed[kind]:
            raise raw.error(("channel", key), f"not a parameter of {kind}")
    try:
        if kind == "ideal_depolarizing":
            return IdealDepolarizing(float(_required(raw, ("channel", "p"))))
        if kind == "time_entanglement":
            profile = TemporalProfile(
                tau_c=float(_required(raw, ("channel", "tau_c"))),
                tau=float(section.get("tau", 0.0)),
                omega=float(section.get("omega", 0.0)),
            )
            return TimeEntanglement(profile, axis)
        pairing = section.get("pairing", "alternating")
        try:
            pairing = Pairing(pairing)
        except ValueError:
            raise raw.error(("channel", "pairing"), f"unknown pairing {pairing!r}") from None
        return RandomRotation(float(_required(raw, ("channel", "alpha0"))), axis, pairing)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise raw.error(("channel",), str(exc)) from None


def detector_params(raw: RawConfig) -> DetectorParams:
    try:
        return DetectorParams(**{k: float(v) for k, v in (raw.get("detector") or {}).items()})
    except ValueError as exc:
        raise raw.error(("detector",), str(exc)) from None


def _required(raw: RawConfig, path: tuple):
    value = raw.get(*path)
    if value is None:
        raise raw.error(path, "required value is missing")
    return value


def required(raw: RawConfig, *path):
    return _required(raw, path)


def number(raw: RawConfig, *path, default=None, positive=False, unit_open=False) -> float:
    value = raw.get(*path, default=default)
    if value is None:
        raise raw.error(path, "required value is missing")
    value = float(value)
    if positive and not value > 0:
        raise raw.error(path, f"must be positive, got {value!r}")
    if unit_open and not 0 < value < 1:
        raise raw.error(path, f"must lie in (0, 1), got {value!r}")
    return value


def count(raw: RawConfig, *path, minimum: int = 1) -> int:
    value = _required(raw, path)
    if value < minimum:
        raise raw.error(path, f"must be at least {minimum}, got {value!r}")
    return int(value)
