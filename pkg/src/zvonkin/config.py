"""Scenario configuration: flat ``key = value`` lines under ``[section]`` headers.

A small hand-rolled parser rather than :mod:`configparser` so every error
carries the offending line number and unknown keys are rejected.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, fields

from .errors import ConfigError

KINDS = ("transform", "osgood", "uniqueness", "consistency", "localize", "bihari")
_POW2 = re.compile(r"^2\^(-?\d+)$")


def _float(text):
    m = _POW2.match(text.replace(" ", ""))
    if m:
        return math.ldexp(1.0, int(m.group(1)))
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("not finite")
    return value


def _float_list(text):
    return tuple(_float(t.strip()) for t in text.split(",") if t.strip())


def _int(text):
    if not re.fullmatch(r"[+-]?\d+", text):
        raise ValueError("not an integer")
    return int(text)


# section -> key -> (parser, default, constraint)
_POS, _NONNEG, _ANY = "positive", "nonnegative", "any"
SCHEMA = {
    "scenario": {
        "kind": (str, None, _ANY),
        "output": (str, None, _ANY),
        "seed": (_int, 0, _NONNEG),
    },
    "problem": {
        "catalog": (str, None, _ANY),
        "dim": (_int, None, _POS),
        "c": (_float, 1.0, _ANY),
        "x0": (_float_list, None, _ANY),
        "modulus": (str, None, _ANY),
        "C": (_float, 1.0, _POS),
        "alpha": (_float, None, _POS),
        "c_r": (_float, None, _NONNEG),
        "c_lin": (_float, None, _NONNEG),
    },
    "numerics": {
        "r_max": (_float, 10.0, _POS),
        "grid_step": (_float, 1e-3, _POS),
        "table_step": (_float, 0.01, _POS),
        "T": (_float, 1.0, _POS),
        "h_levels": (_float_list, (2.0**-4, 2.0**-6, 2.0**-8), _POS),
        "fine_factor": (_int, 4, _POS),
        "replications": (_int, 100, _POS),
        "radius": (_float, 2.0, _POS),
        "perturbation": (_float, 1e-6, _POS),
        "x_max": (_float, 2.0, _POS),
        "step": (_float, 0.01, _POS),
        "slack": (_float, None, _NONNEG),
        "probe_depth": (_int, 16, _POS),
        "growth_floor": (_float, 0.015, _POS),
    },
}
_KEY_SECTION = {k: s for s, keys in SCHEMA.items() for k in keys}
_REQUIRED = {
    "transform": ("catalog",),
    "osgood": ("modulus",),
    "uniqueness": ("catalog",),
    "consistency": ("catalog",),
    "localize": ("catalog",),
    "bihari": (),
}


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    output: str
    seed: int = 0
    catalog: str | None = None
    dim: int | None = None
    c: float = 1.0
    x0: tuple | None = None
    modulus: str | None = None
    C: float = 1.0
    alpha: float | None = None
    c_r: float | None = None
    c_lin: float | None = None
    r_max: float = 10.0
    grid_step: float = 1e-3
    table_step: float = 0.01
    T: float = 1.0
    h_levels: tuple = (2.0**-4, 2.0**-6, 2.0**-8)
    fine_factor: int = 4
    replications: int = 100
    radius: float = 2.0
    perturbation: float = 1e-6
    x_max: float = 2.0
    step: float = 0.01
    slack: float | None = None
    probe_depth: int = 16
    growth_floor: float = 0.015


def _check(key, value, constraint, line):
    values = value if isinstance(value, tuple) else (value,)
    if constraint == _POS and any(v <= 0 for v in values):
        raise ConfigError(f"{key} must be positive, got {value!r}", line)
    if constraint == _NONNEG and any(v < 0 for v in values):
        raise ConfigError(f"{key} must be nonnegative, got {value!r}", line)


def parse_config(text: str) -> ScenarioConfig:
    section = None
    seen: dict[str, object] = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}", lineno)
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        if section is None:
            raise ConfigError("key outside of any [section]", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}]", lineno)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        parser, _, constraint = SCHEMA[section][key]
        try:
            parsed = parser(value)
        except ValueError:
            raise ConfigError(f"malformed value for {key}: {value!r}", lineno) from None
        if parser is str and not parsed:
            raise ConfigError(f"empty value for {key}", lineno)
        _check(key, parsed, constraint, lineno)
        seen[key] = parsed
        lines[key] = lineno

    for key in ("kind", "output"):
        if key not in seen:
            raise ConfigError(f"missing required key {key!r} in [scenario]")
    if seen["kind"] not in KINDS:
        raise ConfigError(f"unknown scenario kind {seen['kind']!r}; expected one of {', '.join(KINDS)}", lines["kind"])
    for key in _REQUIRED[seen["kind"]]:
        if key not in seen:
            raise ConfigError(f"scenario kind {seen['kind']!r} needs key {key!r} in [{_KEY_SECTION[key]}]")
    if "catalog" in seen:
        from .catalog import names

        if seen["catalog"] not in names():
            raise ConfigError(f"unknown catalog entry {seen['catalog']!r}; known: {', '.join(names())}",
                              lines["catalog"])
    if "modulus" in seen:
        from .moduli import FAMILIES

        if seen["modulus"] not in FAMILIES:
            raise ConfigError(f"unknown modulus family {seen['modulus']!r}", lines["modulus"])
    if "h_levels" in seen and not seen["h_levels"]:
        raise ConfigError("h_levels is empty", lines["h_levels"])
    return ScenarioConfig(**seen)


def _fmt(value):
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(cfg: ScenarioConfig) -> str:
    """Canonical text; ``parse_config(serialize_config(c)) == c``."""
    out = []
    for section, keys in SCHEMA.items():
        out.append(f"[{section}]")
        for key in keys:
            value = getattr(cfg, key)
            if value is not None:
                out.append(f"{key} = {_fmt(value)}")
        out.append("")
    return "\n".join(out)


def config_dict(cfg: ScenarioConfig) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}
