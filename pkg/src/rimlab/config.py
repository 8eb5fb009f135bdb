"""Strict sectioned key-value experiment configs with a JSON mirror.

The format is a flat INI subset: top-level ``key = value`` lines, then
``[section]`` blocks.  Parsing is strict -- unknown sections or keys,
missing required keys, duplicate keys and type errors are all rejected
with line numbers -- and emit() produces a canonical text whose re-parse
is identical, so configs double as diffable experiment provenance.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Optional

from rimlab.maps import BUILTIN_ALIASES, BUILTIN_FAMILIES, MapDescriptor, make_map
from rimlab.system import RandomSystem, make_system

__all__ = [
    "ConfigError",
    "MapConfig",
    "SystemConfig",
    "ExperimentConfig",
    "parse_config",
    "parse_config_file",
    "emit_config",
    "config_hash",
    "EXPERIMENT_KINDS",
]

CONFIG_VERSION = 1


class ConfigError(ValueError):
    """Invalid experiment config; message carries the offending line."""


# value parsers -------------------------------------------------------------

def _p_int(s): return int(s)
def _p_float(s): return float(s)
def _p_str(s): return s


def _p_bool(s):
    if s in ("true", "yes", "on", "1"):
        return True
    if s in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _p_int_list(s): return [int(v.strip()) for v in s.split(",") if v.strip()]
def _p_float_list(s): return [float(v.strip()) for v in s.split(",") if v.strip()]


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, list):
        return ", ".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


# schemas: key -> (parser, required, default) --------------------------------

_SYSTEM_SCHEMA = {
    "seed": (_p_int, True, None),
    "c": (_p_float, False, 0.5),
}

_MAP_SCHEMA = {
    "family": (_p_str, True, None),
    "p": (_p_float, True, None),
    "r": (_p_float, False, None),
    "ell": (_p_float, False, None),
    "s": (_p_float, False, None),
    "env_k": (_p_float, False, None),
    "env_m": (_p_float, False, None),
}

EXPERIMENT_KINDS = {
    "orbit-trace": {
        "x0": (_p_float, False, 0.25),
        "steps": (_p_int, False, 500),
        "epsilon": (_p_float, False, 2.0 ** -7),
    },
    "ulam-density": {
        "resolutions": (_p_int_list, False, [256, 1024, 4096]),
        "tol": (_p_float, False, 1e-10),
        "max_iter": (_p_int, False, 100_000),
    },
    "lq-sweep": {
        "resolutions": (_p_int_list, False, [256, 1024, 4096, 16384]),
        "q": (_p_float_list, False, [1.5]),
        "tol": (_p_float, False, 1e-10),
        "max_iter": (_p_int, False, 100_000),
    },
    "phase-scan": {
        "vary": (_p_str, True, None),
        "grid": (_p_float_list, False, [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]),
        "steps": (_p_int, False, 1_000_000),
        "epsilon": (_p_float, False, 2.0 ** -7),
        "kac_samples": (_p_int, False, 2000),
        "cap": (_p_int, False, 100_000),
    },
    "kac": {
        "g": (_p_str, False, "auto"),
        "t": (_p_str, False, "auto"),
        "kappa": (_p_int, False, 0),          # 0 means search
        "ladder": (_p_int_list, False, [10_000, 100_000]),
        "cap": (_p_int, False, 1_000_000),
    },
    "continuity": {
        "vary": (_p_str, True, None),
        "exponents": (_p_int_list, False, [2, 3, 4, 5, 6, 7]),
        "resolution": (_p_int, False, 4096),
        "tol": (_p_float, False, 1e-10),
        "max_iter": (_p_int, False, 100_000),
    },
    "bounds-check": {
        "resolution": (_p_int, False, 16384),
        "fit_scale": (_p_int, False, 4),
        "min_scale": (_p_int, False, 12),
        "refined": (_p_bool, False, False),
        "tol": (_p_float, False, 1e-10),
        "max_iter": (_p_int, False, 100_000),
    },
    "inducing-report": {
        "g": (_p_str, False, "auto"),
        "t": (_p_str, False, "auto"),
        "k_max": (_p_int, False, 12),
    },
}

_TOP_SCHEMA = {
    "version": (_p_int, True, None),
    "experiment": (_p_str, True, None),
}


@dataclass(frozen=True)
class MapConfig:
    label: str
    family: str
    p: float
    params: dict[str, float] = field(default_factory=dict)
    env_k: Optional[float] = None
    env_m: Optional[float] = None

    def build(self, c: float) -> MapDescriptor:
        return make_map(self.family, c=c, env_k=self.env_k, env_m=self.env_m,
                        name=self.label, **self.params)


@dataclass(frozen=True)
class SystemConfig:
    seed: int
    c: float
    maps: tuple[MapConfig, ...]

    def labels(self) -> tuple[str, ...]:
        return tuple(m.label for m in self.maps)

    def build(self) -> RandomSystem:
        descriptors = [m.build(self.c) for m in self.maps]
        return make_system(descriptors, [m.p for m in self.maps])


@dataclass(frozen=True)
class ExperimentConfig:
    version: int
    kind: str
    system: SystemConfig
    params: dict[str, Any]

    def to_json_dict(self) -> dict:
        return {
            "version": self.version,
            "experiment": self.kind,
            "system": {
                "seed": self.system.seed,
                "c": self.system.c,
                "maps": [
                    {"label": m.label, "family": m.family, "p": m.p,
                     **m.params,
                     **({"env_k": m.env_k} if m.env_k is not None else {}),
                     **({"env_m": m.env_m} if m.env_m is not None else {})}
                    for m in self.system.maps
                ],
            },
            "params": dict(sorted(self.params.items())),
        }


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _raw_sections(text: str):
    """Split into ('', toplevel) plus ordered (section, items) with line info."""
    sections: list[tuple[str, dict[str, tuple[str, int]], int]] = [("", {}, 0)]
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"line {ln}: malformed section header {raw!r}")
            name = line[1:-1].strip()
            if not name:
                raise ConfigError(f"line {ln}: empty section name")
            if any(name == s for s, _, _ in sections):
                raise ConfigError(f"line {ln}: duplicate section [{name}]")
            sections.append((name, {}, ln))
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected 'key = value', got {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {ln}: empty key")
        items = sections[-1][1]
        if key in items:
            raise ConfigError(f"line {ln}: duplicate key {key!r} in section "
                              f"[{sections[-1][0] or '(top)'}]")
        items[key] = (val, ln)
    return sections


def _apply_schema(section: str, items: dict, schema: dict) -> dict:
    out = {}
    for key, (val, ln) in items.items():
        if key not in schema:
            raise ConfigError(f"line {ln}: unknown key {key!r} in section [{section or '(top)'}]")
        parser = schema[key][0]
        try:
            out[key] = parser(val)
        except ValueError as err:
            raise ConfigError(f"line {ln}: bad value for {key!r}: {err}") from None
    for key, (_, required, default) in schema.items():
        if key not in out:
            if required:
                raise ConfigError(f"section [{section or '(top)'}]: missing required key {key!r}")
            out[key] = default
    return out


def parse_config(text: str) -> ExperimentConfig:
    sections = _raw_sections(text)
    top = _apply_schema("", sections[0][1], _TOP_SCHEMA)
    if top["version"] != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {top['version']} (expected {CONFIG_VERSION})")
    kind = top["experiment"]
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}; "
                          f"choose from {sorted(EXPERIMENT_KINDS)}")

    system_items = None
    maps: list[MapConfig] = []
    params_items = None
    for name, items, ln in sections[1:]:
        if name == "system":
            system_items = items
        elif name.startswith("map."):
            label = name[4:]
            if not label:
                raise ConfigError(f"line {ln}: map section needs a label, e.g. [map.g1]")
            maps.append(_parse_map(label, items))
        elif name == kind:
            params_items = items
        elif name in EXPERIMENT_KINDS:
            raise ConfigError(f"line {ln}: section [{name}] does not match "
                              f"experiment = {kind}")
        else:
            raise ConfigError(f"line {ln}: unknown section [{name}]")
    if system_items is None:
        raise ConfigError("missing [system] section")
    if not maps:
        raise ConfigError("no [map.<label>] sections given")
    sys_vals = _apply_schema("system", system_items, _SYSTEM_SCHEMA)
    labels = [m.label for m in maps]
    if len(set(labels)) != len(labels):
        raise ConfigError(f"duplicate map labels: {labels}")
    total_p = sum(m.p for m in maps)
    if abs(total_p - 1.0) > 1e-9:
        raise ConfigError(f"map probabilities sum to {total_p!r}, not 1")
    params = _apply_schema(kind, params_items or {}, EXPERIMENT_KINDS[kind])
    system = SystemConfig(sys_vals["seed"], sys_vals["c"], tuple(maps))
    cfg = ExperimentConfig(CONFIG_VERSION, kind, system, params)
    _cross_validate(cfg)
    return cfg


def _parse_map(label: str, items: dict) -> MapConfig:
    vals = _apply_schema(f"map.{label}", items, _MAP_SCHEMA)
    family = vals["family"]
    if family in BUILTIN_ALIASES:
        wanted = ()
    elif family in BUILTIN_FAMILIES:
        wanted = BUILTIN_FAMILIES[family][1]
    else:
        raise ConfigError(f"map {label!r}: unknown family {family!r}")
    params = {}
    for pname in ("r", "ell", "s"):
        if vals[pname] is not None:
            if pname not in wanted:
                raise ConfigError(f"map {label!r}: family {family!r} does not take {pname!r}")
            params[pname] = vals[pname]
    missing = set(wanted) - set(params)
    if missing:
        raise ConfigError(f"map {label!r}: family {family!r} needs {sorted(missing)}")
    if vals["p"] <= 0.0:
        raise ConfigError(f"map {label!r}: probability must be positive")
    return MapConfig(label, family, vals["p"], params, vals["env_k"], vals["env_m"])


def _cross_validate(cfg: ExperimentConfig) -> None:
    labels = set(cfg.system.labels())
    for key in ("vary", "g", "t"):
        val = cfg.params.get(key)
        if isinstance(val, str) and val != "auto" and val not in labels:
            raise ConfigError(f"{cfg.kind}: {key} = {val!r} is not a map label "
                              f"(have {sorted(labels)})")


def parse_config_file(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

def emit_config(cfg: ExperimentConfig) -> str:
    """Canonical text form; parse(emit(parse(text))) == parse(text)."""
    lines = [f"version = {cfg.version}", f"experiment = {cfg.kind}", ""]
    lines += ["[system]", f"seed = {cfg.system.seed}", f"c = {_fmt(cfg.system.c)}", ""]
    for m in cfg.system.maps:
        lines.append(f"[map.{m.label}]")
        lines.append(f"family = {m.family}")
        for pname in sorted(m.params):
            lines.append(f"{pname} = {_fmt(m.params[pname])}")
        lines.append(f"p = {_fmt(m.p)}")
        if m.env_k is not None:
            lines.append(f"env_k = {_fmt(m.env_k)}")
        if m.env_m is not None:
            lines.append(f"env_m = {_fmt(m.env_m)}")
        lines.append("")
    lines.append(f"[{cfg.kind}]")
    for key in sorted(cfg.params):
        lines.append(f"{key} = {_fmt(cfg.params[key])}")
    lines.append("")
    return "\n".join(lines)


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(emit_config(cfg).encode()).hexdigest()[:12]
