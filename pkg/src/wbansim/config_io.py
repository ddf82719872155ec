"""Configuration file loading and canonical serialisation.

Config files are YAML whose keys mirror SimConfig field names exactly.
Missing keys fall back to the built-in defaults, unknown keys are an
error so typos cannot silently skew an experiment.
"""

from __future__ import annotations

import dataclasses

import yaml

from .model import (Protocol, RadioParams, SimConfig, ThermalParams,
                    validate_config)


class ConfigFileError(ValueError):
    pass


class ParseError(ConfigFileError):
    def __init__(self, message, line=None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"config parse error{where}: {message}")
        self.line = line


class UnknownKey(ConfigFileError):
    def __init__(self, key):
        super().__init__(f"unknown configuration key: {key}")
        self.key = key


_PAIR_FIELDS = {"area", "sink_position"}


def _build_section(cls, data, prefix):
    known = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in known:
            raise UnknownKey(f"{prefix}.{key}")
    return cls(**data)


def config_from_dict(data: dict) -> SimConfig:
    """Build a validated SimConfig from a plain mapping."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ParseError("top level must be a mapping")
    known = {f.name for f in dataclasses.fields(SimConfig)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise UnknownKey(key)
        if key == "radio":
            value = _build_section(RadioParams, value or {}, "radio")
        elif key == "thermal":
            value = _build_section(ThermalParams, value or {}, "thermal")
        elif key == "protocol":
            value = parse_protocol(value)
        elif key in _PAIR_FIELDS:
            value = tuple(float(v) for v in value)
        elif key == "tier_split" and value is not None:
            value = tuple(int(v) for v in value)
        kwargs[key] = value
    return validate_config(SimConfig(**kwargs))


def parse_protocol(name) -> Protocol:
    if isinstance(name, Protocol):
        return name
    text = str(name).strip().lower().replace("_", "-")
    aliases = {
        "multihop": Protocol.MULTIHOP,
        "multi-hop": Protocol.MULTIHOP,
        "attempt": Protocol.ATTEMPT,
        "m-attempt": Protocol.M_ATTEMPT,
        "mattempt": Protocol.M_ATTEMPT,
    }
    if text not in aliases:
        raise ConfigFileError(f"unknown protocol: {name}")
    return aliases[text]


def load_config(path: str) -> SimConfig:
    """Parse a YAML config file into a validated SimConfig."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        line = None
        mark = getattr(exc, "problem_mark", None)
        if mark is not None:
            line = mark.line + 1
        raise ParseError(str(getattr(exc, "problem", exc)), line=line) from exc
    return config_from_dict(data)


def config_to_dict(cfg: SimConfig) -> dict:
    """Canonical plain-data form; config_from_dict round-trips it."""
    return {
        "area": list(cfg.area),
        "node_count": cfg.node_count,
        "sink_position": list(cfg.sink_position),
        "initial_energy": (dict(cfg.initial_energy)
                           if isinstance(cfg.initial_energy, dict)
                           else cfg.initial_energy),
        "rounds": cfg.rounds,
        "mobility_period": cfg.mobility_period,
        "radio": dataclasses.asdict(cfg.radio),
        "thermal": dataclasses.asdict(cfg.thermal),
        "mu_max": cfg.mu_max,
        "p_critical": cfg.p_critical,
        "p_ondemand": cfg.p_ondemand,
        "velocity": cfg.velocity,
        "velocity_threshold": cfg.velocity_threshold,
        "seed": cfg.seed,
        "protocol": cfg.protocol.value,
        "tx_range": cfg.tx_range,
        "boosted_range": cfg.boosted_range,
        "tier_split": list(cfg.tier_split) if cfg.tier_split else None,
        "candidate_routes": cfg.candidate_routes,
        "hold_limit": cfg.hold_limit,
        "mobility_cost_factor": cfg.mobility_cost_factor,
        "hello_mode": cfg.hello_mode,
    }


def dumps_config(cfg: SimConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False)
