"""Run configuration: JSON schema, validation and default materialization."""
from __future__ import annotations

import copy
import json
from pathlib import Path

import jsonschema

from .models import KINDS
from .solver import SolverConfig

SCHEMA_VERSION = 1
COMMANDS = ("curvature", "degree", "solve", "flow", "bifurcate", "verify")

_number = {"type": "number"}
_trig = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {"$ref": "#/$defs/term"}},
        {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "constant": _number,
                "terms": {"type": "array", "items": {"$ref": "#/$defs/term"}},
            },
        },
    ]
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "chern-yamabe run config",
    "type": "object",
    "additionalProperties": False,
    "$defs": {
        "term": {
            "type": "object",
            "additionalProperties": False,
            "required": ["k"],
            "properties": {
                "k": {"type": "array", "items": {"type": "integer"}},
                "amplitude": _number,
                "phase": _number,
            },
        },
    },
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "command": {"enum": list(COMMANDS)},
        "seed": {"type": "integer", "minimum": 0},
        "recipe": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": list(KINDS)},
                "complex_dim": {"type": "integer", "minimum": 2},
                "resolution": {"type": "integer", "minimum": 8, "multipleOf": 2},
                "seed": {"type": "integer", "minimum": 0},
                "params": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "scale": {"type": "number", "exclusiveMinimum": 0},
                        "potential": _trig,
                        "amplitude": {"type": "number", "exclusiveMinimum": 0},
                        "terms": {"type": "integer", "minimum": 1},
                        "scalar": _trig,
                        "sign": {"enum": ["negative", "zero", "small", "positive"]},
                    },
                },
            },
        },
        "instance": {"type": "string"},
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "method": {"enum": ["auto", "zero-degree", "continuity", "small-data"]},
                "lambda": _number,
                "seeds": {"type": "integer", "minimum": 1},
                "linear_tol": {"type": "number", "exclusiveMinimum": 0},
                "newton_tol": {"type": "number", "exclusiveMinimum": 0},
                "newton_max": {"type": "integer", "minimum": 1},
                "steps": {"type": "integer", "minimum": 1},
                "max_halvings": {"type": "integer", "minimum": 0},
                "residual_tol": {"type": "number", "exclusiveMinimum": 0},
                "degree_tol": {"type": "number", "exclusiveMinimum": 0},
                "bound_slack": {"type": "number", "minimum": 0},
                "time_step": {"type": "number", "exclusiveMinimum": 0},
                "horizon": {"type": "number", "exclusiveMinimum": 0},
                "flow_tol": {"type": "number", "exclusiveMinimum": 0},
                "blowup_cap": {"type": "number", "exclusiveMinimum": 0},
                "snapshot_every": {"type": "integer", "minimum": 1},
            },
        },
        "bifurcate": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "lambda": {"type": ["string", "number"]},
                "interval": {"type": "array", "items": {"type": ["string", "number"]}, "minItems": 2, "maxItems": 2},
                "jmax": {"type": "integer", "minimum": 0},
            },
        },
        "verify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "hopf_samples": {"type": "integer", "minimum": 10},
                "resolution": {"type": "integer", "minimum": 8, "multipleOf": 2},
                "metrics": {"type": "integer", "minimum": 1},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "report": {"type": "string"},
                "trace": {"type": "string"},
                "instance": {"type": "string"},
            },
        },
    },
}

DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "seed": 0,
    "recipe": {"kind": "flat", "complex_dim": 2, "resolution": 16, "params": {}},
    "solver": dict(SolverConfig().as_dict(), method="auto", seeds=5),
    "bifurcate": {"lambda": "1/4", "interval": ["1/5", "3/10"], "jmax": 10},
    "verify": {"hopf_samples": 100, "resolution": 16, "metrics": 2},
    "output": {},
}


class ConfigError(ValueError):
    """Invalid configuration; ``pointer`` is a JSON pointer to the offending key."""

    def __init__(self, message, pointer="/"):
        super().__init__(message)
        self.pointer = pointer


def _pointer(path):
    return "/" + "/".join(str(p) for p in path)


def validate(config: dict):
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = list(err.absolute_path)
        if err.validator == "additionalProperties":
            # point at the unknown key itself
            extra = set(err.instance) - set(err.schema.get("properties", {}))
            path = path + sorted(extra)[:1]
        raise ConfigError(err.message, _pointer(path))


def _merge(base, override):
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(path=None, command=None, seed=None) -> dict:
    """Read, validate and materialize defaults; CLI values win over the file."""
    raw = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found", "/") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc.msg}", "/") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object", "/")
    validate(raw)
    if command is not None and raw.get("command", command) != command:
        raise ConfigError(f"config is for command {raw['command']!r}", "/command")
    cfg = _merge(DEFAULTS, raw)
    if command is not None:
        cfg["command"] = command
    if seed is not None:
        cfg["seed"] = seed
        cfg["recipe"]["seed"] = seed
    cfg["recipe"].setdefault("seed", cfg["seed"])
    return cfg


def solver_config(cfg: dict) -> SolverConfig:
    fields = SolverConfig().as_dict()
    return SolverConfig(**{k: v for k, v in cfg["solver"].items() if k in fields})
