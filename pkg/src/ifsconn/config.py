"""Run configuration: JSON schema, loading with precise errors, object builders."""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema
import numpy as np

from .connectivity import Policy
from .mandelbrot import ParamWindow, TileSpec
from .maps import ContractionMap, ContractionModulus, UnverifiedMapError, registered_bodies
from .porosity import TruncationFamily
from .sets import CellSet

CONFIG_VERSION = 1

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_vec = {"type": "array", "items": _num, "minItems": 1}
_mat = {"type": "array", "items": _vec, "minItems": 1}

_modulus = {
    "oneOf": [
        {"type": "object", "additionalProperties": False, "required": ["kind", "alpha"],
         "properties": {"kind": {"const": "linear"}, "alpha": {"type": "number", "minimum": 0, "exclusiveMaximum": 1}}},
        {"type": "object", "additionalProperties": False, "required": ["kind", "t", "phi"],
         "properties": {"kind": {"const": "tabulated"}, "t": _vec, "phi": _vec}},
    ]
}

_map = {
    "oneOf": [
        {"type": "object", "additionalProperties": False, "required": ["type", "linear"],
         "properties": {"type": {"const": "affine"}, "linear": _mat, "offset": _vec,
                        "alpha": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                        "block": {"type": "integer", "minimum": 1}}},
        {"type": "object", "additionalProperties": False, "required": ["type", "name", "dim", "modulus"],
         "properties": {"type": {"const": "builtin"}, "name": {"type": "string"},
                        "dim": {"type": "integer", "minimum": 1}, "modulus": _modulus}},
    ]
}

_window = {
    "oneOf": [
        {"type": "object", "additionalProperties": False, "required": ["interval", "resolution"],
         "properties": {"interval": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
                        "resolution": {"type": "integer", "minimum": 2}}},
        {"type": "object", "additionalProperties": False,
         "required": ["center", "axes", "half_widths", "resolution"],
         "properties": {"center": _vec, "axes": _mat,
                        "half_widths": {"type": "array", "items": _pos, "minItems": 1, "maxItems": 2},
                        "resolution": {"type": "integer", "minimum": 2}}},
    ]
}

_cellset = {
    "type": "object", "additionalProperties": False, "required": ["lo", "hi", "eps"],
    "properties": {"lo": _vec, "hi": _vec, "eps": _pos},
}


def _block(props: dict, required=()) -> dict:
    return {"type": "object", "additionalProperties": False, "required": list(required), "properties": props}


SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["version"],
    "properties": {
        "version": {"const": CONFIG_VERSION},
        "seed": {"type": "integer", "minimum": 0},
        "workers": {"type": "integer", "minimum": 1},
        "fastpath": {"type": "boolean"},
        "maps": _block({"f": _map, "g": _map}, ["f", "g"]),
        "policy": _block({"eps0": _pos, "levels": {"type": "integer", "minimum": 1},
                          "max_cells": {"type": "integer", "minimum": 1},
                          "tol": {"type": "number", "minimum": 0}}),
        "attractor": _block({"w": _vec, "eps": _pos, "tol": {"type": "number", "minimum": 0},
                             "max_cells": {"type": "integer", "minimum": 1}}, ["w", "eps"]),
        "classify": _block({"w": _vec}, ["w"]),
        "sweep": _block({"window": _window, "refine_depth": {"type": "integer", "minimum": 0}}, ["window"]),
        "tiles": _block({"A": _mat, "digits": _mat, "window": _window}, ["A", "digits"]),
        "mset": _block({"n": {"type": "integer", "minimum": 1}, "D": _cellset, "window": _window},
                       ["n", "D", "window"]),
        "covering": _block({"k": _pos, "nmax": {"type": "integer", "minimum": 0}, "eps": _pos,
                            "window": _window}, ["k", "nmax", "eps", "window"]),
        "porosity": _block({
            "family": _block({"kind": {"enum": ["decaying", "scalar"]}, "dims": {
                "type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
                "params": {"type": "object", "additionalProperties": _num}}, ["dims"]),
            "R": _pos, "samples": {"type": "integer", "minimum": 100}}, ["family", "R", "samples"]),
        "verify": _block({"quick": {"type": "boolean"}}),
    },
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the location of the problem."""


def _line_of(text: str, path) -> int | None:
    """Best-effort line of the last key on ``path`` in the raw JSON text."""
    keys = [p for p in path if isinstance(p, str)]
    if not keys:
        return None
    needle = json.dumps(keys[-1]) + ":"
    for n, line in enumerate(text.splitlines(), start=1):
        if needle in line.replace('" :', '":'):
            return n
    return None


def parse_config(text: str, source: str = "<config>") -> dict:
    """Decode and schema-check a configuration document."""
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        where = "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)
        line = _line_of(text, list(err.absolute_path))
        loc = f"{source}:{line}" if line else source
        raise ConfigError(f"{loc}: {where}: {err.message}")
    return cfg


def load_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror or exc}") from exc
    return parse_config(text, str(path))


# ---------------------------------------------------------------------------
# builders


def build_map(spec: dict, where: str) -> ContractionMap:
    try:
        if spec["type"] == "affine":
            m = ContractionMap.affine(spec["linear"], spec.get("offset"), spec.get("alpha"), spec.get("block", 1))
        else:
            if spec["name"] not in registered_bodies():
                raise ValueError(f"unknown builtin map {spec['name']!r}; known: {registered_bodies()}")
            mod = spec["modulus"]
            modulus = (ContractionModulus.linear(mod["alpha"]) if mod["kind"] == "linear"
                       else ContractionModulus.tabulated(mod["t"], mod["phi"]))
            m = ContractionMap(spec["name"], modulus, dim=spec["dim"])
        m.require_verified()
    except (ValueError, UnverifiedMapError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    return m


def build_maps(cfg: dict) -> tuple[ContractionMap, ContractionMap]:
    if "maps" not in cfg:
        raise ConfigError("$.maps: this command needs maps f and g")
    f = build_map(cfg["maps"]["f"], "$.maps.f")
    g = build_map(cfg["maps"]["g"], "$.maps.g")
    if f.dim != g.dim:
        raise ConfigError("$.maps: f and g act on different dimensions")
    return f, g


def build_policy(cfg: dict) -> Policy:
    return Policy(**cfg.get("policy", {}))


def build_window(spec: dict, where: str) -> ParamWindow:
    try:
        if "interval" in spec:
            lo, hi = spec["interval"]
            if not hi > lo:
                raise ValueError("interval must have lo < hi")
            return ParamWindow.interval(lo, hi, spec["resolution"])
        return ParamWindow(spec["center"], spec["axes"], tuple(spec["half_widths"]), spec["resolution"])
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def build_cellset(spec: dict, where: str) -> CellSet:
    lo, hi = np.asarray(spec["lo"], float), np.asarray(spec["hi"], float)
    if lo.shape != hi.shape or np.any(hi < lo):
        raise ConfigError(f"{where}: lo and hi must have equal length with lo <= hi")
    return CellSet.from_box(lo, hi, spec["eps"])


def build_tile(spec: dict, where: str) -> TileSpec:
    try:
        return TileSpec(spec["A"], spec["digits"])
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def build_family(spec: dict, where: str) -> TruncationFamily:
    try:
        kind = spec.get("kind", "decaying")
        if "params" in spec:
            return TruncationFamily(tuple(spec["dims"]), kind, dict(spec["params"]))
        if kind != "decaying":
            raise ValueError("the scalar family needs params a and b")
        return TruncationFamily.default(spec["dims"])
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def require(cfg: dict, block: str) -> dict:
    if block not in cfg:
        raise ConfigError(f"$.{block}: this command needs a '{block}' block")
    return cfg[block]
