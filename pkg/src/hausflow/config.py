"""Experiment configuration: YAML files validated against a JSON schema.

Every default lives in :data:`SCHEMA`, so ``effective_config`` of an empty
mapping documents the full set of knobs.  Numbers may be written as small
arithmetic expressions such as ``"sqrt(2)"`` or ``"1/64"``.
"""
from __future__ import annotations

import ast
import copy
import math
import operator
from pathlib import Path

import numpy as np
import yaml
from jsonschema import Draft202012Validator, validators

from .exceptions import ConfigError
from .generators import GeneratorSet, lattice_sample
from .groups import AlgebraVector, get_group
from .metrics import BaseMetricSpec
from .semigroup import build_generator_from_basis
from .window import WindowSpec, required_padding

NUMBER = {"anyOf": [{"type": "number"}, {"type": "string"}]}
POINT = {"type": "array", "items": NUMBER, "minItems": 1}
POINTS = {"type": "array", "items": POINT}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["group", "base_metric", "window"],
    "properties": {
        "name": {"type": "string", "default": "experiment"},
        "group": {"type": "string", "pattern": "^(R[1-9]|T[1-9]|H3)$"},
        "base_metric": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"type": "string"},
                "params": {"type": "object", "default": {}},
            },
        },
        "generators": {
            "type": "object",
            "additionalProperties": False,
            "default": {"elements": None, "from_basis": None, "lattice": None},
            "properties": {
                "elements": {"anyOf": [POINTS, {"type": "null"}], "default": None},
                "from_basis": {"anyOf": [POINTS, {"type": "null"}], "default": None},
                "lattice": {
                    "anyOf": [
                        {"type": "null"},
                        {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["mesh"],
                            "properties": {
                                "mesh": NUMBER,
                                "exclude_box": {"anyOf": [POINTS, {"type": "null"}], "default": None},
                            },
                        },
                    ],
                    "default": None,
                },
            },
        },
        "window": {
            "type": "object",
            "additionalProperties": False,
            "required": ["bounds", "resolution"],
            "properties": {
                "bounds": POINTS,
                "resolution": {
                    "anyOf": [
                        {"type": "integer", "minimum": 2},
                        {"type": "array", "items": {"type": "integer", "minimum": 2}},
                    ]
                },
                "padding_radius": {"anyOf": [NUMBER, {"const": "auto"}], "default": "auto"},
                "max_points": {"type": "integer", "minimum": 1, "default": 20000},
            },
        },
        "adjacency": {
            "type": "object",
            "additionalProperties": False,
            "default": {},
            "properties": {"stencil_radius": {"type": "integer", "minimum": 1, "default": 2}},
        },
        "flow": {
            "type": "object",
            "additionalProperties": False,
            "default": {},
            "properties": {
                "tol": {"type": "number", "exclusiveMinimum": 0, "default": 1e-4},
                "max_iter": {"type": "integer", "minimum": 1, "default": 100},
                "divergence_factor": {"type": "number", "exclusiveMinimum": 1, "default": 10.0},
                "patience": {"type": "integer", "minimum": 1, "default": 3},
                "retain": {"enum": ["all", "ends"], "default": "all"},
                "method": {"enum": ["auto", "floyd_warshall", "dijkstra"], "default": "auto"},
                "monotone_slack": {"type": "number", "minimum": 0, "default": 1e-9},
                "enforce_monotone": {"type": "boolean", "default": True},
                "save_iterates": {"type": "boolean", "default": False},
            },
        },
        "finsler": {
            "type": "object",
            "additionalProperties": False,
            "default": {},
            "properties": {
                "base_point": {"anyOf": [POINT, {"type": "null"}], "default": None},
                "directions": {"anyOf": [POINTS, {"type": "null"}], "default": None},
                "schedule_scale": {"anyOf": [NUMBER, {"type": "null"}], "default": None},
                "schedule_length": {"type": "integer", "minimum": 4, "default": 14},
                "both_signs": {"type": "boolean", "default": False},
                "sigma_maxlen": {"type": "integer", "minimum": 0, "default": 8},
                "rel_tol": {"type": "number", "exclusiveMinimum": 0, "default": 0.02},
            },
        },
        "semigroup": {
            "type": "object",
            "additionalProperties": False,
            "default": {},
            "properties": {
                "maxlens": {"type": "array", "items": {"type": "integer", "minimum": 1},
                            "default": [4, 8, 12]},
                "probe_factor": {"type": "integer", "minimum": 1, "default": 10},
                "bounds": {"anyOf": [POINTS, {"type": "null"}], "default": None},
                "resolution": {"anyOf": [{"type": "integer", "minimum": 2}, {"type": "null"}],
                               "default": None},
            },
        },
        "verify": {
            "type": "object",
            "additionalProperties": False,
            "default": {},
            "properties": {
                "axiom_tol": {"type": "number", "minimum": 0, "default": 1e-9},
                "midpoint_pairs": {"type": "integer", "minimum": 0, "default": 200},
                "midpoint_eps_steps": {"type": "number", "exclusiveMinimum": 0, "default": 3.0},
                "upper_bound_steps": {"type": "number", "minimum": 0, "default": 2.0},
                "invariance_steps": {"type": "number", "minimum": 0, "default": 2.0},
                "invariance_rel_tol": {"type": "number", "minimum": 0, "default": 0.05},
                "sigma_range": {"type": "array", "items": {"type": "number"}, "minItems": 2,
                                "maxItems": 2, "default": [-1.0, 1.0]},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "default": {},
            "properties": {"dir": {"type": "string", "default": "out"}},
        },
        "threads": {"type": "integer", "minimum": 1, "default": 1},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1, "default": 0},
    },
}


def _extend_with_default(cls):
    validate_props = cls.VALIDATORS["properties"]

    def set_defaults(validator, properties, instance, schema):
        if isinstance(instance, dict):
            for key, sub in properties.items():
                if "default" in sub and key not in instance:
                    instance[key] = copy.deepcopy(sub["default"])
        yield from validate_props(validator, properties, instance, schema)

    return validators.extend(cls, {"properties": set_defaults})


_Validator = _extend_with_default(Draft202012Validator)


# -- numeric expressions ---------------------------------------------------------

_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
    ast.USub: operator.neg,
    ast.UAdd: operator.pos,
}
_NAMES = {"pi": math.pi, "e": math.e, "inf": math.inf}
_FUNCS = {"sqrt": math.sqrt, "cbrt": np.cbrt, "exp": math.exp, "log": math.log}


def parse_number(x) -> float:
    """A float from a number or an arithmetic expression string."""
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return float(x)
    if not isinstance(x, str):
        raise ValueError(f"not a number: {x!r}")

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
            return float(_FUNCS[node.func.id](ev(node.args[0])))
        raise ValueError(f"unsupported expression {x!r}")

    try:
        return ev(ast.parse(x.strip(), mode="eval"))
    except SyntaxError as exc:
        raise ValueError(f"cannot parse number {x!r}") from exc


def _numbers(rows):
    return [[parse_number(c) for c in r] for r in rows]


# -- loading ------------------------------------------------------------------------


def effective_config(raw: dict) -> dict:
    """Validate ``raw`` and return a copy with every default filled in.

    Raises :class:`ConfigError` listing one message per offending field.
    """
    cfg = copy.deepcopy(raw) if raw is not None else {}
    errors = sorted(_Validator(SCHEMA).iter_errors(cfg), key=lambda e: list(e.absolute_path))
    msgs = [f"{'/'.join(map(str, e.absolute_path)) or '<root>'}: {e.message}" for e in errors]
    if not msgs:
        msgs = _semantic_errors(cfg)
    if msgs:
        raise ConfigError(msgs)
    return cfg


def _semantic_errors(cfg) -> list:
    out = []
    gen = cfg["generators"]
    given = [k for k in ("elements", "from_basis", "lattice") if gen.get(k) is not None]
    if len(given) > 1:
        out.append(f"generators: give exactly one of elements/from_basis/lattice, not {given}")
    try:
        group = get_group(cfg["group"])
        BaseMetricSpec(cfg["base_metric"]["kind"], group, cfg["base_metric"]["params"])
    except (ValueError, KeyError) as exc:
        out.append(f"base_metric: {exc}")
        return out
    for key in ("elements", "from_basis"):
        for p in gen.get(key) or []:
            if len(p) != group.dim:
                out.append(f"generators/{key}: {p} does not have {group.dim} coordinates")
    if len(cfg["window"]["bounds"]) != group.dim:
        out.append(f"window/bounds: need {group.dim} (lo, hi) pairs")
    for path in ("elements", "from_basis"):
        for p in gen.get(path) or []:
            for c in p:
                try:
                    parse_number(c)
                except ValueError as exc:
                    out.append(f"generators/{path}: {exc}")
    return out


def load_config(path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"{path}: invalid YAML ({exc})"]) from exc
    if not isinstance(raw, dict):
        raise ConfigError([f"{path}: top level must be a mapping"])
    return effective_config(raw)


# -- building objects ---------------------------------------------------------------


def build_group(cfg):
    return get_group(cfg["group"])


def build_base(cfg) -> BaseMetricSpec:
    bm = cfg["base_metric"]
    return BaseMetricSpec(bm["kind"], build_group(cfg), dict(bm["params"]))


def build_generators(cfg) -> GeneratorSet:
    group = build_group(cfg)
    gen = cfg["generators"]
    if gen.get("from_basis") is not None:
        basis = [AlgebraVector(group, tuple(r)) for r in _numbers(gen["from_basis"])]
        return build_generator_from_basis(basis)
    if gen.get("lattice") is not None:
        lat = gen["lattice"]
        box = lat.get("exclude_box")
        box = None if box is None else _numbers(box)
        return lattice_sample(group, parse_number(lat["mesh"]), exclude_box=box)
    if gen.get("elements") is not None:
        return GeneratorSet.from_elements(group, _numbers(gen["elements"]))
    return GeneratorSet.from_elements(group, [group.identity()])


def build_window(cfg, X: GeneratorSet | None = None) -> WindowSpec:
    group = build_group(cfg)
    w = cfg["window"]
    pad = w["padding_radius"]
    bounds = tuple(tuple(b) for b in _numbers(w["bounds"]))
    if pad == "auto":
        pad = required_padding(group, bounds, X.elements) if X is not None else 0.0
    return WindowSpec(group, bounds, w["resolution"], parse_number(pad))
