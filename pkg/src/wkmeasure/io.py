"""JSON problem files, report serialization and bundled fixtures.

Operators are written as ``{"domain_exp": "2", "codomain_exp": "1.5",
"field": "real", "entries": [[row, col, re, im], ...]}``; exponents are
decimal strings.  Vectors use ``[label, re, im]`` entries.  Labels are JSON
integers or strings.
"""
from __future__ import annotations

import json
from importlib import resources
from typing import Any

import jsonschema
import numpy as np

from .measures import OperatorFamily
from .norms import FiniteOperator
from .nuclear import RankOneRepresentation
from .spaces import Ambient, Exponent, FiniteVector, TruncationPair, VectorFamily, label_key
from .vonneumann import AtomSystem

KINDS = ("norm", "nuclear", "measure-l1", "measure-c0", "measure-nuclear", "measure-vn",
         "partition", "curve", "verify-paper-example")
SOLVERS = ("exact", "greedy", "auto")

_LABEL = {"type": ["integer", "string"]}
_EXP = {"type": "string", "pattern": r"^[0-9]+(\.[0-9]+)?([eE][-+]?[0-9]+)?$"}
_NUM = {"type": "number"}
_BUDGET = {"type": "integer", "minimum": 0}

SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$defs": {
        "operator": {
            "type": "object",
            "additionalProperties": False,
            "required": ["entries"],
            "properties": {
                "domain_exp": _EXP,
                "codomain_exp": _EXP,
                "field": {"enum": ["real", "complex"]},
                "entries": {"type": "array", "items": {
                    "type": "array", "prefixItems": [_LABEL, _LABEL, _NUM, _NUM],
                    "minItems": 3, "maxItems": 4, "items": False}},
            },
        },
        "vector": {
            "type": "object",
            "additionalProperties": False,
            "required": ["entries"],
            "properties": {"entries": {"type": "array", "items": {
                "type": "array", "prefixItems": [_LABEL, _NUM, _NUM],
                "minItems": 2, "maxItems": 3, "items": False}}},
        },
        "operator_family": {
            "type": "object",
            "additionalProperties": False,
            "required": ["members"],
            "properties": {
                "name": {"type": "string"},
                "description": {"type": "string"},
                "members": {"type": "array", "minItems": 1,
                            "items": {"$ref": "#/$defs/operator"}},
            },
        },
        "vector_family": {
            "type": "object",
            "additionalProperties": False,
            "required": ["ambient", "members"],
            "properties": {
                "name": {"type": "string"},
                "ambient": {"enum": ["ell1", "c0", "ellp"]},
                "exponent": _EXP,
                "weights": {"type": "array", "items": {
                    "type": "array", "prefixItems": [_LABEL, {"type": "number",
                                                              "exclusiveMinimum": 0}],
                    "minItems": 2, "maxItems": 2, "items": False}},
                "members": {"type": "array", "minItems": 1,
                            "items": {"$ref": "#/$defs/vector"}},
            },
        },
        "atoms": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "standard": {"type": "array", "minItems": 1, "items": _LABEL},
                "vectors": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/vector"}},
                "labels": {"type": "array", "items": _LABEL},
                "ambient": {"type": "array", "items": _LABEL},
            },
            "oneOf": [{"required": ["standard"]}, {"required": ["vectors"]}],
        },
        "config": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "restarts": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "solver": {"enum": list(SOLVERS)},
                "budgets": {"type": "array", "prefixItems": [_BUDGET, _BUDGET],
                            "minItems": 2, "maxItems": 2, "items": False},
                "max_terms": {"type": ["integer", "null"], "minimum": 1},
                "guard": {"type": ["integer", "null"], "minimum": 1},
                "k_max": _BUDGET,
                "measure_kind": {"enum": ["nuclear", "chi", "l1", "c0"]},
                "formula": {"enum": ["nuclear", "chi"]},
                "partition_tol": {"type": "number", "exclusiveMinimum": 0},
            },
        },
    },
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": list(KINDS)},
        "description": {"type": "string"},
        "config": {"$ref": "#/$defs/config"},
        "operator": {"$ref": "#/$defs/operator"},
        "family": {"oneOf": [{"$ref": "#/$defs/operator_family"},
                             {"$ref": "#/$defs/vector_family"}]},
        "atoms": {"type": "object", "additionalProperties": False,
                  "required": ["row", "col"],
                  "properties": {"row": {"$ref": "#/$defs/atoms"},
                                 "col": {"$ref": "#/$defs/atoms"}}},
        "generators": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/operator"}},
    },
    "allOf": [
        {"if": {"properties": {"kind": {"enum": ["norm", "nuclear"]}}},
         "then": {"required": ["operator"]}},
        {"if": {"properties": {"kind": {"enum": ["measure-l1", "measure-c0"]}}},
         "then": {"required": ["family"],
                  "properties": {"family": {"$ref": "#/$defs/vector_family"}}}},
        {"if": {"properties": {"kind": {"const": "measure-nuclear"}}},
         "then": {"required": ["family"],
                  "properties": {"family": {"$ref": "#/$defs/operator_family"}}}},
        {"if": {"properties": {"kind": {"const": "measure-vn"}}},
         "then": {"required": ["family", "atoms"],
                  "properties": {"family": {"$ref": "#/$defs/operator_family"}}}},
        {"if": {"properties": {"kind": {"const": "partition"}}},
         "then": {"required": ["generators", "atoms"]}},
        {"if": {"properties": {"kind": {"const": "curve"}}},
         "then": {"required": ["family"]}},
    ],
}

DEFAULTS = {"tol": 1e-9, "restarts": 32, "seed": 0, "solver": "auto", "budgets": [0, 0],
            "max_terms": None, "guard": 10**6}


class ProblemError(ValueError):
    """Malformed or inconsistent problem file (exit code 2)."""


_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


def validate(problem: Any) -> None:
    errors = sorted(_VALIDATOR.iter_errors(problem), key=lambda e: [str(p) for p in e.absolute_path])
    if errors:
        e = errors[0]
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ProblemError(f"schema violation at {where}: {e.message}")


def load_problem(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            problem = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ProblemError(f"{path}: not valid JSON ({exc})") from exc
    validate(problem)
    return problem


# ------------------------------------------------------------------ decoding

def _scalar(re, im=0.0):
    return complex(re, im) if im else float(re)


def parse_operator(obj: dict) -> FiniteOperator:
    entries: dict = {}
    for e in obj["entries"]:
        key = (e[0], e[1])
        if key in entries:
            raise ProblemError(f"duplicate operator entry {list(key)}")
        entries[key] = _scalar(*e[2:])
    try:
        return FiniteOperator(entries, Exponent.parse(obj.get("domain_exp", "2")),
                              Exponent.parse(obj.get("codomain_exp", "2")), obj.get("field"))
    except ValueError as exc:
        raise ProblemError(str(exc)) from exc


def parse_vector(obj: dict) -> FiniteVector:
    entries: dict = {}
    for e in obj["entries"]:
        if e[0] in entries:
            raise ProblemError(f"duplicate vector entry {e[0]!r}")
        entries[e[0]] = _scalar(*e[1:])
    return FiniteVector(entries)


def parse_operator_family(obj: dict) -> OperatorFamily:
    if "ambient" in obj:
        raise ProblemError("expected an operator family, got a vector family")
    members = [parse_operator(m) for m in obj["members"]]
    fields = {T.field for T in members}
    if len(fields) > 1:
        members = [FiniteOperator(T.entries, T.domain_exp, T.codomain_exp, "complex")
                   for T in members]
    try:
        return OperatorFamily(tuple(members), obj.get("name"))
    except ValueError as exc:
        raise ProblemError(str(exc)) from exc


def parse_vector_family(obj: dict) -> VectorFamily:
    if "ambient" not in obj:
        raise ProblemError("expected a vector family (with an ambient)")
    kind = obj["ambient"]
    try:
        if kind == "ell1":
            w = obj.get("weights")
            amb = Ambient.ell1(None if w is None else {k: v for k, v in w})
        elif kind == "c0":
            amb = Ambient.c0()
        else:
            amb = Ambient.ellp(Exponent.parse(obj.get("exponent")))
    except ValueError as exc:
        raise ProblemError(str(exc)) from exc
    if kind != "ell1" and "weights" in obj:
        raise ProblemError("weights are only allowed for the ell1 ambient")
    return VectorFamily(tuple(parse_vector(v) for v in obj["members"]), amb)


def parse_atoms(obj: dict, side: str) -> AtomSystem:
    try:
        if "standard" in obj:
            return AtomSystem.standard(obj["standard"], side)
        return AtomSystem(tuple(parse_vector(v) for v in obj["vectors"]),
                          obj.get("labels"), obj.get("ambient"), side)
    except ValueError as exc:
        raise ProblemError(str(exc)) from exc


# ------------------------------------------------------------------ encoding

def encode_scalar(v) -> list:
    v = complex(v)
    return [float(v.real), float(v.imag)]


def encode_vector(x: FiniteVector) -> dict:
    return {"entries": [[k, *encode_scalar(v)] for k, v in x.entries.items()]}


def encode_operator(T: FiniteOperator) -> dict:
    entries = sorted(T.entries.items(),
                     key=lambda kv: (label_key(kv[0][0]), label_key(kv[0][1])))
    return {"domain_exp": format_exponent(T.domain_exp),
            "codomain_exp": format_exponent(T.codomain_exp),
            "field": T.field,
            "entries": [[r, c, *encode_scalar(v)] for (r, c), v in entries]}


def encode_representation(rep: RankOneRepresentation) -> dict:
    return {"cost": rep.cost, "terms": [{"functional": encode_vector(f),
                                          "vector": encode_vector(v)}
                                         for f, v in rep.terms]}


def encode_pair(pair: TruncationPair) -> dict:
    return pair.as_dict()


def format_exponent(p: Exponent) -> str:
    return repr(p.value) if p.value != int(p.value) else str(int(p.value))


def to_jsonable(obj):
    """Recursively turn numpy scalars/arrays and tuples into JSON types."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, complex):
        return encode_scalar(obj)
    return obj


def dumps_report(report: dict) -> str:
    """Deterministic JSON text: sorted keys, fixed indentation."""
    return json.dumps(to_jsonable(report), sort_keys=True, indent=2) + "\n"


# ------------------------------------------------------------------ fixtures

def load_fixture(name: str) -> dict:
    """Raw JSON of a bundled data file (``family_a``, ``family_b``, ...)."""
    text = resources.files("wkmeasure.data").joinpath(f"{name}.json").read_text("utf-8")
    return json.loads(text)


def fixture_family(name: str) -> OperatorFamily:
    obj = load_fixture(name)
    return parse_operator_family({k: obj[k] for k in ("name", "members") if k in obj})


def fixture_operator(name: str) -> tuple:
    """``(operator, ambient labels)`` from a bundled single-operator file."""
    obj = load_fixture(name)
    return parse_operator(obj["operator"]), tuple(obj.get("ambient", ()))
