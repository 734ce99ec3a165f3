"""JSON schemas for the problem config and for every report the CLI writes."""

from __future__ import annotations

import jsonschema

from .errors import InputError

_NUM = {"type": "number"}
_VEC = {"type": "array", "items": _NUM}
_ENTRY = {"oneOf": [_NUM, {"type": "string"}]}
_MATRIX = {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": _ENTRY}}

CONFIG = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "problem config",
    "type": "object",
    "required": ["n", "m", "coefficients"],
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "m": {"type": "integer", "minimum": 1},
        "coefficients": {
            "type": "object",
            "required": ["second_order"],
            "properties": {
                "second_order": {"type": "object", "additionalProperties": _MATRIX},
                "first_order": {"type": "object", "additionalProperties": _MATRIX},
            },
            "additionalProperties": False,
        },
        "body": {"type": "object", "required": ["type"]},
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
        "sampling": {
            "type": "object",
            "properties": {
                "x": {"type": "array", "minItems": 1, "items": _VEC},
                "t": {"type": "array", "minItems": 1, "items": {"type": "number", "minimum": 0}},
                "sigma_resolution": {"type": "integer", "minimum": 1},
                "smooth_samples": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "simulation": {
            "type": "object",
            "properties": {
                "L": {"type": "number", "exclusiveMinimum": 0},
                "N": {"type": "integer", "minimum": 4},
                "dt": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "T": {"type": "number", "exclusiveMinimum": 0},
                "scheme": {"enum": ["explicit-central", "spectral-exact"]},
                "monitor_stride": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "initial": {
            "type": "object",
            "required": ["type"],
            "properties": {"type": {"enum": ["constant", "fourier", "random_inbody"]}},
        },
        "falsify": {
            "type": "object",
            "properties": {"budget": {"type": "integer", "minimum": 1}},
            "additionalProperties": False,
        },
        "seed": {"type": "integer", "minimum": 0},
    },
    "additionalProperties": False,
}

_COMMON = {
    "schema": {"type": "string"},
    "command": {"type": "string"},
    "exit_code": {"type": "integer"},
    "config": {"type": "string"},
    "config_sha256": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
    "seed": {"type": "integer"},
    "tolerance": _NUM,
    "runtime_seconds": _NUM,
}
_COMMON_REQUIRED = ["schema", "command", "exit_code", "config", "config_sha256", "runtime_seconds"]

_ALIGNMENT = {
    "type": "object",
    "required": ["aligned", "eigenvalue", "residual", "threshold"],
    "properties": {"aligned": {"type": "boolean"}, "eigenvalue": _NUM, "residual": _NUM, "threshold": _NUM},
}
_WITNESS = {
    "type": "object",
    "required": ["matrix", "x", "t", "normal", "alignment"],
    "properties": {"matrix": {"type": "string"}, "x": _VEC, "t": _NUM, "normal": _VEC, "alignment": _ALIGNMENT},
}
_STATUS = {"enum": ["Invariant", "NotInvariant", "SufficientHolds", "NecessaryViolated", "Inconclusive"]}
_VERDICT = {
    "type": "object",
    "required": ["status", "structural_path", "tolerance", "max_residual", "witnesses", "sampling"],
    "properties": {
        "status": _STATUS,
        "structural_path": {"type": ["string", "null"]},
        "tolerance": _NUM,
        "max_residual": {"type": "object", "additionalProperties": _NUM},
        "witnesses": {"type": "array", "items": _WITNESS},
        "sampling": {"type": "object"},
        "t0_aligned": {"type": ["boolean", "null"]},
        "details": {"type": "object"},
    },
}
_PARABOLICITY = {
    "type": "object",
    "required": ["margin", "parabolic", "witness", "sampling"],
    "properties": {
        "margin": _NUM,
        "parabolic": {"type": "boolean"},
        "witness": {"type": "object", "required": ["x", "t", "sigma"]},
        "sampling": {"type": "object", "required": ["sigma_resolution", "points", "refined"]},
    },
}
_SIMULATION = {
    "type": "object",
    "required": ["max_violation", "initial_violation", "solver_tolerance", "field_scale", "dt", "steps", "dx",
                 "stability_gate"],
    "properties": {
        "max_violation": _NUM,
        "initial_violation": _NUM,
        "solver_tolerance": _NUM,
        "field_scale": _NUM,
        "dt": _NUM,
        "steps": {"type": "integer"},
        "dx": _NUM,
        "stability_gate": {"type": "object", "required": ["dt_max"]},
    },
}


def _report(name, required, properties):
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "$id": f"parainv/{name}",
        "title": name,
        "type": "object",
        "required": _COMMON_REQUIRED + required,
        "properties": {**_COMMON, **properties, "schema": {"const": f"parainv/{name}"}},
    }


REPORTS = {
    "error-report": _report("error-report", ["error"], {
        "error": {
            "type": "object",
            "required": ["type", "message"],
            "properties": {"type": {"type": "string"}, "message": {"type": "string"}, "dt": _NUM, "dt_max": _NUM,
                           "suggested_dt": _NUM},
        },
        "verdict": _VERDICT,
    }),
    "parabolicity-report": _report("parabolicity-report", ["parabolicity"], {"parabolicity": _PARABOLICITY}),
    "check-report": _report("check-report", ["verdict", "structural", "agree", "internal_error"], {
        "verdict": _VERDICT,
        "structural": {"oneOf": [_VERDICT, {"type": "null"}]},
        "agree": {"type": "boolean"},
        "internal_error": {"type": "boolean"},
        "parabolicity": _PARABOLICITY,
    }),
    "simulate-report": _report("simulate-report", ["simulation", "within_tolerance", "trace"], {
        "simulation": _SIMULATION,
        "within_tolerance": {"type": "boolean"},
        "trace": {"type": "string"},
    }),
    "falsify-report": _report("falsify-report", ["verdict", "found", "budget"], {
        "verdict": _VERDICT,
        "found": {"type": "boolean"},
        "budget": {"type": "integer"},
        "witness": {"type": "object", "required": ["exit_time", "exit_margin", "threshold", "simulation"]},
        "files": {"type": "object"},
    }),
}


def validate_config(data) -> None:
    try:
        jsonschema.validate(data, CONFIG)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InputError(f"config error at {where}: {exc.message}") from None


def validate_report(report: dict) -> None:
    """Validate ``report`` against the schema it declares."""
    name = str(report.get("schema", "")).removeprefix("parainv/")
    if name not in REPORTS:
        raise InputError(f"unknown report schema {report.get('schema')!r}")
    jsonschema.validate(report, REPORTS[name])
