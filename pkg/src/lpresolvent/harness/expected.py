"""Expected-values file: calibrated constants pinned at first calibration."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import jsonschema

from .config import ConfigError
from .report import write_json

__all__ = ["SCHEMA", "ExpectedValuesError", "default_path", "load_expected", "save_expected"]

_number = {"type": "number"}

SCHEMA = {
    "type": "object",
    "required": ["version", "seed", "slope_limit", "regression_tolerance", "calibration"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": 1},
        "seed": {"type": "integer", "minimum": 0},
        "slope_limit": _number,
        "regression_tolerance": {"type": "number", "minimum": 0, "maximum": 1},
        "calibration": {
            "type": "object",
            "required": ["2", "3", "5", "11", "12"],
            "additionalProperties": False,
            "properties": {
                "2": {"type": "object", "required": ["slope_statistic"], "properties": {"slope_statistic": _number}},
                "3": {"type": "object", "required": ["slope_statistic"], "properties": {"slope_statistic": _number}},
                "5": {
                    "type": "object",
                    "required": ["ellipt1", "ellipt2"],
                    "properties": {"ellipt1": {"type": "number", "exclusiveMinimum": 0},
                                   "ellipt2": {"type": "number", "exclusiveMinimum": 0}},
                },
                "11": {"type": "object", "required": ["slope_statistic"], "properties": {"slope_statistic": _number}},
                "12": {
                    "type": "object",
                    "required": ["growth", "control_slope_statistic"],
                    "properties": {"growth": {"type": "number", "exclusiveMinimum": 0},
                                   "control_slope_statistic": _number},
                },
            },
        },
    },
}


class ExpectedValuesError(ConfigError):
    pass


def default_path() -> Path:
    return Path(str(resources.files("lpresolvent.harness") / "data" / "expected_values.json"))


def load_expected(path=None) -> dict:
    path = Path(path) if path is not None else default_path()
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ExpectedValuesError(f"cannot read expected values {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ExpectedValuesError(f"expected values {path} is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ExpectedValuesError(f"expected values {path} failed schema validation: {exc.message}") from exc
    return data


def save_expected(data: dict, path=None) -> Path:
    jsonschema.validate(data, SCHEMA)
    return write_json(Path(path) if path is not None else default_path(), data)
