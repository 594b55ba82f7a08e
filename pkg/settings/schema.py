SCHEMA_VERSION = 1

_POSITIVE_INT = {"type": "integer", "minimum": 1}
_LADDER = {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1, "uniqueItems": True}

CONFIG_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "homogenization run",
    "type": "object",
    "required": ["schema_version", "coefficient"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "coefficient": {"type": "string", "minLength": 1},
        "seed": {"type": "integer", "minimum": 0},
        "cell": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "m": {"type": "integer", "minimum": 2},
                "richardson": {"type": "array", "items": {"type": "integer", "minimum": 2},
                               "minItems": 3, "maxItems": 3},
            },
        },
        "domain": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "shape": {"enum": ["unit_square", "l_shape"]},
                "dimension": {"enum": [1, 2]},
                "s": {"type": "integer", "minimum": 2},
            },
        },
        "problem": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "source": {"type": "string"},
                "source_scale": {"type": "number"},
                "boundary": {"enum": ["dirichlet", "neumann"]},
                "inverse_eps": _LADDER,
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tolerance": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "max_iterations": _POSITIVE_INT,
            },
        },
        "lipschitz": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "q": {"type": "number", "exclusiveMinimum": 2},
                "alpha": {"type": ["number", "null"], "exclusiveMinimum": 0, "maximum": 1},
            },
        },
        "twoscale": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "function": {"type": "string"},
                "inverse_eps": _LADDER,
                "s": {"type": "integer", "minimum": 2},
                "m_y": {"type": "integer", "minimum": 2},
                "dump_cells": {"type": "array", "items": {"type": "integer", "minimum": 0}},
            },
        },
        "acceptance": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "min_slope_h1": {"type": ["number", "null"]},
                "max_slope_h1": {"type": ["number", "null"]},
                "min_slope_l2": {"type": ["number", "null"]},
                "require_pairwise_positive": {"type": "boolean"},
            },
        },
    },
}

DEFAULTS = {
    "seed": 0,
    "cell": {"m": 16},
    "domain": {"shape": "unit_square", "dimension": 2, "s": 16},
    "problem": {"source": "one", "source_scale": 1.0, "boundary": "dirichlet", "inverse_eps": [4, 8, 16, 32]},
    "solver": {"tolerance": 1e-10, "max_iterations": 50000},
    "lipschitz": {"q": 4.0, "alpha": None},
    "twoscale": {"function": "sin_sin", "inverse_eps": [4, 8, 16], "s": 8, "m_y": 8, "dump_cells": []},
}
