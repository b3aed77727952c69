"""JSON schemas for run configurations and emitted reports.

Configurations are validated before execution; unknown keys are rejected so a
typo cannot silently change a run. Reports are validated by the test suite to
keep the output contract stable.
"""

from __future__ import annotations

_POSITIVE_INT = {"type": "integer", "minimum": 1}
_COUNT = {"type": "integer", "minimum": 0}
_UNIT = {"type": "number", "exclusiveMinimum": 0.0, "exclusiveMaximum": 1.0}
_SEED = {"type": "integer", "minimum": 0, "maximum": 2**64 - 1}

_PRIOR = {
    "type": "object",
    "additionalProperties": False,
    "required": ["alpha", "beta"],
    "properties": {
        "alpha": {"type": "number", "exclusiveMinimum": 0.0},
        "beta": {"type": "number", "exclusiveMinimum": 0.0},
    },
}

_SCALAR_OR_VECTOR_NUMBER = {
    "oneOf": [{"type": "number"}, {"type": "array", "items": {"type": "number"}, "minItems": 1}]
}
_SCALAR_OR_VECTOR_INT = {
    "oneOf": [
        {"type": "integer"},
        {"type": "array", "items": {"type": "integer"}, "minItems": 1},
    ]
}

DESIGN_SPEC = {
    "type": "object",
    "additionalProperties": False,
    "required": ["baskets", "max_sizes", "theta0", "theta1", "delta", "stages"],
    "properties": {
        "baskets": _POSITIVE_INT,
        "max_sizes": _SCALAR_OR_VECTOR_INT,
        "theta0": _SCALAR_OR_VECTOR_NUMBER,
        "theta1": _SCALAR_OR_VECTOR_NUMBER,
        "delta": {"type": "number"},
        "prior": _PRIOR,
        "lambda": _UNIT,
        "gamma": {"type": "number", "minimum": 0.0},
        "stages": {"enum": [1, 2]},
        "interim_fraction": _UNIT,
        "interim_sizes": _SCALAR_OR_VECTOR_INT,
    },
}

ANALYZE_CONFIG = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["x", "n", "delta", "theta0"],
    "properties": {
        "x": {"type": "array", "items": _COUNT, "minItems": 1},
        "n": {"type": "array", "items": _COUNT, "minItems": 1},
        "basket_ids": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "delta": {"type": "number"},
        "prior": _PRIOR,
        "theta0": _SCALAR_OR_VECTOR_NUMBER,
    },
}

MONITOR_CONFIG = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["spec", "stage", "x", "n"],
    "properties": {
        "spec": DESIGN_SPEC,
        "stage": {"enum": [1, 2]},
        "x": {"type": "array", "items": _COUNT, "minItems": 1},
        "n": {"type": "array", "items": _COUNT, "minItems": 1},
        "active": {"type": "array", "items": {"type": "boolean"}, "minItems": 1},
    },
}

SCENARIO_CONFIG = {
    "type": "object",
    "additionalProperties": False,
    "required": ["label", "true_rates"],
    "properties": {
        "label": {"type": "string"},
        "true_rates": {"type": "array", "items": {"type": "number"}, "minItems": 1},
    },
}

SIMULATE_CONFIG = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["spec", "seed"],
    "properties": {
        "spec": DESIGN_SPEC,
        "scenarios": {
            "oneOf": [
                {"const": "suite"},
                {"type": "array", "items": SCENARIO_CONFIG, "minItems": 1},
            ]
        },
        "n_sims": _POSITIVE_INT,
        "seed": _SEED,
    },
}

CALIBRATE_CONFIG = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["spec", "seed"],
    "properties": {
        "spec": DESIGN_SPEC,
        "fwer_target": {"type": "number", "minimum": 0.0, "exclusiveMaximum": 1.0},
        "lambda_grid": {"type": "array", "items": _UNIT, "minItems": 1},
        "gamma_grid": {"type": "array", "items": {"type": "number", "minimum": 0.0}, "minItems": 1},
        "n_sims": _POSITIVE_INT,
        "seed": _SEED,
    },
}

_META = {
    "type": "object",
    "additionalProperties": False,
    "required": ["command", "version", "config_hash", "seed", "n_sims"],
    "properties": {
        "command": {"type": "string"},
        "version": {"type": "string"},
        "config_hash": {"type": "string"},
        "seed": {"oneOf": [{"type": "integer"}, {"type": "null"}]},
        "n_sims": {"oneOf": [{"type": "integer"}, {"type": "null"}]},
    },
}

_BASKET_SUMMARY = {
    "type": "object",
    "additionalProperties": False,
    "required": ["id", "x", "n", "alpha", "beta", "mean", "ess", "prob_exceeds"],
    "properties": {
        "id": {"type": "string"},
        "x": _COUNT,
        "n": _COUNT,
        "alpha": {"type": "number"},
        "beta": {"type": "number"},
        "mean": {"type": "number"},
        "ess": {"type": "number"},
        "prob_exceeds": {"type": "number"},
    },
}

ANALYSIS_REPORT = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["meta", "baskets", "partitions", "similarity", "top_partition"],
    "properties": {
        "meta": _META,
        "baskets": {"type": "array", "items": _BASKET_SUMMARY},
        "partitions": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["membership", "num_blocks", "prior", "weight"],
                "properties": {
                    "membership": {"type": "string"},
                    "num_blocks": _POSITIVE_INT,
                    "prior": {"type": "number"},
                    "weight": {"type": "number"},
                },
            },
        },
        "similarity": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
        "top_partition": {
            "type": "object",
            "additionalProperties": False,
            "required": ["membership", "weight"],
            "properties": {"membership": {"type": "string"}, "weight": {"type": "number"}},
        },
    },
}

MONITOR_REPORT = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["meta", "stage", "boundary", "top_partition", "baskets"],
    "properties": {
        "meta": _META,
        "stage": {"enum": [1, 2]},
        "boundary": {
            "type": "object",
            "additionalProperties": False,
            "required": ["q1", "q2", "applied"],
            "properties": {
                "q1": {"type": "number"},
                "q2": {"type": "number"},
                "applied": {"type": "string"},
            },
        },
        "top_partition": {
            "type": "object",
            "additionalProperties": False,
            "required": ["membership", "weight", "basket_ids"],
            "properties": {
                "membership": {"type": "string"},
                "weight": {"type": "number"},
                "basket_ids": {"type": "array", "items": {"type": "string"}},
            },
        },
        "baskets": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["id", "x", "n", "decision"],
                "properties": {
                    "id": {"type": "string"},
                    "x": _COUNT,
                    "n": _COUNT,
                    "prob_exceeds": {"type": "number"},
                    "ess": {"type": "number"},
                    "decision": {
                        "enum": ["pending", "futility-stopped", "efficacious", "not-promising", "continue"]
                    },
                },
            },
        },
    },
}

_OC_ROW = {
    "type": "object",
    "additionalProperties": False,
    "required": ["label", "true_rates", "reject_rate", "fwer", "trialwise_power", "expected_n"],
    "properties": {
        "label": {"type": "string"},
        "true_rates": {"type": "array", "items": {"type": "number"}},
        "reject_rate": {"type": "array", "items": {"type": "number"}},
        "fwer": {"oneOf": [{"type": "number"}, {"type": "null"}]},
        "trialwise_power": {"oneOf": [{"type": "number"}, {"type": "null"}]},
        "expected_n": {"type": "array", "items": {"type": "number"}},
    },
}

SIMULATION_REPORT = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["meta", "basket_ids", "scenarios"],
    "properties": {
        "meta": _META,
        "basket_ids": {"type": "array", "items": {"type": "string"}},
        "scenarios": {"type": "array", "items": _OC_ROW},
    },
}

CALIBRATION_REPORT = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["meta", "lambda", "gamma", "boundary", "achieved_fwer", "achieved_power", "evaluation"],
    "properties": {
        "meta": _META,
        "lambda": {"type": "number"},
        "gamma": {"type": "number"},
        "boundary": {
            "type": "object",
            "additionalProperties": False,
            "required": ["q1", "q2"],
            "properties": {"q1": {"type": "number"}, "q2": {"type": "number"}},
        },
        "achieved_fwer": {"type": "number"},
        "achieved_power": {"type": "number"},
        "evaluation": {
            "type": "object",
            "additionalProperties": False,
            "required": ["seed", "fwer", "trialwise_power"],
            "properties": {
                "seed": {"type": "integer"},
                "fwer": {"type": "number"},
                "trialwise_power": {"type": "number"},
            },
        },
    },
}

SIMON_REPORT = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["meta", "minimax", "optimal", "scenarios"],
    "properties": {
        "meta": _META,
        "minimax": {"$ref": "#/$defs/design"},
        "optimal": {"$ref": "#/$defs/design"},
        "scenarios": {"type": "array", "items": _OC_ROW},
    },
    "$defs": {
        "design": {
            "type": "object",
            "additionalProperties": False,
            "required": ["r1", "n1", "r", "n", "alpha", "power", "en_null", "pet_null"],
            "properties": {
                "r1": _COUNT,
                "n1": _POSITIVE_INT,
                "r": _COUNT,
                "n": _POSITIVE_INT,
                "alpha": {"type": "number"},
                "power": {"type": "number"},
                "en_null": {"type": "number"},
                "pet_null": {"type": "number"},
            },
        }
    },
}
