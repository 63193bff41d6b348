"""JSON schemas for every file the toolkit writes, checked before exit."""

import jsonschema

_prob = {"type": "number", "minimum": 0, "exclusiveMaximum": 1}
_layout = {"type": "array", "items": {"type": "integer", "minimum": 0}}

BACKEND = {
    "type": "object",
    "required": ["name", "num_qubits", "edges", "two_qubit_error"],
    "properties": {
        "name": {"type": "string"},
        "num_qubits": {"type": "integer", "minimum": 1},
        "edges": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "integer", "minimum": 0},
                      "minItems": 2, "maxItems": 2},
        },
        "basis_gates": {"type": "array", "items": {"type": "string"}},
        "single_qubit_error": {
            "type": "object",
            "patternProperties": {
                r"^\d+$": {"oneOf": [_prob, {"type": "object", "additionalProperties": _prob}]}
            },
            "additionalProperties": False,
        },
        "two_qubit_error": {
            "type": "object",
            "patternProperties": {r"^\d+-\d+$": _prob},
            "additionalProperties": False,
        },
        "timestamp": {"type": "string"},
    },
}

SIDECAR = {
    "type": "object",
    "required": ["initial_layout", "final_layout", "swap_count", "depth", "fidelity", "seed"],
    "properties": {
        "initial_layout": _layout,
        "final_layout": _layout,
        "swap_count": {"type": "integer", "minimum": 0},
        "depth": {"type": "integer", "minimum": 0},
        "fidelity": {"type": "number", "minimum": 0, "maximum": 1},
        "log_fidelity": {"type": "number", "maximum": 0},
        "seed": {"type": ["integer", "null"]},
    },
}

_int_map = {"type": "object", "additionalProperties": {"type": "integer", "minimum": 0}}

REPORT = {
    "type": "object",
    "required": ["num_bins", "num_links", "histogram", "fraction_within"],
    "properties": {
        "num_bins": {"type": "integer", "minimum": 1},
        "num_links": {"type": "integer", "minimum": 1},
        "histogram": _int_map,
        "fraction_within": {
            "type": "object",
            "additionalProperties": {"type": "number", "minimum": 0, "maximum": 1},
        },
        "per_link_diff": _int_map,
        "spearman": {"type": ["number", "null"]},
    },
}

MANIFEST = {
    "type": "object",
    "required": ["backend", "gen", "count", "trials", "slack", "num_bins", "mode", "seed",
                 "version", "hashes"],
    "properties": {
        "backend": {"type": "string"},
        "gen": {
            "type": "object",
            "required": ["num_qubits", "depth", "seed", "two_qubit_fraction", "gate_pool"],
        },
        "count": {"type": "integer", "minimum": 1},
        "trials": {"type": "integer", "minimum": 1},
        "slack": {"type": "number", "minimum": 0},
        "num_bins": {"type": "integer", "minimum": 1},
        "mode": {"enum": ["gate-instances", "circuit-presence"]},
        "seed": {"type": "integer"},
        "version": {"type": "string"},
        "hashes": {"type": "object", "additionalProperties": {"type": "string"}},
    },
}

CORPUS_MANIFEST = {
    "type": "object",
    "required": ["spec", "count", "files"],
    "properties": {"files": {"type": "array", "items": {"type": "string"}}},
}


def validate(instance, schema) -> None:
    jsonschema.validate(instance, schema)
