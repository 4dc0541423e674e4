#!/usr/bin/env python3

# --------- Generic ----------- #
__probability_vector__ = {
    "type": "array",
    "minItems": 1,
    "items": {"type": "number", "minimum": 0, "maximum": 1}
}

__positive_integer__ = {
    "type": "integer",
    "minimum": 1
}

# --------- Strategies ----------- #
strategy_kinds = ["greedy", "iid", "round_robin", "constant", "sequence"]

__strategy__ = {
    "type": "object",
    "properties": {
        "kind": {"type": "string", "enum": strategy_kinds},
        "p": __probability_vector__,
        "i": {"type": "integer", "minimum": 0},
        "path": {"type": "string", "minLength": 1},
        "sequence": {"type": "array", "items": {"type": "integer", "minimum": 0}}
    },
    "required": ["kind"],
    "allOf": [
        {"if": {"properties": {"kind": {"const": "iid"}}}, "then": {"required": ["p"]}},
        {"if": {"properties": {"kind": {"const": "constant"}}}, "then": {"required": ["i"]}},
        {"if": {"properties": {"kind": {"const": "sequence"}}},
         "then": {"anyOf": [{"required": ["path"]}, {"required": ["sequence"]}]}}
    ],
    "additionalProperties": False
}

# --------- Weights ----------- #
weight_kinds = ["constant", "power", "geometric", "custom"]

__weights__ = {
    "type": "object",
    "properties": {
        "kind": {"type": "string", "enum": weight_kinds},
        "value": {"type": "number", "minimum": 0},
        "theta": {"type": "number"},
        "r": {"type": "number", "exclusiveMinimum": 0},
        "values": {"type": "array", "minItems": 1, "items": {"type": "number"}}
    },
    "required": ["kind"],
    "allOf": [
        {"if": {"properties": {"kind": {"const": "power"}}}, "then": {"required": ["theta"]}},
        {"if": {"properties": {"kind": {"const": "geometric"}}}, "then": {"required": ["r"]}},
        {"if": {"properties": {"kind": {"const": "custom"}}}, "then": {"required": ["values"]}}
    ],
    "additionalProperties": False
}

# --------- Scenario ----------- #
scenario_schema = {
    "$id": "potluck:scenario",
    "type": "object",
    "properties": {
        "d": {"type": "integer", "minimum": 0, "maximum": 9},
        "rewards": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "string", "minLength": 1}
        },
        "strategy": __strategy__,
        "horizon": __positive_integer__,
        "x0": __probability_vector__,
        "seed": {"type": "integer", "minimum": 0},
        "weights": __weights__,
        "record_stride": __positive_integer__,
        "description": {"type": "string"}
    },
    "required": ["d", "rewards", "strategy", "horizon"],
    "additionalProperties": False
}

# --------- Kronecker custom series ----------- #
series_schema = {
    "$id": "potluck:series",
    "type": "object",
    "properties": {
        "a": {"type": "array", "minItems": 1, "items": {"type": "number"}},
        "b": {"type": "array", "minItems": 1, "items": {"type": "number", "exclusiveMinimum": 0}}
    },
    "required": ["a", "b"],
    "additionalProperties": False
}
