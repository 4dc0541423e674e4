#!/usr/bin/env python3
"""
Scenario documents (JSON) to Scenario objects and back. The normalized document (defaults filled in, the sequence
strategy replaced by its contents) is what gets hashed into the run metadata.

author: Enoc Martínez
institution: Universitat Politècnica de Catalunya (UPC)
email: enoc.martinez@upc.edu
license: MIT
created: 11/10/26
"""
import json
import os

from potluck.common import ValidationError, SchemaValidationError, DocumentFormatError, validate_schema
from potluck.engine import Scenario, WeightSequence, simulate
from potluck.outputs import canonical_hash
from potluck.reward_model import RewardSystem, q_value
from potluck.schemas import scenario_schema
from potluck.simplex import DistPoint
from potluck.strategies import Strategy


def read_json(filename: str) -> dict:
    try:
        with open(filename) as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise DocumentFormatError(f"{filename}: malformed JSON at line {e.lineno} column {e.colno}: {e.msg}")


def read_sequence(filename: str) -> list:
    """
    Reads a choices file, one player index per line (blank lines are ignored)
    """
    sequence = []
    with open(filename) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                sequence.append(int(line))
            except ValueError:
                raise DocumentFormatError(f"{filename}: line {lineno}: expected a player index, got '{line}'")
    return sequence


def strategy_from_dict(doc: dict, base_dir: str = ".") -> Strategy:
    kind = doc["kind"]
    if kind == "iid":
        return Strategy.iid(DistPoint(tuple(doc["p"])))
    elif kind == "constant":
        return Strategy.constant(doc["i"])
    elif kind == "sequence":
        if "sequence" in doc.keys():
            return Strategy.from_sequence(doc["sequence"])
        path = doc["path"]
        if not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        return Strategy.from_sequence(read_sequence(path))
    return Strategy(kind)


def weights_from_dict(doc: dict) -> WeightSequence:
    kind = doc["kind"]
    if kind == "constant":
        return WeightSequence(kind, value=doc.get("value", 1.0))
    elif kind == "power":
        return WeightSequence(kind, theta=doc["theta"])
    elif kind == "geometric":
        return WeightSequence(kind, r=doc["r"])
    return WeightSequence(kind, values=tuple(doc["values"]))


def scenario_from_dict(doc: dict, base_dir: str = ".") -> Scenario:
    """
    Builds a Scenario from a scenario document
    :param doc: scenario document
    :param base_dir: folder used to resolve relative sequence files
    :raises SchemaValidationError: document not valid against the scenario schema
    """
    errors = validate_schema(doc, scenario_schema, [])
    if errors:
        raise SchemaValidationError("\n".join(errors))
    d = doc["d"]
    if len(doc["rewards"]) != d + 1:
        raise ValidationError(f"Expected {d + 1} reward expressions for d={d}, got {len(doc['rewards'])}")
    f = RewardSystem.from_strings(doc["rewards"], d)
    x0 = DistPoint(tuple(doc["x0"])) if "x0" in doc.keys() else None
    weights = weights_from_dict(doc["weights"]) if "weights" in doc.keys() else None
    return Scenario(f, strategy_from_dict(doc["strategy"], base_dir), doc["horizon"], x0=x0,
                    seed=doc.get("seed", 0), weights=weights, record_stride=doc.get("record_stride"))


def normalize(sc: Scenario) -> dict:
    """
    Canonical document of a scenario: every default filled in, sequence files replaced by their contents
    """
    return {
        "d": sc.f.d,
        "rewards": sc.f.sources,
        "strategy": sc.strategy.to_dict(),
        "horizon": sc.horizon,
        "x0": list(sc.start.weights),
        "seed": sc.seed,
        "weights": sc.weights.to_dict() if sc.weights is not None else None,
        "record_stride": sc.stride,
    }


def scenario_hash(sc: Scenario) -> str:
    return canonical_hash(normalize(sc))


def load_scenario(filename: str) -> tuple:
    """
    Loads and validates a scenario file
    :returns: (Scenario, normalized document)
    """
    doc = read_json(filename)
    if not isinstance(doc, dict):
        raise SchemaValidationError(f"{filename}: scenario document should be a JSON object")
    sc = scenario_from_dict(doc, base_dir=os.path.dirname(os.path.abspath(filename)))
    return sc, normalize(sc)


def run_document(doc: dict, force: bool = False) -> dict:
    """
    Runs a normalized scenario document and returns its terminal values. Module-level so that it can be sent to
    worker processes.
    """
    doc = {key: value for key, value in doc.items() if value is not None}
    sc = scenario_from_dict(doc)
    t = simulate(sc, force=force)
    return {
        "A_final": t.a_final,
        "bar_final": list(t.bar_final.weights),
        "q_final": q_value(sc.f, t.bar_final),
        "seed": sc.seed,
        "scenario_hash": scenario_hash(sc),
        "weight_verdict": t.weight_report,
    }
