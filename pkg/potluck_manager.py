#!/usr/bin/env python3
"""
Command line front-end: runs scenario files, computes Q*, checks potentials, demonstrates the Kronecker-type lemma and
sweeps a scenario parameter over a grid.

    potluck_manager.py run scenario.json -o trajectory.csv [--force]
    potluck_manager.py qstar scenario.json [--resolution 0.005] [--refine 3]
    potluck_manager.py check-potential scenario.json [--nodes 1001] [--h 1e-5] [--potential "2*u1-1.5*u1^2"]
    potluck_manager.py kronecker --preset alternating|harmonic|custom [--series series.json] [-n 100000]
    potluck_manager.py sweep scenario.json --param strategy.p --grid 0:1:21 -o sweep/

One-shot answers are printed as JSON to stdout. Errors are printed to stderr as {"error": true, "code": ...,
"message": ...}. Exit codes: 0 success, 1 runtime or parse error, 2 validation rejection.

author: Enoc Martínez
institution: Universitat Politècnica de Catalunya (UPC)
email: enoc.martinez@upc.edu
license: MIT
created: 12/10/26
"""
import json
import os
import sys
import time
from argparse import ArgumentParser

import jsonschema
import numpy as np
import pandas as pd

from potluck.analysis import SeriesPair, abel_identity_residual, kronecker_check
from potluck.common import setup_log, load_config, error_code, ValidationError, ConfigurationError, \
    WeightValidationError, ExprSyntaxError, validate_schema, SchemaValidationError
from potluck.engine import simulate
from potluck.outputs import RunMetadata, write_dataframe, dumps, canonical_hash
from potluck.parallelism import multiprocess
from potluck.potential import build_potential_1d, expression_potential, grad_condition_residual, \
    check_integrability
from potluck.reward_model import q_star, q_value
from potluck.scenarios import load_scenario, read_json, run_document
from potluck.schemas import series_schema
from potluck.simplex import DistPoint
from potluck.strategies import GENERATOR_NAME

sweep_params = ["strategy.p", "strategy.i", "weights.theta", "weights.r", "horizon"]

validation_errors = (ValidationError, ConfigurationError, WeightValidationError, ExprSyntaxError,
                     jsonschema.ValidationError)


def emit(doc: dict):
    print(dumps(doc))


def exit_code(e: Exception) -> int:
    return 2 if isinstance(e, validation_errors) else 1


def error_document(e: Exception) -> dict:
    doc = {"error": True, "code": error_code(e), "message": str(e)}
    if isinstance(e, WeightValidationError):
        doc["report"] = e.report
    return doc


# ---------------- Commands ---------------- #
def cmd_run(args, conf, log) -> int:
    sc, doc = load_scenario(args.scenario)
    t = time.time()
    traj = simulate(sc, force=args.force, log=log)
    wall_time = time.time() - t

    traj.to_csv(args.output)
    metadata = RunMetadata(canonical_hash(doc), sc.seed, GENERATOR_NAME, wall_time, "run",
                           weight_verdict=traj.weight_report)
    sidecar = metadata.write(args.output)
    log.info(f"trajectory written to {args.output} ({len(traj)} rows, {wall_time:.02f} s)")
    emit({**traj.terminal(), "output": args.output, "metadata": sidecar})
    return 0


def cmd_qstar(args, conf, log) -> int:
    sc, doc = load_scenario(args.scenario)
    resolution = args.resolution if args.resolution is not None else conf["qstar"]["resolution"]
    refine = args.refine if args.refine is not None else conf["qstar"]["refine"]
    t = time.time()
    result = q_star(sc.f, resolution=resolution, refine_iters=refine, log=log)
    metadata = RunMetadata(canonical_hash(doc), None, None, time.time() - t, "qstar")
    emit({
        "q_star": result.value,
        "argmax": list(result.argmax.weights),
        "resolution": resolution,
        "refine": refine,
        "grid_resolution": result.grid_resolution,
        "final_step": result.final_step,
        "points_evaluated": result.points_evaluated,
        "metadata": metadata.to_dict(),
    })
    return 0


def check_metadata(doc: dict, args, t: float) -> dict:
    """Metadata of a check-potential answer, the hash covers the scenario and the optional closed-form potential"""
    return RunMetadata(canonical_hash({"scenario": doc, "potential": args.potential}), args.seed, GENERATOR_NAME,
                       time.time() - t, "check-potential").to_dict()


def cmd_check_potential(args, conf, log) -> int:
    sc, doc = load_scenario(args.scenario)
    t = time.time()
    f = sc.f
    pconf = conf["potential"]
    h = args.h if args.h is not None else pconf["h"]
    threshold = args.threshold if args.threshold is not None else pconf["threshold"]
    samples = args.samples if args.samples is not None else pconf["samples"]
    if f.d < 1:
        raise ConfigurationError("a single player has no reward-difference field to check")

    if f.d >= 2 and not args.potential:
        report = check_integrability(f, samples=samples, h=h, seed=args.seed)
        ok = report.max_asymmetry <= threshold
        emit({"d": f.d, "check": "integrability", **report.to_dict(), "threshold": threshold, "ok": ok,
              "metadata": check_metadata(doc, args, t)})
        return 0 if ok else 2

    if args.potential:
        phi = expression_potential(args.potential, f.d)
    else:
        phi = build_potential_1d(f, nodes=args.nodes if args.nodes is not None else pconf["nodes"], log=log)

    rng = np.random.default_rng(args.seed)
    points = rng.dirichlet(np.ones(f.d + 1), size=samples)[:, 1:]
    worst = 0.0
    for v in points:
        worst = max(worst, float(np.max(np.abs(grad_condition_residual(f, phi, v, h)))))
    ok = worst <= threshold
    emit({"d": f.d, "check": "gradient", "potential": phi.kind, "samples": samples, "h": h,
          "max_residual": worst, "threshold": threshold, "ok": ok, "metadata": check_metadata(doc, args, t)})
    return 0 if ok else 2


def cmd_kronecker(args, conf, log) -> int:
    kconf = conf["kronecker"]
    length = args.length if args.length is not None else kconf["length"]
    eps = args.eps if args.eps is not None else kconf["eps"]
    if args.preset == "custom":
        if not args.series:
            raise ConfigurationError("custom preset needs a --series file")
        doc = read_json(args.series)
        errors = validate_schema(doc, series_schema, [])
        if errors:
            raise SchemaValidationError("\n".join(errors))
        s = SeriesPair(doc["a"], doc["b"])
    else:
        s = SeriesPair.preset(args.preset, length)
        doc = {"preset": args.preset, "length": length}
    t = time.time()
    diagnostic = kronecker_check(s, eps=eps)
    residual = abel_identity_residual(s)
    metadata = RunMetadata(canonical_hash({"series": doc, "eps": eps}), None, None, time.time() - t, "kronecker")
    emit({"preset": args.preset, "abel_residual": residual, **diagnostic.to_dict(), "metadata": metadata.to_dict()})
    return 0


def parse_grid(grid: str) -> np.ndarray:
    try:
        start, stop, count = grid.split(":")
        start, stop, count = float(start), float(stop), int(count)
    except ValueError:
        raise ValidationError(f"grid should be start:stop:count, got '{grid}'")
    if count < 1:
        raise ValidationError(f"grid count should be >= 1, got {count}")
    return np.linspace(start, stop, count)


def apply_param(doc: dict, param: str, value: float) -> dict:
    """Returns a copy of the normalized scenario document with the swept parameter set to value"""
    doc = json.loads(json.dumps(doc))
    if param == "strategy.p":
        if doc["d"] != 1:
            raise ValidationError(f"strategy.p sweeps are defined for d=1, got d={doc['d']}")
        doc["strategy"] = {"kind": "iid", "p": [1.0 - value, value]}
    elif param == "strategy.i":
        doc["strategy"] = {"kind": "constant", "i": int(round(value))}
    elif param == "weights.theta":
        doc["weights"] = {"kind": "power", "theta": value}
    elif param == "weights.r":
        doc["weights"] = {"kind": "geometric", "r": value}
    elif param == "horizon":
        doc["horizon"] = int(round(value))
        doc["record_stride"] = None  # automatic for the new horizon
    else:
        raise ValidationError(f"unknown sweep parameter '{param}', expected one of {sweep_params}")
    return doc


def sweep_verdict(leaf: str, grid: np.ndarray, results: list) -> dict | None:
    """Summary of the weight validation of every swept run, None for unweighted sweeps"""
    reports = [r["weight_verdict"] for r in results]
    if all(r is None for r in reports):
        return None
    rows = [{leaf: float(value), "verdict": r["verdict"], "failed": r["failed"]}
            for value, r in zip(grid, reports) if r is not None]
    return {"verdict": "pass" if all(r["verdict"] == "pass" for r in rows) else "fail", "rows": rows}


def cmd_sweep(args, conf, log) -> int:
    sc, doc = load_scenario(args.scenario)
    grid = parse_grid(args.grid)
    docs = []
    for index, value in enumerate(grid):
        d = apply_param(doc, args.param, float(value))
        d["seed"] = sc.seed + index
        docs.append(d)

    threads = conf["sweep"]["threads"]
    log.info(f"sweeping {args.param} over {len(grid)} values with {threads} workers")
    t = time.time()
    results = multiprocess([(d, args.force) for d in docs], run_document, max_workers=threads,
                           text=f"sweep {args.param}")
    wall_time = time.time() - t

    leaf = args.param.split(".")[-1]
    if args.param == "strategy.p":
        df = pd.DataFrame({
            "p": grid,
            "A_final": [r["A_final"] for r in results],
            "q(p)": [q_value(sc.f, DistPoint((1.0 - x, x))) for x in grid],
        })
    else:
        df = pd.DataFrame({
            leaf: grid,
            "A_final": [r["A_final"] for r in results],
            "q(bar_final)": [r["q_final"] for r in results],
        })

    os.makedirs(args.output, exist_ok=True)
    filename = os.path.join(args.output, "sweep.csv")
    write_dataframe(df, filename)
    metadata = RunMetadata(canonical_hash({"scenario": doc, "param": args.param, "grid": grid.tolist()}), sc.seed,
                           GENERATOR_NAME, wall_time, "sweep", weight_verdict=sweep_verdict(leaf, grid, results))
    sidecar = metadata.write(filename)
    best = int(np.nanargmax(df["A_final"].to_numpy()))
    emit({"rows": len(df), "best": {leaf: float(grid[best]), "A_final": float(df["A_final"][best])},
          "output": filename, "metadata": sidecar})
    return 0


# ---------------- Entry point ---------------- #
def build_parser() -> ArgumentParser:
    argparser = ArgumentParser(description="Reward-sharing game simulator")
    argparser.add_argument("-c", "--config", help="yaml configuration file", type=str, default="potluck.yaml")
    subparsers = argparser.add_subparsers(dest="command", required=True)

    p = subparsers.add_parser("run", help="Simulates a scenario and writes its trajectory CSV")
    p.add_argument("scenario", type=str, help="scenario JSON file")
    p.add_argument("-o", "--output", type=str, default="trajectory.csv", help="trajectory CSV")
    p.add_argument("--force", action="store_true", help="run even if the weight sequence fails validation")

    p = subparsers.add_parser("qstar", help="Maximum of the mean payoff q over the simplex")
    p.add_argument("scenario", type=str, help="scenario JSON file")
    p.add_argument("--resolution", type=float, default=None, help="grid step")
    p.add_argument("--refine", type=int, default=None, help="local refinement rounds")

    p = subparsers.add_parser("check-potential", help="Checks the gradient condition of the reward field")
    p.add_argument("scenario", type=str, help="scenario JSON file")
    p.add_argument("--nodes", type=int, default=None, help="nodes of the tabulated potential (d=1)")
    p.add_argument("--h", type=float, default=None, help="finite difference step")
    p.add_argument("--threshold", type=float, default=None, help="maximum accepted residual")
    p.add_argument("--samples", type=int, default=None, help="number of random points")
    p.add_argument("--seed", type=int, default=0, help="seed of the sample points")
    p.add_argument("--potential", type=str, default="", help="closed-form potential, expression of u1..ud")

    p = subparsers.add_parser("kronecker", help="Abel identity and Kronecker lemma diagnostics")
    p.add_argument("--preset", choices=["alternating", "harmonic", "custom"], default="alternating")
    p.add_argument("--series", type=str, default="", help="JSON file with 'a' and 'b' (custom preset)")
    p.add_argument("-n", "--length", type=int, default=None, help="series length")
    p.add_argument("--eps", type=float, default=None, help="tolerance on the tail minimum")

    p = subparsers.add_parser("sweep", help="Runs a scenario over a grid of parameter values")
    p.add_argument("scenario", type=str, help="scenario JSON file")
    p.add_argument("--param", type=str, required=True, help=f"one of {', '.join(sweep_params)}")
    p.add_argument("--grid", type=str, default="0:1:21", help="start:stop:count")
    p.add_argument("-o", "--output", type=str, default="sweep", help="output folder")
    p.add_argument("--force", action="store_true", help="run even if the weight sequence fails validation")
    return argparser


commands = {
    "run": cmd_run,
    "qstar": cmd_qstar,
    "check-potential": cmd_check_potential,
    "kronecker": cmd_kronecker,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        conf = load_config(args.config)
        log = setup_log("potluck", path=conf["log"]["path"], log_level=conf["log"]["level"])
        return commands[args.command](args, conf, log)
    except Exception as e:
        print(json.dumps(error_document(e)), file=sys.stderr)
        return exit_code(e)


if __name__ == "__main__":
    sys.exit(main())
