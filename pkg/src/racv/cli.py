"""Command-line frontend: validate, prob, tree, oracle."""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import reach, transform
from .collect import CollectionError, collect
from .geometry import Region
from .model import ModelError, QuerySpec, RacModel, goal_set, load_model, validate
from .oracle import DiscretizationSpec, OracleError, oracle_probability
from .probability import ProbabilityResult, integrate
from .prophecy import ClassificationError

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


class PhaseError(RuntimeError):
    """A pipeline phase aborted; ``phase`` names it."""

    def __init__(self, phase: str, cause: Exception):
        super().__init__(f"{phase}: {cause}")
        self.phase = phase


@dataclass
class QueryResult:
    mode: str
    probability: ProbabilityResult
    region: Region
    reach_nodes: int
    modified_nodes: int
    timings_ms: dict[str, float] = field(default_factory=dict)


@dataclass
class Pipeline:
    """The reach tree and its full modification for one query, shared by both modes."""

    tree: reach.ReachTree
    modified: transform.ModifiedReachTree
    timings_ms: dict[str, float]


def _ms(start: float) -> float:
    return (time.perf_counter() - start) * 1000.0


def build_pipeline(model: RacModel, query: QuerySpec, node_cap: int | None = None,
                   separation: bool = True) -> Pipeline:
    start = time.perf_counter()
    try:
        tree = reach.build_reach_tree(model, query, node_cap or reach.DEFAULT_NODE_CAP)
    except (reach.ReachError, ValueError) as exc:
        raise PhaseError("reachability", exc) from exc
    t_reach = _ms(start)
    start = time.perf_counter()
    try:
        modified = transform.modified_tree(tree, node_cap or transform.DEFAULT_NODE_CAP, separation)
    except (transform.TransformError, ClassificationError, ValueError) as exc:
        raise PhaseError("classification", exc) from exc
    return Pipeline(tree, modified, {"reachability": t_reach, "classification": _ms(start)})


def run_query(model: RacModel, query: QuerySpec, node_cap: int | None = None,
              separation: bool = True) -> list[QueryResult]:
    """Reach tree, transformation, collection and integration for each requested mode."""
    pipe = build_pipeline(model, query, node_cap, separation)
    modes = ["min", "max"] if query.mode == "both" else [query.mode]
    out = []
    for mode in modes:
        start = time.perf_counter()
        try:
            region = collect(pipe.modified, query.goal_locations, mode)
        except CollectionError as exc:
            raise PhaseError("collection", exc) from exc
        t_collect = _ms(start)
        start = time.perf_counter()
        prob = integrate(region, model.distribution_list(), query.samples, query.seed)
        timings = dict(pipe.timings_ms, collection=t_collect, integration=_ms(start))
        out.append(QueryResult(mode, prob, region, len(pipe.tree), len(pipe.modified.nodes), timings))
    return out


def result_document(path: Path, query: QuerySpec, results: Sequence[QueryResult],
                    names: Sequence[str]) -> dict:
    return {
        "model": {"path": str(path), "sha256": hashlib.sha256(path.read_bytes()).hexdigest()},
        "query": {
            "goals": sorted(query.goal_locations),
            "tmax": query.time_bound,
            "jmax": query.jump_bound,
            "mode": query.mode,
            "samples": query.samples,
            "seed": query.seed,
        },
        "results": [
            {
                "mode": r.mode,
                "probability": r.probability.value,
                "stat_error": r.probability.stat_error,
                "method": r.probability.method,
                "samples": r.probability.samples_used,
                "seed": query.seed,
                "region": r.region.describe(names),
                "tree": {"reach_nodes": r.reach_nodes, "modified_nodes": r.modified_nodes},
                "timings_ms": {k: round(v, 3) for k, v in r.timings_ms.items()},
            }
            for r in results
        ],
    }


# -- argument handling ---------------------------------------------------


def _query_flags(p: argparse.ArgumentParser, mode_choices: Sequence[str]) -> None:
    p.add_argument("--model", required=True, help="model file (JSON)")
    p.add_argument("--goal", action="append", required=True, help="goal location, repeatable")
    p.add_argument("--tmax", type=float, required=True, help="time bound")
    p.add_argument("--jmax", type=int, required=True, help="jump bound")
    p.add_argument("--mode", choices=mode_choices, default="min")
    p.add_argument("--samples", type=int, default=100_000, help="Monte Carlo samples for d_R >= 2")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=["json", "text"], default="json")
    p.add_argument("--node-cap", type=int, default=None)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="racv", description="Prophetic reachability for rectangular automata "
                                                               "with random clocks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check the well-formedness conditions of a model")
    p.add_argument("--model", required=True)
    p.add_argument("--format", choices=["json", "text"], default="text")

    p = sub.add_parser("prob", help="minimum and/or maximum reachability probability")
    _query_flags(p, ["min", "max", "both"])
    p.add_argument("--no-separation", action="store_true", help="split instead of separating competing events")

    p = sub.add_parser("tree", help="export a tree stage as DOT")
    _query_flags(p, ["min", "max", "both"])
    p.add_argument("--stage", choices=["raw", "initial", "full"], default="full")
    p.add_argument("--no-separation", action="store_true")

    p = sub.add_parser("oracle", help="brute-force reference probability on a prophecy grid")
    _query_flags(p, ["min", "max", "both"])
    p.add_argument("--time-steps", type=int, default=20, help="time grid points per unit")
    p.add_argument("--rate-samples", type=int, default=3, help="rate samples per flow dimension")
    p.add_argument("--grid", type=int, default=200, help="prophecy grid cells per dimension")
    p.add_argument("--state-cap", type=int, default=200_000)
    return parser


def _load(path: str) -> tuple[Path, RacModel]:
    p = Path(path)
    return p, load_model(p)


def _query(args: argparse.Namespace, model: RacModel) -> QuerySpec:
    return QuerySpec(goal_set(model, args.goal), args.tmax, args.jmax, args.mode, args.samples, args.seed)


def _emit_text(doc: dict) -> str:
    lines = [f"model {doc['model']['path']}",
             f"goals {', '.join(doc['query']['goals'])}  tmax {doc['query']['tmax']}  jmax {doc['query']['jmax']}"]
    for r in doc["results"]:
        err = f" +/- {r['stat_error']:.2g}" if r["method"] == "monte_carlo" else ""
        lines.append(f"{r['mode']}: {r['probability']:.6g}{err} ({r['method']})")
        lines.append(f"  region {json.dumps(r['region'])}")
        lines.append(f"  |R| = {r['tree']['reach_nodes']}  |T*| = {r['tree']['modified_nodes']}")
        lines.append("  " + "  ".join(f"{k} {v:.1f} ms" for k, v in r["timings_ms"].items()))
    return "\n".join(lines) + "\n"


def cmd_validate(args: argparse.Namespace) -> int:
    _, model = _load(args.model)
    report = validate(model)
    if args.format == "json":
        print(json.dumps({"ok": report.ok, "findings": report.findings, "notes": report.notes}, indent=2))
    else:
        print("ok" if report.ok else "invalid")
        for f in report.findings:
            print(f"  {f}")
        for n in report.notes:
            print(f"  note: {n}")
    return EXIT_OK if report.ok else EXIT_FAIL


def _checked(model: RacModel) -> None:
    report = validate(model)
    if not report.ok:
        raise ModelError("model is not valid: " + "; ".join(report.findings))


def cmd_prob(args: argparse.Namespace) -> int:
    path, model = _load(args.model)
    _checked(model)
    query = _query(args, model)
    results = run_query(model, query, args.node_cap, not args.no_separation)
    doc = result_document(path, query, results, model.variables.random_names)
    sys.stdout.write(json.dumps(doc, indent=2) + "\n" if args.format == "json" else _emit_text(doc))
    return EXIT_OK


def cmd_tree(args: argparse.Namespace) -> int:
    _, model = _load(args.model)
    _checked(model)
    query = _query(args, model)
    try:
        tree = reach.build_reach_tree(model, query, args.node_cap or reach.DEFAULT_NODE_CAP)
    except reach.ReachError as exc:
        raise PhaseError("reachability", exc) from exc
    if args.stage == "raw":
        sys.stdout.write(reach.to_dot(tree))
        return EXIT_OK
    modified = transform.initial_transform(tree)
    if args.stage == "full":
        try:
            transform.fully_modify(modified, args.node_cap or transform.DEFAULT_NODE_CAP, not args.no_separation)
        except (transform.TransformError, ClassificationError) as exc:
            raise PhaseError("classification", exc) from exc
    sys.stdout.write(transform.to_dot(modified))
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    path, model = _load(args.model)
    _checked(model)
    query = _query(args, model)
    disc = DiscretizationSpec(args.time_steps, args.rate_samples, args.grid, args.state_cap)
    modes = ["min", "max"] if query.mode == "both" else [query.mode]
    rows = []
    for mode in modes:
        start = time.perf_counter()
        try:
            prob = oracle_probability(model, query.goal_locations, query.time_bound, query.jump_bound, mode, disc)
        except OracleError as exc:
            raise PhaseError("oracle", exc) from exc
        rows.append({"mode": mode, "probability": prob.value, "method": prob.method,
                     "cells": prob.samples_used, "timings_ms": {"oracle": round(_ms(start), 3)}})
    doc = {"model": {"path": str(path), "sha256": hashlib.sha256(path.read_bytes()).hexdigest()},
           "query": {"goals": sorted(query.goal_locations), "tmax": query.time_bound, "jmax": query.jump_bound,
                     "mode": query.mode},
           "discretization": {"time_steps_per_unit": disc.time_steps_per_unit,
                              "rate_samples_per_dim": disc.rate_samples_per_dim,
                              "prophecy_grid_per_dim": disc.prophecy_grid_per_dim, "state_cap": disc.state_cap},
           "results": rows}
    if args.format == "json":
        print(json.dumps(doc, indent=2))
    else:
        for r in rows:
            print(f"{r['mode']}: {r['probability']:.6g} ({r['cells']} cells)")
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "prob": cmd_prob, "tree": cmd_tree, "oracle": cmd_oracle}


def main(argv: Sequence[str] | None = None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (OSError, ModelError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PhaseError as exc:
        print(f"error in phase {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
