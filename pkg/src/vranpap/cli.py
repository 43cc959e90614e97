"""Command-line entry point: generate, solve, sweep and check."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from .exact import SolveLimits, SolveStatus, solve_exact
from .greedy import GreedyStatus, solve_caga
from .harness import SweepConfig, emit_report, run_sweep
from .metrics import summarize
from .model import (
    InstanceError,
    check_assignment,
    dumps_instance,
    instance_from_dict,
    solution_pairs_from_dict,
    solution_to_dict,
)
from .topology import GeneratorConfig, derive_instance, generate_ran

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _read_json(path: str, what: str) -> Any:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {what} {path!r}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what} {path!r} is not valid JSON: {exc}") from None


def _write(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text + "\n")
    else:
        Path(path).write_text(text + "\n")


def _load_instance(path: str):
    doc = _read_json(path, "instance")
    try:
        return instance_from_dict(doc)
    except InstanceError as exc:
        raise UsageError(f"instance field {exc}") from None


def _cmd_generate(args) -> int:
    doc = _read_json(args.config, "generator config") if args.config else {}
    if not isinstance(doc, dict):
        raise UsageError("generator config must be a JSON object")
    overrides = {"site_count": args.sites, "rng_seed": args.seed}
    doc.update({k: v for k, v in overrides.items() if v is not None})
    try:
        config = GeneratorConfig.from_dict(doc)
    except ValueError as exc:
        raise UsageError(f"generator config field {exc}") from None
    budget = args.budget if args.budget is not None else min(15, config.site_count)
    if not 1 <= budget <= config.site_count:
        raise UsageError(f"--budget must lie in 1..{config.site_count}")
    graph = generate_ran(config)
    instance = derive_instance(graph, config, budget, args.alpha, args.beta, args.clamp_latency)
    if args.graph_out:
        Path(args.graph_out).write_text(json.dumps(graph.to_dict(), indent=1) + "\n")
    _write(dumps_instance(instance), args.output)
    return EXIT_OK


def _cmd_solve(args) -> int:
    instance = _load_instance(args.instance)
    if args.budget is not None:
        try:
            instance = instance.with_budget(args.budget)
        except (InstanceError, ValueError) as exc:
            raise UsageError(f"--budget: {exc}") from None
    if args.solver == "exact":
        outcome = solve_exact(instance, SolveLimits(args.time_limit, args.node_limit))
        status = outcome.status.value
        extra = {"nodes_explored": outcome.nodes_explored, "lower_bound": outcome.lower_bound, "gap": outcome.gap}
        failed = outcome.status is SolveStatus.INFEASIBLE or outcome.solution is None
        message = "no feasible solution exists" if outcome.status is SolveStatus.INFEASIBLE else status
    else:
        outcome = solve_caga(instance)
        status = outcome.status.value
        extra = {"unassigned": list(outcome.unassigned)}
        failed = outcome.status is GreedyStatus.FAILED
        message = outcome.message
    report = {
        "solver": args.solver,
        "status": status,
        "message": message,
        "solution": solution_to_dict(outcome.solution) if outcome.solution is not None else None,
        "metrics": summarize(instance, outcome).to_dict(),
        **extra,
    }
    _write(json.dumps(report, indent=1), args.output)
    if failed:
        print(message, file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def _cmd_check(args) -> int:
    instance = _load_instance(args.instance)
    doc = _read_json(args.solution, "solution")
    if isinstance(doc, dict) and isinstance(doc.get("solution"), dict):
        doc = doc["solution"]
    try:
        placed, pairs = solution_pairs_from_dict(doc)
    except InstanceError as exc:
        raise UsageError(f"solution field {exc}") from None
    report = check_assignment(instance, placed, pairs)
    _write(json.dumps(report.to_dict(), indent=1), args.output)
    return EXIT_OK if report.ok else EXIT_FAILED


def _cmd_sweep(args) -> int:
    doc = _read_json(args.config, "sweep config") if args.config else {}
    if not isinstance(doc, dict):
        raise UsageError("sweep config must be a JSON object")
    if args.workers is not None:
        doc["workers"] = args.workers
    if args.force_exact:
        doc["force_exact"] = True
    try:
        config = SweepConfig.from_dict(doc)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"sweep config field {exc}") from None
    table = run_sweep(config)
    for path in emit_report(table, args.out_dir, plots=not args.no_plots):
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vranpap", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="random topology -> instance JSON")
    gen.add_argument("--config", help="generator config JSON file")
    gen.add_argument("--sites", type=int, help="number of RRH sites (overrides the config)")
    gen.add_argument("--seed", type=int, help="RNG seed (overrides the config)")
    gen.add_argument("--budget", type=int, help="maximum number of servers (default min(15, sites))")
    gen.add_argument("--alpha", type=float, default=1.0, help="cost weight")
    gen.add_argument("--beta", type=float, default=1.0, help="latency weight")
    gen.add_argument("--clamp-latency", action="store_true", help="count only latency above the target")
    gen.add_argument("--graph-out", help="also write the topology JSON here")
    gen.add_argument("-o", "--output", help="instance file (default stdout)")
    gen.set_defaults(func=_cmd_generate)

    solve = sub.add_parser("solve", help="solve an instance JSON")
    solve.add_argument("instance", help="instance JSON file, or - for stdin")
    solve.add_argument("--solver", choices=("exact", "caga"), default="exact")
    solve.add_argument("--budget", type=int, help="override the instance budget")
    solve.add_argument("--time-limit", type=float, default=0.0, help="exact solver seconds (0 = none)")
    solve.add_argument("--node-limit", type=int, default=0, help="exact solver nodes (0 = none)")
    solve.add_argument("-o", "--output", help="report file (default stdout)")
    solve.set_defaults(func=_cmd_solve)

    sweep = sub.add_parser("sweep", help="run an experiment sweep and write results.csv")
    sweep.add_argument("config", nargs="?", help="sweep config JSON (defaults if omitted)")
    sweep.add_argument("--out-dir", default="results", help="output directory")
    sweep.add_argument("--no-plots", action="store_true", help="write the CSV only")
    sweep.add_argument("--workers", type=int, help="parallel worker processes")
    sweep.add_argument("--force-exact", action="store_true", help="run the exact solver on every cell")
    sweep.set_defaults(func=_cmd_sweep)

    check = sub.add_parser("check", help="feasibility report for a solution")
    check.add_argument("instance", help="instance JSON file")
    check.add_argument("solution", help="solution JSON file (a solve report also works)")
    check.add_argument("-o", "--output", help="report file (default stdout)")
    check.set_defaults(func=_cmd_check)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
