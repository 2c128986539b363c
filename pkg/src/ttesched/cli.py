"""Command line entry point.

Subcommands: generate, route, assign, schedule, validate, analyze, bench,
export-gantt. Exit codes are stable: 0 ok, 1 usage error, 2 infeasible
instance, 3 search budget exhausted without a solution, 4 I/O or document
error. Every output file embeds the hash of the run manifest (the
subcommand and its options), so re-running the same manifest reproduces
identical bytes.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__, analysis, generator, icap, io, pipeline, routing, scheduler
from .errors import (InfeasibleInstanceError, InfeasiblePorosityError,
                     InfeasibleWindowError, InternalConsistencyError,
                     InvalidConfigError, InvalidInputError, ParseError,
                     RoutingError, ScheduleError, SemanticError, TtError,
                     UnboundedBlockingError, UnreachablePairError)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_BUDGET = 3
EXIT_IO = 4

_INFEASIBLE_ERRORS = (InfeasibleInstanceError, InfeasiblePorosityError,
                      InfeasibleWindowError, InvalidConfigError,
                      InvalidInputError, RoutingError, SemanticError,
                      UnboundedBlockingError, UnreachablePairError)
_IO_ERRORS = (ParseError, InternalConsistencyError, OSError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _manifest(command: str, options: dict) -> tuple[dict, str]:
    manifest = {"command": command, "options": options, "version": __version__}
    digest = hashlib.sha256(io.canonical_json(manifest)).hexdigest()[:16]
    return manifest, digest


def _read(path: str) -> bytes:
    return Path(path).read_bytes()


def _budget(args) -> scheduler.SolveBudget:
    return scheduler.SolveBudget(
        max_starts=args.starts,
        backtrack_limit=args.backtrack_limit,
        max_placements=args.max_placements,
        wall_clock_s=args.wall_clock_s)


def _gap_policy(args) -> scheduler.GapPolicy:
    return scheduler.GapPolicy(block_ns=args.block_ns, gap_ns=args.gap_ns)


def _add_solver_flags(p):
    p.add_argument("--seed", type=int, default=0, help="search seed")
    p.add_argument("--starts", type=int, default=16,
                   help="multi-start attempts (iteration budget)")
    p.add_argument("--backtrack-limit", type=int, default=64,
                   help="evictions allowed per start")
    p.add_argument("--max-placements", type=int, default=None,
                   help="hard cap on placement operations")
    p.add_argument("--wall-clock-s", type=float, default=None,
                   help="approximate wall clock cap in seconds")
    p.add_argument("--objective", choices=("makespan", "porosity"),
                   default="makespan")
    p.add_argument("--block-ns", type=int, default=None,
                   help="porosity TT block length (default ic/8)")
    p.add_argument("--gap-ns", type=int, default=None,
                   help="porosity reserved gap length (default ic/8)")
    p.add_argument("--assign-mode", choices=("auto", "exact", "heuristic"),
                   default="auto")
    p.add_argument("--assign-budget", type=int, default=icap.DEFAULT_NODE_BUDGET,
                   help="branch-and-bound node budget for the cycle assignment")


def build_parser() -> _Parser:
    parser = _Parser(prog="ttesched",
                     description="Schedule synthesis for Time-Triggered "
                                 "traffic on TTEthernet networks")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    g = sub.add_parser("generate", help="emit benchmark instance files")
    g.add_argument("--kind", default="mixed",
                   choices=("mixed",) + generator.TOPOLOGY_KINDS)
    g.add_argument("--endpoints", type=int, default=20)
    g.add_argument("--messages", type=int, default=20)
    g.add_argument("--bandwidth-bps", type=int, default=1_000_000_000)
    g.add_argument("--virtual-links", type=int, default=0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--count", type=int, default=1,
                   help="instances to generate (a bench manifest is written "
                        "alongside when more than one)")
    g.add_argument("-o", "--output", required=True,
                   help="output file (count=1) or directory")

    r = sub.add_parser("route", help="print per-message routes")
    r.add_argument("instance")
    r.add_argument("--json", action="store_true", dest="as_json")

    a = sub.add_parser("assign", help="solve the integration cycle assignment")
    a.add_argument("instance")
    a.add_argument("--mode", choices=("auto", "exact", "heuristic"), default="auto")
    a.add_argument("--budget", type=int, default=icap.DEFAULT_NODE_BUDGET)
    a.add_argument("--json", action="store_true", dest="as_json")

    s = sub.add_parser("schedule", help="run the full pipeline and write a schedule")
    s.add_argument("instance")
    s.add_argument("-o", "--output", required=True, help="schedule file")
    s.add_argument("--report", default=None, help="also write an analysis report")
    _add_solver_flags(s)

    v = sub.add_parser("validate", help="check a schedule against its instance")
    v.add_argument("instance")
    v.add_argument("schedule")

    an = sub.add_parser("analyze", help="validate plus metrics and RC delay bounds")
    an.add_argument("instance")
    an.add_argument("schedule")
    an.add_argument("-o", "--output", default=None, help="report file")

    b = sub.add_parser("bench", help="run a manifest of instances and tabulate")
    b.add_argument("manifest")
    b.add_argument("-o", "--output", default=None, help="machine-readable results")
    b.add_argument("--workers", type=int,
                   default=int(os.environ.get("TTESCHED_WORKERS", "0")) or None,
                   help="parallel workers (default: number of cores, "
                        "TTESCHED_WORKERS overrides)")
    _add_solver_flags(b)

    e = sub.add_parser("export-gantt", help="write a plottable link timeline")
    e.add_argument("instance")
    e.add_argument("schedule")
    e.add_argument("-o", "--output", required=True)
    return parser


def cmd_generate(args) -> int:
    base = dict(topology=args.kind, endpoints=args.endpoints,
                messages=args.messages, bandwidth_bps=args.bandwidth_bps,
                virtual_links=args.virtual_links)
    if args.count == 1:
        config = generator.GeneratorConfig(seed=args.seed, **base)
        Path(args.output).write_bytes(io.serialize_instance(_generate_one(config)))
        print(f"wrote {args.output}")
        return EXIT_OK
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(args.count):
        config = generator.GeneratorConfig(seed=args.seed + i, **base)
        path = out_dir / f"instance_{args.seed + i:04d}.json"
        path.write_bytes(io.serialize_instance(_generate_one(config)))
        paths.append(path.name)
    manifest_doc = {"schema": io.BENCH_SCHEMA, "instances": paths}
    (out_dir / "manifest.json").write_bytes(io.canonical_json(manifest_doc))
    print(f"wrote {args.count} instances and manifest.json to {out_dir}")
    return EXIT_OK


def _generate_one(config: generator.GeneratorConfig) -> io.InstanceFile:
    topology = generator.generate_topology(config)
    messages = generator.generate_messages(topology, config)
    vls = generator.generate_virtual_links(topology, config)
    return io.InstanceFile(
        topology=topology, messages=messages,
        config=io.ConfigSection(integration_cycle_ns=config.resolved_ic(),
                                switch_delay_ns=config.switch_delay_ns,
                                sync_window_ns=None),
        virtual_links=vls)


def cmd_route(args) -> int:
    instance = io.parse_instance(_read(args.instance))
    table = routing.all_pairs_shortest_paths(instance.topology)
    trees = routing.route_all(instance.messages, table)
    if args.as_json:
        doc = {str(mid): {str(recv): [list(l.key) for l in path]
                          for recv, path in sorted(tree.paths.items())}
               for mid, tree in sorted(trees.items())}
        sys.stdout.write(io.canonical_json(doc).decode())
        return EXIT_OK
    for mid in sorted(trees):
        tree = trees[mid]
        for recv in sorted(tree.paths):
            hops = " ".join(str(l) for l in tree.paths[recv])
            print(f"message {mid} -> {recv}: {hops}")
    return EXIT_OK


def cmd_assign(args) -> int:
    instance = io.parse_instance(_read(args.instance))
    config = instance.resolve()
    table = routing.all_pairs_shortest_paths(instance.topology)
    trees = routing.route_all(instance.messages, table)
    problem = icap.build_assignment_problem(instance.messages, trees, config)
    assignment = icap.solve_assignment(problem, mode=args.mode,
                                       node_budget=args.budget)
    if args.as_json:
        doc = {"first_cycle": {str(k): v for k, v in
                               sorted(assignment.first_cycle.items())},
               "max_load_ns": assignment.max_load_ns,
               "optimal": assignment.optimal, "mode": assignment.mode,
               "lower_bound_ns": icap.lower_bound(assignment, config)}
        sys.stdout.write(io.canonical_json(doc).decode())
        return EXIT_OK
    for mid in sorted(assignment.first_cycle):
        print(f"message {mid}: cycle {assignment.first_cycle[mid]}")
    print(f"max load: {assignment.max_load_ns} ns "
          f"({'optimal' if assignment.optimal else 'incumbent'}, {assignment.mode})")
    print(f"lower bound: {icap.lower_bound(assignment, config)} ns")
    return EXIT_OK


def _report_doc(result: pipeline.PipelineResult, manifest, digest) -> dict:
    schedule = result.schedule
    doc = {
        "schema": io.REPORT_SCHEMA,
        "manifest": manifest,
        "manifest_hash": digest,
        "objective": schedule.objective,
        "config": {
            "integration_cycle_ns": result.config.integration_cycle_ns,
            "cluster_cycle_ns": result.config.cluster_cycle_ns,
            "switch_delay_ns": result.config.switch_delay_ns,
            "sync_window_ns": result.config.sync_window_ns,
        },
        "metrics": {
            "message_instances": len(result.rcpsp.activities),
            "makespan_ns": schedule.makespan_ns,
            "critical_gap_ns": schedule.critical_gap_ns,
            "lower_bound_ns": schedule.lower_bound_ns,
            "lower_bound_optimal": schedule.lower_bound_optimal,
            "gap_to_lower_bound_pct": round(100.0 * result.gap_to_lower_bound, 3),
            "assignment_max_load_ns": result.assignment.max_load_ns,
        },
        "validation": {
            "passed": result.validation.passed,
            "checks": result.validation.checks,
            "violations": [asdict(v) for v in result.validation.violations],
        } if result.validation is not None else None,
    }
    if schedule.min_preserved_gap_ns is not None:
        doc["metrics"]["min_preserved_gap_ns"] = schedule.min_preserved_gap_ns
    if result.rc_report is not None:
        doc["rc_delay"] = {
            "label": result.rc_report.label,
            "virtual_links": [{
                "id": entry.virtual_link,
                "bound_ns": entry.bound_ns,
                "per_link": [asdict(row) for row in entry.rows],
            } for entry in result.rc_report.entries],
        }
    return doc


def cmd_schedule(args) -> int:
    manifest, digest = _manifest("schedule", {
        "instance": args.instance, "output": args.output,
        "objective": args.objective, "seed": args.seed, "starts": args.starts,
        "backtrack_limit": args.backtrack_limit,
        "max_placements": args.max_placements,
        "block_ns": args.block_ns, "gap_ns": args.gap_ns,
        "assign_mode": args.assign_mode, "assign_budget": args.assign_budget})
    instance = io.parse_instance(_read(args.instance))
    result = pipeline.run_pipeline(
        instance, objective=args.objective, seed=args.seed,
        budget=_budget(args), gap_policy=_gap_policy(args),
        assign_mode=args.assign_mode, assign_node_budget=args.assign_budget)
    Path(args.output).write_bytes(
        io.write_schedule(result.schedule, instance, manifest_hash=digest))
    if args.report:
        Path(args.report).write_bytes(
            io.canonical_json(_report_doc(result, manifest, digest)))
    s = result.schedule
    print(f"makespan: {s.makespan_ns} ns")
    print(f"critical gap: {s.critical_gap_ns} ns")
    print(f"lower bound: {s.lower_bound_ns} ns "
          f"({'optimal' if s.lower_bound_optimal else 'incumbent'})")
    print(f"gap to lower bound: {100.0 * result.gap_to_lower_bound:.2f}%")
    if not result.validation.passed:
        print("validation: FAILED")
        return EXIT_INFEASIBLE
    print("validation: passed")
    return EXIT_OK


def cmd_validate(args) -> int:
    instance = io.parse_instance(_read(args.instance))
    schedule = io.parse_schedule(_read(args.schedule), instance)
    config = instance.resolve()
    table = routing.all_pairs_shortest_paths(instance.topology)
    trees = routing.route_all(instance.messages, table)
    report = analysis.validate(schedule, instance, trees, config)
    for name, ok in report.checks.items():
        print(f"{name}: {'pass' if ok else 'FAIL'}")
    for v in report.violations:
        print(f"  {v.constraint}: {v.detail}")
    return EXIT_OK if report.passed else EXIT_INFEASIBLE


def cmd_analyze(args) -> int:
    manifest, digest = _manifest("analyze", {
        "instance": args.instance, "schedule": args.schedule,
        "output": args.output})
    instance = io.parse_instance(_read(args.instance))
    schedule = io.parse_schedule(_read(args.schedule), instance)
    config = instance.resolve()
    table = routing.all_pairs_shortest_paths(instance.topology)
    trees = routing.route_all(instance.messages, table)
    report = analysis.validate(schedule, instance, trees, config)
    gap = analysis.critical_gap(schedule, config, instance.topology)
    doc = {
        "schema": io.REPORT_SCHEMA,
        "manifest": manifest,
        "manifest_hash": digest,
        "metrics": {
            "makespan_ns": scheduler.makespan(schedule),
            "critical_gap_ns": gap,
        },
        "validation": {
            "passed": report.passed,
            "checks": report.checks,
            "violations": [asdict(v) for v in report.violations],
        },
    }
    if instance.virtual_links:
        resolved = analysis.resolve_virtual_links(instance.virtual_links, table)
        rc = analysis.rc_worst_case_delay(schedule, resolved, config)
        doc["rc_delay"] = {
            "label": rc.label,
            "virtual_links": [{
                "id": e.virtual_link, "bound_ns": e.bound_ns,
                "per_link": [asdict(r) for r in e.rows],
            } for e in rc.entries],
        }
    payload = io.canonical_json(doc)
    if args.output:
        Path(args.output).write_bytes(payload)
    else:
        sys.stdout.write(payload.decode())
    return EXIT_OK if report.passed else EXIT_INFEASIBLE


def _bench_one(task):
    path, objective, options = task
    instance = io.parse_instance(Path(path).read_bytes())
    result = pipeline.run_pipeline(
        instance, objective=objective, seed=options["seed"],
        budget=scheduler.SolveBudget(
            max_starts=options["starts"],
            backtrack_limit=options["backtrack_limit"],
            max_placements=options["max_placements"],
            wall_clock_s=options["wall_clock_s"]),
        gap_policy=scheduler.GapPolicy(block_ns=options["block_ns"],
                                       gap_ns=options["gap_ns"]),
        assign_mode=options["assign_mode"],
        assign_node_budget=options["assign_budget"])
    row = {
        "instance": str(path), "objective": objective,
        "message_instances": len(result.rcpsp.activities),
        "lower_bound_ns": result.schedule.lower_bound_ns,
        "makespan_ns": result.schedule.makespan_ns,
        "critical_gap_ns": result.schedule.critical_gap_ns,
        "valid": result.validation.passed,
    }
    if result.rc_report is not None:
        bounds = [e.bound_ns for e in result.rc_report.entries]
        row["rc_mean_bound_ns"] = round(sum(bounds) / len(bounds), 1)
    return row


def cmd_bench(args) -> int:
    manifest_path = Path(args.manifest)
    doc = json.loads(manifest_path.read_text())
    instances = [manifest_path.parent / p for p in doc.get("instances", [])]
    objectives = doc.get("objectives", [args.objective])
    options = {
        "seed": args.seed, "starts": args.starts,
        "backtrack_limit": args.backtrack_limit,
        "max_placements": args.max_placements, "wall_clock_s": args.wall_clock_s,
        "block_ns": args.block_ns, "gap_ns": args.gap_ns,
        "assign_mode": args.assign_mode, "assign_budget": args.assign_budget,
    }
    tasks = [(str(p), objective, options)
             for p in instances for objective in objectives]
    workers = args.workers or os.cpu_count() or 1
    rows, failures = [], []
    if workers > 1 and len(tasks) > 1:
        import concurrent.futures
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_bench_guarded, tasks))
    else:
        outcomes = [_bench_guarded(t) for t in tasks]
    for outcome in outcomes:
        (rows if "error" not in outcome else failures).append(outcome)

    table_rows = sorted(rows, key=lambda r: (r["objective"], r["instance"]))
    result_doc = {"schema": io.BENCH_SCHEMA + "-results", "rows": table_rows,
                  "failures": failures, "averages": _bench_averages(table_rows)}
    if args.output:
        Path(args.output).write_bytes(io.canonical_json(result_doc))
    _print_bench_table(table_rows, result_doc["averages"], failures)
    return EXIT_OK


def _bench_guarded(task):
    try:
        return _bench_one(task)
    except TtError as exc:
        return {"instance": task[0], "objective": task[1], "error": str(exc)}


def _bench_averages(rows):
    averages = []
    for objective in sorted({r["objective"] for r in rows}):
        subset = [r for r in rows if r["objective"] == objective]
        avg = {
            "objective": objective,
            "instances": len(subset),
            "message_instances": round(
                sum(r["message_instances"] for r in subset) / len(subset), 1),
            "lower_bound_ns": round(
                sum(r["lower_bound_ns"] for r in subset) / len(subset), 1),
            "makespan_ns": round(
                sum(r["makespan_ns"] for r in subset) / len(subset), 1),
        }
        if all("rc_mean_bound_ns" in r for r in subset):
            avg["rc_mean_bound_ns"] = round(
                sum(r["rc_mean_bound_ns"] for r in subset) / len(subset), 1)
        averages.append(avg)
    return averages


def _print_bench_table(rows, averages, failures):
    header = f"{'instance':<40} {'objective':<10} {'N':>6} {'LB [ns]':>12} " \
             f"{'Cmax [ns]':>12} {'valid':>6}"
    print(header)
    print("-" * len(header))
    for r in rows:
        name = Path(r["instance"]).name
        print(f"{name:<40} {r['objective']:<10} {r['message_instances']:>6} "
              f"{r['lower_bound_ns']:>12} {r['makespan_ns']:>12} "
              f"{str(r['valid']):>6}")
    for avg in averages:
        print(f"{'AVERAGE':<40} {avg['objective']:<10} "
              f"{avg['message_instances']:>6.1f} {avg['lower_bound_ns']:>12.1f} "
              f"{avg['makespan_ns']:>12.1f} {'':>6}")
    for f in failures:
        print(f"FAILED {f['instance']} [{f['objective']}]: {f['error']}")


def cmd_export_gantt(args) -> int:
    manifest, digest = _manifest("export-gantt", {
        "instance": args.instance, "schedule": args.schedule,
        "output": args.output})
    instance = io.parse_instance(_read(args.instance))
    schedule = io.parse_schedule(_read(args.schedule), instance)
    Path(args.output).write_bytes(
        io.write_gantt(schedule, instance, manifest_hash=digest))
    print(f"wrote {args.output}")
    return EXIT_OK


_COMMANDS = {
    "generate": cmd_generate,
    "route": cmd_route,
    "assign": cmd_assign,
    "schedule": cmd_schedule,
    "validate": cmd_validate,
    "analyze": cmd_analyze,
    "bench": cmd_bench,
    "export-gantt": cmd_export_gantt,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return _COMMANDS[args.subcommand](args)
    except ScheduleError as exc:
        print(f"error [scheduler]: {exc}", file=sys.stderr)
        return EXIT_BUDGET if exc.budget_exhausted else EXIT_INFEASIBLE
    except _INFEASIBLE_ERRORS as exc:
        stage = type(exc).__name__
        print(f"error [{stage}]: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except _IO_ERRORS as exc:
        print(f"error [io]: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
