"""End-to-end wiring: route, assign, build, solve, validate, analyze."""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import analysis, icap, routing, scheduler
from .io import InstanceFile
from .model import ScheduleConfig


@dataclass
class PipelineResult:
    instance: InstanceFile
    config: ScheduleConfig
    table: routing.RoutingTable
    trees: dict[int, routing.RouteTree]
    problem: icap.AssignmentProblem
    assignment: icap.Assignment
    rcpsp: scheduler.RcpspInstance
    schedule: scheduler.TtSchedule
    validation: analysis.ValidationReport | None
    rc_report: analysis.RcDelayReport | None

    @property
    def lower_bound_ns(self) -> int:
        return self.schedule.lower_bound_ns

    @property
    def gap_to_lower_bound(self) -> float:
        lb = self.schedule.lower_bound_ns
        if not lb:
            return 0.0
        return self.schedule.makespan_ns / lb - 1.0


def run_pipeline(instance: InstanceFile, *, objective: str = "makespan",
                 seed: int = 0, budget: scheduler.SolveBudget | None = None,
                 gap_policy: scheduler.GapPolicy | None = None,
                 assign_mode: str = "auto",
                 assign_node_budget: int = icap.DEFAULT_NODE_BUDGET,
                 validate: bool = True,
                 analyze_rc: bool = True) -> PipelineResult:
    """Run all three stages on a parsed instance and post-check the result."""
    config = instance.resolve()
    table = routing.all_pairs_shortest_paths(instance.topology)
    trees = routing.route_all(instance.messages, table)
    problem = icap.build_assignment_problem(instance.messages, trees, config)
    assignment = icap.solve_assignment(problem, mode=assign_mode,
                                       node_budget=assign_node_budget)
    rcpsp = scheduler.build_rcpsp(instance.messages, trees, assignment, config)
    bound = icap.lower_bound(assignment, config)
    if objective == "makespan":
        schedule = scheduler.solve_makespan(rcpsp, budget=budget, seed=seed,
                                            target_ns=bound)
    elif objective == "porosity":
        schedule = scheduler.solve_porosity(rcpsp, gap_policy=gap_policy,
                                            budget=budget, seed=seed)
    else:
        raise ValueError(f"unknown objective '{objective}'")
    schedule = replace(
        schedule,
        lower_bound_ns=bound,
        lower_bound_optimal=assignment.optimal,
        critical_gap_ns=analysis.critical_gap(schedule, config, instance.topology))

    validation = None
    if validate:
        validation = analysis.validate(schedule, instance, trees, config)
    rc_report = None
    if analyze_rc and instance.virtual_links:
        resolved = analysis.resolve_virtual_links(instance.virtual_links, table)
        rc_report = analysis.rc_worst_case_delay(schedule, resolved, config)
    return PipelineResult(
        instance=instance, config=config, table=table, trees=trees,
        problem=problem, assignment=assignment, rcpsp=rcpsp,
        schedule=schedule, validation=validation, rc_report=rc_report)
