"""Offline schedule synthesis for Time-Triggered traffic on TTEthernet.

Pipeline: shortest-path routing, load-balancing assignment of messages to
integration cycles, and offset scheduling formulated as project scheduling
with unit resources and generalized time lags. Analysis utilities validate
schedules, measure the critical gap, and bound worst-case Rate-Constrained
delays; a porosity-style scheduler serves as a comparison baseline.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .model import (Link, MessageSpec, NetworkTopology, Node, ScheduleConfig,
                    VirtualLink, derive_cycles, resolve_config,
                    transmission_time, wire_bits)
from .routing import (RouteTree, RoutingTable, all_pairs_shortest_paths,
                      message_instances, route_all, route_message)
from .icap import (Assignment, AssignmentProblem, build_assignment_problem,
                   lower_bound, solve_assignment)
from .scheduler import (GapPolicy, Placement, RcpspInstance, SolveBudget,
                        TtSchedule, build_rcpsp, makespan, solve_makespan,
                        solve_porosity)
from .analysis import (RcDelayReport, ValidationReport, critical_gap,
                       rc_worst_case_delay, resolve_virtual_links,
                       tt_blocking, validate)
from .generator import (GeneratorConfig, generate_messages, generate_topology,
                        generate_virtual_links)
from .io import (InstanceFile, parse_instance, parse_schedule,
                 serialize_instance, write_gantt, write_schedule)
from .pipeline import PipelineResult, run_pipeline
