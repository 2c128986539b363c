"""Integration cycle assignment: balance per-(link, cycle) load.

Each message's first occurrence is pinned to one integration cycle inside
its period; the message then loads every cycle congruent to that choice on
every link of its route. Minimizing the maximum loaded resource both
balances the network and yields the lower bound used to judge schedule
quality (time lags are relaxed here, so the bound is not tight).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .errors import InfeasibleInstanceError, InvalidInputError
from .model import Link, ScheduleConfig, transmission_time

#: Largest message count solved exactly by default; heuristic above.
EXACT_MESSAGE_LIMIT = 50

#: Default branch-and-bound node budget.
DEFAULT_NODE_BUDGET = 200_000


@dataclass(frozen=True)
class AssignmentProblem:
    """Candidate cycles and per-resource load contributions per message."""

    message_ids: tuple[int, ...]
    candidates: dict[int, tuple[int, ...]]
    period_cycles: dict[int, int]
    link_tx: dict[int, tuple[tuple[Link, int], ...]]
    cluster_cycles: int

    def occupied_cycles(self, message_id: int, first_cycle: int) -> range:
        """Cycles in the cluster loaded when the first occurrence is at ``first_cycle``."""
        return range(first_cycle, self.cluster_cycles, self.period_cycles[message_id])

    def total_load(self, message_id: int) -> int:
        occurrences = self.cluster_cycles // self.period_cycles[message_id]
        return sum(tx for _, tx in self.link_tx[message_id]) * occurrences


@dataclass(frozen=True)
class Assignment:
    first_cycle: dict[int, int]
    max_load_ns: int
    optimal: bool
    mode: str
    nodes_explored: int = 0


def build_assignment_problem(messages, trees, config: ScheduleConfig) -> AssignmentProblem:
    """Construct candidate sets and load maps; detect infeasible messages here.

    A candidate cycle j is kept when the deadline does not fall before the
    cycle starts, the release does not fall after it ends, and the message
    can actually traverse its route inside the resulting relative window.
    """
    ic = config.integration_cycle_ns
    ordered = sorted(messages, key=lambda m: m.id)
    candidates = {}
    period_cycles = {}
    link_tx = {}
    for m in ordered:
        tree = trees[m.id]
        txs = tuple((link, transmission_time(m.length_bits, link.bandwidth_bps))
                    for link in tree.edges)
        slowest = max(tx for _, tx in txs)
        if slowest > ic:
            raise InfeasibleInstanceError(
                m.id, f"transmission time {slowest} ns exceeds the integration cycle {ic} ns")
        cycles = m.period_ns // ic
        kept = []
        for j in range(cycles):
            if m.deadline_ns < j * ic:
                continue
            if m.release_ns > j * ic + ic:
                continue
            if _window_fits(m, tree, txs, j, config):
                kept.append(j)
        if not kept:
            raise InfeasibleInstanceError(
                m.id, "no integration cycle satisfies its release/deadline window")
        candidates[m.id] = tuple(kept)
        period_cycles[m.id] = cycles
        link_tx[m.id] = txs
    return AssignmentProblem(
        message_ids=tuple(m.id for m in ordered),
        candidates=candidates,
        period_cycles=period_cycles,
        link_tx=link_tx,
        cluster_cycles=config.cluster_cycles,
    )


def _window_fits(message, tree, txs, cycle_index, config: ScheduleConfig) -> bool:
    """Can the whole route complete before the deadline if started in this cycle?"""
    ic = config.integration_cycle_ns
    rel_release = min(max(message.release_ns - cycle_index * ic, 0), ic)
    rel_deadline = min(max(message.deadline_ns - cycle_index * ic, 0), ic)
    start = max(config.sync_window_ns, rel_release)
    tx_of = dict(txs)
    for receiver, path in sorted(tree.paths.items()):
        completion = start + sum(tx_of[link] for link in path)
        completion += (len(path) - 1) * config.switch_delay_ns
        # rel_deadline <= ic, so this also guarantees the in-cycle fit.
        if completion > rel_deadline:
            return False
    return True


def _resource_peak(loads, problem, message_id, cycle, base) -> int:
    """Max load over the resources this placement touches, after adding it."""
    peak = base
    for link, tx in problem.link_tx[message_id]:
        for cyc in problem.occupied_cycles(message_id, cycle):
            value = loads.get((link, cyc), 0) + tx
            if value > peak:
                peak = value
    return peak


def _apply(loads, problem, message_id, cycle, sign) -> None:
    for link, tx in problem.link_tx[message_id]:
        for cyc in problem.occupied_cycles(message_id, cycle):
            loads[(link, cyc)] = loads.get((link, cyc), 0) + sign * tx


def max_load(problem: AssignmentProblem, first_cycle: dict[int, int]) -> int:
    loads: dict = {}
    for mid in problem.message_ids:
        _apply(loads, problem, mid, first_cycle[mid], +1)
    return max(loads.values(), default=0)


def _greedy(problem: AssignmentProblem) -> dict[int, int]:
    """Longest-total-load-first placement into the least loaded candidate."""
    order = sorted(problem.message_ids, key=lambda mid: (-problem.total_load(mid), mid))
    loads: dict = {}
    chosen = {}
    current = 0
    for mid in order:
        best = None
        for j in problem.candidates[mid]:
            peak = _resource_peak(loads, problem, mid, j, current)
            if best is None or peak < best[0]:
                best = (peak, j)
        current, cycle = best
        chosen[mid] = cycle
        _apply(loads, problem, mid, cycle, +1)
    return chosen


def _local_search(problem: AssignmentProblem, chosen: dict[int, int]) -> dict[int, int]:
    """Single-message reassignment, repeated until no move lowers the peak."""
    loads: dict = {}
    for mid in problem.message_ids:
        _apply(loads, problem, mid, chosen[mid], +1)
    improved = True
    while improved:
        improved = False
        z = max(loads.values(), default=0)
        for mid in problem.message_ids:
            _apply(loads, problem, mid, chosen[mid], -1)
            base = max(loads.values(), default=0)
            best = (z, chosen[mid])
            for j in problem.candidates[mid]:
                peak = _resource_peak(loads, problem, mid, j, base)
                if peak < best[0]:
                    best = (peak, j)
            _apply(loads, problem, mid, best[1], +1)
            if best[1] != chosen[mid]:
                chosen[mid] = best[1]
                improved = True
                z = max(loads.values(), default=0)
    return chosen


def _branch_and_bound(problem: AssignmentProblem, seed_choice: dict[int, int],
                      seed_z: int, node_budget: int):
    order = sorted(problem.message_ids, key=lambda mid: (-problem.total_load(mid), mid))
    best_choice = dict(seed_choice)
    best_z = seed_z
    loads: dict = {}
    nodes = 0
    exhausted = False
    current = dict(seed_choice)

    def dfs(idx: int, z: int) -> None:
        nonlocal best_choice, best_z, nodes, exhausted
        if exhausted:
            return
        if idx == len(order):
            if z < best_z:
                best_z = z
                best_choice = dict(current)
            return
        mid = order[idx]
        for j in problem.candidates[mid]:
            nodes += 1
            if nodes > node_budget:
                exhausted = True
                return
            peak = _resource_peak(loads, problem, mid, j, z)
            if peak >= best_z:
                continue
            current[mid] = j
            _apply(loads, problem, mid, j, +1)
            dfs(idx + 1, peak)
            _apply(loads, problem, mid, j, -1)
            if exhausted:
                return

    dfs(0, 0)
    return best_choice, best_z, nodes, not exhausted


def solve_assignment(problem: AssignmentProblem, mode: str = "auto",
                     node_budget: int = DEFAULT_NODE_BUDGET) -> Assignment:
    """Assign every message's first occurrence to an integration cycle.

    ``exact`` runs depth-first branch and bound seeded with the heuristic
    incumbent and proves optimality unless the node budget runs out, in
    which case the incumbent is returned flagged non-optimal. ``heuristic``
    is greedy placement plus single-message local search. ``auto`` picks
    exact up to EXACT_MESSAGE_LIMIT messages.
    """
    if mode not in ("auto", "exact", "heuristic"):
        raise InvalidInputError(f"unknown assignment mode '{mode}'")
    if mode == "auto":
        mode = "exact" if len(problem.message_ids) <= EXACT_MESSAGE_LIMIT else "heuristic"
    if not problem.message_ids:
        return Assignment(first_cycle={}, max_load_ns=0, optimal=True, mode=mode)

    chosen = _local_search(problem, _greedy(problem))
    z = max_load(problem, chosen)
    forced = all(len(problem.candidates[mid]) == 1 for mid in problem.message_ids)
    if mode == "heuristic":
        return Assignment(first_cycle=chosen, max_load_ns=z,
                          optimal=forced, mode="heuristic")
    choice, z_best, nodes, proven = _branch_and_bound(problem, chosen, z, node_budget)
    return Assignment(first_cycle=choice, max_load_ns=z_best,
                      optimal=proven or forced, mode="exact", nodes_explored=nodes)


def lower_bound(assignment: Assignment, config: ScheduleConfig) -> int:
    """Makespan lower bound: balanced peak load plus the sync slot.

    Valid for any schedule built on this assignment; a global bound only
    when the assignment is optimal. Time lags are relaxed, so it is not
    tight either way.
    """
    return assignment.max_load_ns + config.sync_window_ns
