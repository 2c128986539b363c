"""Offset scheduling as project scheduling with generalized time lags.

Every message instance becomes one non-preemptive activity whose start is
the frame offset inside the integration cycles the message occupies. Two
virtual markers delimit the schedule: SCHEDULE_START (fixed at time zero,
origin of release lags and target of negative deadline lags) and
SCHEDULE_END (whose start is the makespan, fed by completion lags).
Resources are (link, integration cycle) pairs of unit capacity, so two
activities conflict exactly when they share a link and at least one cycle.

The search is a multi-start serial placement scheme. Activities are taken
in priority order (tightest latest start first, then longest downstream
chain, then ids) and placed at the earliest offset that satisfies their
lag window and keeps every shared resource contention-free. When a window
closes, the scheduled activity with the loosest deadline among those in
the way is evicted and retried, a bounded number of times per start;
later starts perturb the priorities. Instances with at most
EXHAUSTIVE_ACTIVITY_LIMIT activities are solved exactly by trying every
placement order.
"""

from __future__ import annotations

import heapq
import itertools
import math
import random
import time
from bisect import insort
from dataclasses import dataclass, replace
from functools import cached_property

from .errors import (InfeasiblePorosityError, InvalidConfigError,
                     InvalidInputError, ScheduleError)
from .icap import Assignment
from .model import Link, ScheduleConfig, transmission_time

#: Virtual activity markers used in lag edges.
SCHEDULE_START = -1
SCHEDULE_END = -2

#: Instances with at most this many activities are solved by exhaustive
#: enumeration of placement orders, which is exact.
EXHAUSTIVE_ACTIVITY_LIMIT = 7


@dataclass(frozen=True)
class Activity:
    """One message instance: a frame transmission on one link."""

    index: int
    message: int
    link: Link
    duration_ns: int
    first_cycle: int
    period_cycles: int
    earliest_start_ns: int
    latest_start_ns: int

    def cycles(self, cluster_cycles: int) -> range:
        return range(self.first_cycle, cluster_cycles, self.period_cycles)


@dataclass(frozen=True)
class LagEdge:
    """Start-start time lag: start(target) >= start(source) + lag."""

    source: int
    target: int
    lag_ns: int


@dataclass(frozen=True)
class RcpspInstance:
    activities: tuple[Activity, ...]
    edges: tuple[LagEdge, ...]
    cycle_ns: int
    cluster_cycles: int
    sync_window_ns: int
    switch_delay_ns: int

    @cached_property
    def preds(self) -> dict[int, tuple[tuple[int, int], ...]]:
        """Real predecessor (index, lag) pairs per activity."""
        acc: dict[int, list] = {a.index: [] for a in self.activities}
        for e in self.edges:
            if e.source >= 0 and e.target >= 0:
                acc[e.target].append((e.source, e.lag_ns))
        return {i: tuple(v) for i, v in acc.items()}

    @cached_property
    def succs(self) -> dict[int, tuple[tuple[int, int], ...]]:
        acc: dict[int, list] = {a.index: [] for a in self.activities}
        for e in self.edges:
            if e.source >= 0 and e.target >= 0:
                acc[e.source].append((e.target, e.lag_ns))
        return {i: tuple(v) for i, v in acc.items()}

    @cached_property
    def chain_tail_ns(self) -> dict[int, int]:
        """Longest start-to-downstream-completion span per activity."""
        tails: dict[int, int] = {}

        def tail(idx: int) -> int:
            if idx not in tails:
                act = self.activities[idx]
                best = act.duration_ns
                for child, lag in self.succs[idx]:
                    best = max(best, lag + tail(child))
                tails[idx] = best
            return tails[idx]

        for act in self.activities:
            tail(act.index)
        return tails


@dataclass(frozen=True)
class Placement:
    message: int
    link: Link
    offset_ns: int
    duration_ns: int
    first_cycle: int
    period_cycles: int

    @property
    def end_ns(self) -> int:
        return self.offset_ns + self.duration_ns

    def cycles(self, cluster_cycles: int) -> range:
        return range(self.first_cycle, cluster_cycles, self.period_cycles)


@dataclass(frozen=True)
class TtSchedule:
    """Strictly periodic placement: one offset per message instance."""

    objective: str
    placements: tuple[Placement, ...]
    first_cycle: dict[int, int]
    makespan_ns: int
    feasible: bool
    cycle_ns: int
    cluster_cycles: int
    sync_window_ns: int
    lower_bound_ns: int | None = None
    lower_bound_optimal: bool | None = None
    critical_gap_ns: int | None = None
    min_preserved_gap_ns: int | None = None
    starts_used: int = 0
    placements_used: int = 0

    def offset_of(self, message: int, link: Link) -> int:
        return self._by_key[(message, link.key)].offset_ns

    @cached_property
    def _by_key(self) -> dict:
        return {(p.message, p.link.key): p for p in self.placements}


@dataclass(frozen=True)
class SolveBudget:
    """Search effort limits. Placement/start counts drive determinism; the
    wall-clock cap is a coarse safety net checked between starts only."""

    max_starts: int = 16
    backtrack_limit: int = 64
    max_placements: int | None = None
    wall_clock_s: float | None = None


@dataclass(frozen=True)
class GapPolicy:
    """Alternating TT-allowed blocks and reserved gaps, both ic/8 by default."""

    block_ns: int | None = None
    gap_ns: int | None = None

    def layout(self, sync_window_ns: int, cycle_ns: int) -> tuple[tuple[int, int], ...]:
        block = self.block_ns if self.block_ns is not None else cycle_ns // 8
        gap = self.gap_ns if self.gap_ns is not None else cycle_ns // 8
        if block <= 0 or gap <= 0:
            raise InvalidConfigError("porosity block and gap lengths must be positive")
        blocks = []
        start = sync_window_ns
        while start < cycle_ns:
            end = min(start + block, cycle_ns)
            blocks.append((start, end))
            start = end + gap
        return tuple(blocks)

    def gaps(self, sync_window_ns: int, cycle_ns: int) -> tuple[tuple[int, int], ...]:
        """Reserved gap intervals between consecutive blocks."""
        blocks = self.layout(sync_window_ns, cycle_ns)
        out = []
        for (_, end), (nxt, _) in zip(blocks, blocks[1:]):
            out.append((end, nxt))
        return tuple(out)


def _relative_window(message, first_cycle: int, ic: int) -> tuple[int, int]:
    rel_release = min(max(message.release_ns - first_cycle * ic, 0), ic)
    rel_deadline = min(max(message.deadline_ns - first_cycle * ic, 0), ic)
    return rel_release, rel_deadline


def build_rcpsp(messages, trees, assignment: Assignment,
                config: ScheduleConfig) -> RcpspInstance:
    """Translate routing plus cycle assignment into activities and lags.

    Lags: release edges from SCHEDULE_START to each link leaving the sender
    (relative release), precedence edges parent -> child worth parent
    duration plus the switch delay, one deadline edge per receiver from its
    last link back to SCHEDULE_START (negative), and completion edges to
    SCHEDULE_END worth the activity duration.
    """
    ic = config.integration_cycle_ns
    tau = config.switch_delay_ns
    ordered = sorted(messages, key=lambda m: m.id)
    activities: list[Activity] = []
    edges: list[LagEdge] = []
    index_of: dict[tuple[int, tuple[int, int]], int] = {}

    for m in ordered:
        tree = trees[m.id]
        first = assignment.first_cycle[m.id]
        rel_release, rel_deadline = _relative_window(m, first, ic)
        for link in tree.edges:
            idx = len(activities)
            index_of[(m.id, link.key)] = idx
            duration = transmission_time(m.length_bits, link.bandwidth_bps)
            activities.append(Activity(
                index=idx, message=m.id, link=link, duration_ns=duration,
                first_cycle=first, period_cycles=m.period_ns // ic,
                earliest_start_ns=0, latest_start_ns=0))
        for link in tree.edges:
            idx = index_of[(m.id, link.key)]
            parent = tree.parent_of[link]
            if parent is None:
                edges.append(LagEdge(SCHEDULE_START, idx, rel_release))
            else:
                pidx = index_of[(m.id, parent.key)]
                edges.append(LagEdge(
                    pidx, idx, activities[pidx].duration_ns + tau))
            edges.append(LagEdge(idx, SCHEDULE_END, activities[idx].duration_ns))
        for receiver in sorted(tree.final_links):
            fidx = index_of[(m.id, tree.final_links[receiver].key)]
            # start(SCHEDULE_START)=0 >= start + lag enforces completion <= deadline.
            edges.append(LagEdge(
                fidx, SCHEDULE_START, -(rel_deadline - activities[fidx].duration_ns)))

    activities = _propagate_windows(activities, edges, config)
    return RcpspInstance(
        activities=tuple(activities), edges=tuple(edges),
        cycle_ns=ic, cluster_cycles=config.cluster_cycles,
        sync_window_ns=config.sync_window_ns, switch_delay_ns=tau)


def _propagate_windows(activities, edges, config: ScheduleConfig):
    """Fill static earliest/latest starts; fail fast on closed windows."""
    from .errors import InfeasibleWindowError

    n = len(activities)
    es = [config.sync_window_ns] * n
    ls = [config.integration_cycle_ns - a.duration_ns for a in activities]
    preds: dict[int, list] = {i: [] for i in range(n)}
    succs: dict[int, list] = {i: [] for i in range(n)}
    for e in edges:
        if e.source == SCHEDULE_START and e.target >= 0:
            es[e.target] = max(es[e.target], e.lag_ns)
        elif e.target == SCHEDULE_START and e.source >= 0:
            ls[e.source] = min(ls[e.source], -e.lag_ns)
        elif e.source >= 0 and e.target >= 0:
            preds[e.target].append((e.source, e.lag_ns))
            succs[e.source].append((e.target, e.lag_ns))

    order = _topological(n, preds)
    for idx in order:
        for child, lag in succs[idx]:
            es[child] = max(es[child], es[idx] + lag)
    for idx in reversed(order):
        for child, lag in succs[idx]:
            ls[idx] = min(ls[idx], ls[child] - lag)
    for idx, act in enumerate(activities):
        if es[idx] > ls[idx]:
            raise InfeasibleWindowError(
                f"message {act.message} on link {act.link}: window closes "
                f"(earliest start {es[idx]} ns > latest start {ls[idx]} ns)")
    return [replace(a, earliest_start_ns=es[a.index], latest_start_ns=ls[a.index])
            for a in activities]


def _topological(n: int, preds) -> list[int]:
    remaining = {i: len(preds[i]) for i in range(n)}
    succs: dict[int, list[int]] = {i: [] for i in range(n)}
    for i in range(n):
        for src, _ in preds[i]:
            succs[src].append(i)
    ready = sorted((i for i in range(n) if remaining[i] == 0), reverse=True)
    out = []
    while ready:
        idx = ready.pop()
        out.append(idx)
        for child in succs[idx]:
            remaining[child] -= 1
            if remaining[child] == 0:
                ready.append(child)
    if len(out) != n:
        raise InvalidInputError("precedence lags contain a cycle")
    return out


def cycles_overlap(first_a: int, period_a: int, first_b: int, period_b: int) -> bool:
    """Strictly periodic occupancy: the cycle sets of two placements
    intersect iff their first cycles agree modulo gcd of the periods."""
    return (first_a - first_b) % math.gcd(period_a, period_b) == 0


class _LinkBoard:
    """Scheduled intervals per link, kept sorted by start offset."""

    def __init__(self):
        self.by_link: dict[tuple[int, int], list] = {}

    def entries(self, link: Link) -> list:
        return self.by_link.setdefault(link.key, [])

    def add(self, act: Activity, start: int) -> None:
        insort(self.entries(act.link),
               (start, start + act.duration_ns, act.first_cycle,
                act.period_cycles, act.index))

    def remove(self, act: Activity, start: int) -> None:
        self.entries(act.link).remove(
            (start, start + act.duration_ns, act.first_cycle,
             act.period_cycles, act.index))


def _snap_to_blocks(t: int, duration: int, blocks) -> int | None:
    for b_start, b_end in blocks:
        if b_end - max(t, b_start) >= duration:
            return max(t, b_start)
    return None


def _earliest_offset(act: Activity, lb: int, ub: int, board: _LinkBoard,
                     blocks) -> int | None:
    """Smallest feasible start in [lb, ub], or None."""
    t = lb
    entries = board.entries(act.link)
    while True:
        if blocks is not None:
            t = _snap_to_blocks(t, act.duration_ns, blocks)
            if t is None:
                return None
        if t > ub:
            return None
        end = t + act.duration_ns
        bumped = False
        for s, e, fc, pc, _ in entries:
            if s >= end:
                break
            if e <= t:
                continue
            if cycles_overlap(act.first_cycle, act.period_cycles, fc, pc):
                t = e
                bumped = True
                break
        if not bumped:
            return t


@dataclass
class _Attempt:
    starts: dict[int, int]
    scheduled_count: int
    failed: Activity | None


def _run_attempt(rcpsp: RcpspInstance, priority: dict[int, tuple], blocks,
                 backtrack_limit: int, counter: list) -> _Attempt:
    """One serial placement pass with bounded eviction on dead ends."""
    acts = rcpsp.activities
    preds = rcpsp.preds
    succs = rcpsp.succs
    board = _LinkBoard()
    starts: dict[int, int] = {}
    waiting = {a.index for a in acts}
    missing = {a.index: len(preds[a.index]) for a in acts}
    heap: list[tuple] = []
    for a in acts:
        if missing[a.index] == 0:
            heapq.heappush(heap, (priority[a.index], a.index))
    backtracks = 0
    best_progress = _Attempt(starts={}, scheduled_count=0, failed=None)

    while waiting:
        if not heap:
            return best_progress
        _, idx = heapq.heappop(heap)
        if idx not in waiting or missing[idx] > 0:
            continue
        act = acts[idx]
        lb = act.earliest_start_ns
        for src, lag in preds[idx]:
            lb = max(lb, starts[src] + lag)
        ub = act.latest_start_ns
        for dst, lag in succs[idx]:
            if dst in starts:
                ub = min(ub, starts[dst] - lag)
        offset = _earliest_offset(act, lb, ub, board, blocks)
        evicted = []
        while offset is None and backtracks < backtrack_limit:
            # Same-link blockers belong to other messages, so the lag
            # window [lb, ub] is unaffected by removing one.
            victim = _pick_victim(act, lb, ub, board, acts)
            if victim is None:
                break
            backtracks += 1
            board.remove(victim, starts.pop(victim.index))
            waiting.add(victim.index)
            for child, _ in succs[victim.index]:
                missing[child] += 1
            evicted.append(victim)
            offset = _earliest_offset(act, lb, ub, board, blocks)
        if offset is None:
            if len(starts) >= best_progress.scheduled_count:
                best_progress = _Attempt(dict(starts), len(starts), act)
            return best_progress
        starts[idx] = offset
        board.add(act, offset)
        waiting.discard(idx)
        counter[0] += 1
        for child, _ in succs[idx]:
            missing[child] -= 1
            if missing[child] == 0 and child in waiting:
                heapq.heappush(heap, (priority[child], child))
        for victim in evicted:
            heapq.heappush(heap, (priority[victim.index], victim.index))
    return _Attempt(starts=starts, scheduled_count=len(starts), failed=None)


def _pick_victim(act: Activity, lb: int, ub: int, board: _LinkBoard, acts):
    """Scheduled activity with the loosest deadline among those blocking
    the window [lb, ub + duration)."""
    window_end = ub + act.duration_ns
    candidates = []
    for s, e, fc, pc, idx in board.entries(act.link):
        if s >= window_end or e <= lb:
            continue
        if cycles_overlap(act.first_cycle, act.period_cycles, fc, pc):
            other = acts[idx]
            candidates.append(((other.latest_start_ns + other.duration_ns,
                                other.message, other.link.key), other))
    if not candidates:
        return None
    return max(candidates, key=lambda c: c[0])[1]


def _starts_to_schedule(rcpsp: RcpspInstance, starts: dict[int, int],
                        objective: str, **extra) -> TtSchedule:
    placements = tuple(sorted(
        (Placement(message=a.message, link=a.link, offset_ns=starts[a.index],
                   duration_ns=a.duration_ns, first_cycle=a.first_cycle,
                   period_cycles=a.period_cycles)
         for a in rcpsp.activities),
        key=lambda p: (p.message, p.link.key)))
    first_cycle = {}
    for a in rcpsp.activities:
        first_cycle[a.message] = a.first_cycle
    return TtSchedule(
        objective=objective, placements=placements, first_cycle=first_cycle,
        makespan_ns=makespan_of_starts(rcpsp, starts), feasible=True,
        cycle_ns=rcpsp.cycle_ns, cluster_cycles=rcpsp.cluster_cycles,
        sync_window_ns=rcpsp.sync_window_ns, **extra)


def makespan_of_starts(rcpsp: RcpspInstance, starts: dict[int, int]) -> int:
    if not starts:
        return rcpsp.sync_window_ns
    return max(starts[a.index] + a.duration_ns for a in rcpsp.activities)


def makespan(schedule: TtSchedule) -> int:
    """Latest completion offset within any integration cycle, or the sync
    window length for an empty schedule."""
    if not schedule.placements:
        return schedule.sync_window_ns
    return max(p.end_ns for p in schedule.placements)


def _exhaustive(rcpsp: RcpspInstance, blocks, counter) -> tuple[dict[int, int], int] | None:
    """Try every placement order; exact for small instances."""
    acts = rcpsp.activities
    n = len(acts)
    preds = rcpsp.preds
    succs = rcpsp.succs
    best: tuple[int, tuple, dict] | None = None
    for perm in itertools.permutations(range(n)):
        board = _LinkBoard()
        starts: dict[int, int] = {}
        ok = True
        for idx in perm:
            act = acts[idx]
            lb = act.earliest_start_ns
            for src, lag in preds[idx]:
                if src in starts:
                    lb = max(lb, starts[src] + lag)
            ub = act.latest_start_ns
            for dst, lag in succs[idx]:
                if dst in starts:
                    ub = min(ub, starts[dst] - lag)
            offset = _earliest_offset(act, lb, ub, board, blocks)
            counter[0] += 1
            if offset is None:
                ok = False
                break
            starts[idx] = offset
            board.add(act, offset)
        if ok:
            c_max = makespan_of_starts(rcpsp, starts)
            key = (c_max, tuple(starts[i] for i in range(n)))
            if best is None or key < best[:2]:
                best = (c_max, key[1], dict(starts))
    if best is None:
        return None
    return best[2], best[0]


def _base_priority(rcpsp: RcpspInstance) -> dict[int, tuple]:
    tails = rcpsp.chain_tail_ns
    return {a.index: (a.latest_start_ns + a.duration_ns, -tails[a.index],
                      a.message, a.link.key)
            for a in rcpsp.activities}


def _bottleneck_priority(rcpsp: RcpspInstance, starts: dict[int, int],
                         base: dict[int, tuple]) -> dict[int, tuple]:
    """Promote the activities of the resource that realizes the makespan
    (and everything upstream of them) to the front, earliest start first."""
    acts = rcpsp.activities
    critical = max(acts, key=lambda a: (starts[a.index] + a.duration_ns,
                                        a.message, a.link.key))
    boosted = set()
    frontier = [a.index for a in acts
                if a.link.key == critical.link.key and cycles_overlap(
                    a.first_cycle, a.period_cycles,
                    critical.first_cycle, critical.period_cycles)]
    while frontier:
        idx = frontier.pop()
        if idx in boosted:
            continue
        boosted.add(idx)
        frontier.extend(src for src, _ in rcpsp.preds[idx])
    return {a.index: ((0 if a.index in boosted else 1, a.earliest_start_ns)
                      + base[a.index])
            for a in acts}


def _compact(rcpsp: RcpspInstance, starts: dict[int, int], blocks,
             counter, rounds: int = 6) -> dict[int, int]:
    """Iterated re-dispatch: replay the serial scheme with the previous
    start order as the priority until the schedule stops improving."""
    n = len(rcpsp.activities)
    best = starts
    best_c = makespan_of_starts(rcpsp, best)
    for _ in range(rounds):
        priority = {idx: (best[idx], idx) for idx in range(n)}
        attempt = _run_attempt(rcpsp, priority, blocks, 0, counter)
        if attempt.failed is not None or len(attempt.starts) < n:
            break
        c = makespan_of_starts(rcpsp, attempt.starts)
        if (c, tuple(attempt.starts[i] for i in range(n))) >= \
                (best_c, tuple(best[i] for i in range(n))):
            break
        best, best_c = attempt.starts, c
    return best


def _solve(rcpsp: RcpspInstance, blocks, budget: SolveBudget, seed: int,
           target_ns: int | None, objective: str) -> TtSchedule:
    counter = [0]
    n = len(rcpsp.activities)
    if n == 0:
        return _starts_to_schedule(rcpsp, {}, objective,
                                   starts_used=0, placements_used=0)

    if n <= EXHAUSTIVE_ACTIVITY_LIMIT:
        result = _exhaustive(rcpsp, blocks, counter)
        if result is None:
            raise ScheduleError("no feasible schedule exists for this instance",
                                budget_exhausted=False)
        starts, _ = result
        return _starts_to_schedule(rcpsp, starts, objective,
                                   starts_used=1, placements_used=counter[0])

    rng = random.Random(seed)
    base = _base_priority(rcpsp)
    incumbent: tuple[int, tuple, dict] | None = None
    best_failure: _Attempt | None = None
    deadline = (time.monotonic() + budget.wall_clock_s
                if budget.wall_clock_s is not None else None)
    starts_used = 0
    spread = max(rcpsp.cycle_ns // 8, 1)

    for attempt_no in range(budget.max_starts):
        if deadline is not None and time.monotonic() > deadline:
            break
        if budget.max_placements is not None and counter[0] >= budget.max_placements:
            break
        # Most-shared first: an activity repeating in every cycle must dodge
        # every other occupant, so it gets first pick of offsets. Under a
        # block layout that effect dominates, so the rule leads there.
        shared_first = {a.index: (a.period_cycles,) + base[a.index]
                        for a in rcpsp.activities}
        rules = [base, shared_first] if blocks is None else [shared_first, base]
        if attempt_no < 2:
            priority = rules[attempt_no]
        elif attempt_no == 2:
            tails = rcpsp.chain_tail_ns
            priority = {a.index: (-tails[a.index],
                                  a.latest_start_ns + a.duration_ns,
                                  a.message, a.link.key)
                        for a in rcpsp.activities}
        elif attempt_no % 2 == 0 and incumbent is not None:
            priority = _bottleneck_priority(rcpsp, incumbent[2], base)
        else:
            priority = {idx: (key[0] + rng.randrange(spread), key[1],
                              rng.random(), key[2], key[3])
                        for idx, key in base.items()}
        starts_used += 1
        attempt = _run_attempt(rcpsp, priority, blocks,
                               budget.backtrack_limit, counter)
        if attempt.failed is not None or len(attempt.starts) < n:
            if best_failure is None or attempt.scheduled_count > best_failure.scheduled_count:
                best_failure = attempt
            continue
        compacted = _compact(rcpsp, attempt.starts, blocks, counter)
        c_max = makespan_of_starts(rcpsp, compacted)
        key = (c_max, tuple(compacted[i] for i in range(n)))
        if incumbent is None or key < incumbent[:2]:
            incumbent = (c_max, key[1], dict(compacted))
        if target_ns is not None and incumbent[0] <= target_ns:
            break

    if incumbent is None:
        failed = best_failure.failed if best_failure else None
        detail = "no feasible schedule found within the search budget"
        if failed is not None:
            detail += (f"; first violated deadline: message {failed.message} "
                       f"on link {failed.link} (latest start {failed.latest_start_ns} ns)")
        raise ScheduleError(detail, budget_exhausted=True,
                            message_id=failed.message if failed else None,
                            link=failed.link if failed else None)
    return _starts_to_schedule(rcpsp, incumbent[2], objective,
                               starts_used=starts_used,
                               placements_used=counter[0])


def solve_makespan(rcpsp: RcpspInstance, budget: SolveBudget | None = None,
                   seed: int = 0, target_ns: int | None = None) -> TtSchedule:
    """Minimize the latest completion offset.

    Deterministic for a fixed (instance, seed, budget); the search stops
    early once ``target_ns`` (typically the assignment lower bound) is hit.
    """
    return _solve(rcpsp, None, budget or SolveBudget(), seed, target_ns, "makespan")


def solve_porosity(rcpsp: RcpspInstance, gap_policy: GapPolicy | None = None,
                   budget: SolveBudget | None = None, seed: int = 0,
                   target_ns: int | None = None) -> TtSchedule:
    """Porosity baseline: frames may only occupy the TT-allowed blocks.

    Reserved gaps are never touched, so the minimum preserved gap is
    saturated by construction and the tie-break (smallest makespan within
    the block structure) drives the search.
    """
    policy = gap_policy or GapPolicy()
    blocks = policy.layout(rcpsp.sync_window_ns, rcpsp.cycle_ns)
    if not blocks:
        raise InfeasiblePorosityError("gap policy leaves no TT-allowed block")
    longest_block = max(e - s for s, e in blocks)
    for act in rcpsp.activities:
        if act.duration_ns > longest_block:
            raise InfeasiblePorosityError(
                f"message {act.message} on link {act.link}: frame of "
                f"{act.duration_ns} ns exceeds the largest TT block of "
                f"{longest_block} ns; use a smaller reserved gap")
    _check_block_capacity(rcpsp, blocks)
    schedule = _solve(rcpsp, blocks, budget or SolveBudget(), seed,
                      target_ns, "porosity")
    preserved = _min_preserved_gap(rcpsp, schedule,
                                   policy.gaps(rcpsp.sync_window_ns, rcpsp.cycle_ns))
    return replace(schedule, min_preserved_gap_ns=preserved)


def _check_block_capacity(rcpsp: RcpspInstance, blocks) -> None:
    capacity = sum(e - s for s, e in blocks)
    demand: dict[tuple, int] = {}
    for act in rcpsp.activities:
        for cyc in act.cycles(rcpsp.cluster_cycles):
            key = (act.link.key, cyc)
            demand[key] = demand.get(key, 0) + act.duration_ns
    for (link_key, cyc), load in sorted(demand.items()):
        if load > capacity:
            raise InfeasiblePorosityError(
                f"link {link_key[0]}->{link_key[1]} cycle {cyc}: TT load {load} ns "
                f"exceeds block capacity {capacity} ns; use a smaller reserved gap")


def _min_preserved_gap(rcpsp: RcpspInstance, schedule: TtSchedule, gaps) -> int | None:
    """Length of the shortest TT-free stretch around any reserved gap."""
    if not gaps:
        return None
    busy: dict[tuple, list] = {}
    for p in schedule.placements:
        for cyc in p.cycles(rcpsp.cluster_cycles):
            busy.setdefault((p.link.key, cyc), []).append((p.offset_ns, p.end_ns))
    lo, hi = rcpsp.sync_window_ns, rcpsp.cycle_ns
    worst = None
    for key in sorted(busy):
        intervals = sorted(busy[key])
        for g_start, g_end in gaps:
            left = lo
            right = hi
            for s, e in intervals:
                if e <= g_start:
                    left = max(left, e)
                if s >= g_end:
                    right = min(right, s)
            free = right - left
            if worst is None or free < worst:
                worst = free
    if worst is None:
        # Nothing scheduled anywhere: every gap is preserved in full.
        worst = hi - lo
    return worst
