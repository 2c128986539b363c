"""Schedule validation, quality metrics, and Rate-Constrained delay bounds.

Validation expands every placement into its concrete occurrences over the
whole cluster cycle and re-checks each hard constraint from scratch, so it
is independent of the solver's bookkeeping. The RC analysis is a
deliberately conservative link-local bound under the timely block policy,
not a tight traversal-time analysis; it is a consistent yardstick for
comparing schedules, labeled as such in reports.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .errors import RoutingError, SemanticError, UnboundedBlockingError
from .model import Link, NetworkTopology, ScheduleConfig, transmission_time
from .routing import RoutingTable
from .scheduler import TtSchedule

CONSTRAINT_CLASSES = (
    "completeness",
    "contention_free",
    "precedence",
    "release",
    "deadline",
    "cycle_fit",
    "sync_clearance",
    "periodicity",
)

RC_BOUND_LABEL = "conservative link-local bound"


@dataclass(frozen=True)
class Violation:
    constraint: str
    detail: str
    message: int | None = None
    link: tuple[int, int] | None = None
    cycle: int | None = None


@dataclass(frozen=True)
class ValidationReport:
    checks: dict[str, bool]
    violations: tuple[Violation, ...]

    @property
    def passed(self) -> bool:
        return not self.violations


def occurrence_map(schedule: TtSchedule) -> dict[tuple[tuple[int, int], int], list]:
    """(link key, cycle) -> sorted [(start, end, message)] over the cluster."""
    out: dict[tuple[tuple[int, int], int], list] = {}
    for p in schedule.placements:
        for cyc in p.cycles(schedule.cluster_cycles):
            out.setdefault((p.link.key, cyc), []).append(
                (p.offset_ns, p.end_ns, p.message))
    for entries in out.values():
        entries.sort()
    return out


def validate(schedule: TtSchedule, instance, trees,
             config: ScheduleConfig) -> ValidationReport:
    """Check every hard constraint class; violations are report content."""
    messages = {m.id: m for m in instance.messages}
    ic = config.integration_cycle_ns
    violations: list[Violation] = []

    def bad(constraint, detail, **kw):
        violations.append(Violation(constraint=constraint, detail=detail, **kw))

    placed = {(p.message, p.link.key): p for p in schedule.placements}

    # Completeness: one placement per (message, route link), nothing extra.
    expected = set()
    for mid in sorted(messages):
        tree = trees[mid]
        spec = messages[mid]
        if mid not in schedule.first_cycle:
            bad("completeness", f"message {mid} has no cycle assignment", message=mid)
            continue
        for link in tree.edges:
            expected.add((mid, link.key))
            p = placed.get((mid, link.key))
            if p is None:
                bad("completeness", f"message {mid} missing on link {link}",
                    message=mid, link=link.key)
                continue
            want = transmission_time(spec.length_bits, link.bandwidth_bps)
            if p.duration_ns != want:
                bad("completeness",
                    f"message {mid} on link {link}: duration {p.duration_ns} ns, "
                    f"expected {want} ns", message=mid, link=link.key)
    for key in sorted(placed):
        if key not in expected:
            bad("completeness", f"unexpected placement {key[0]} on link "
                f"{key[1][0]}->{key[1][1]}", message=key[0], link=key[1])

    # Periodicity: the first cycle indexes a cycle inside the period and the
    # placement repeats it verbatim.
    for mid in sorted(schedule.first_cycle):
        spec = messages.get(mid)
        if spec is None:
            bad("periodicity", f"cycle assignment for unknown message {mid}",
                message=mid)
            continue
        cycles = spec.period_ns // ic
        first = schedule.first_cycle[mid]
        if not 0 <= first < cycles:
            bad("periodicity",
                f"message {mid}: first cycle {first} outside [0, {cycles})",
                message=mid)
    for p in schedule.placements:
        spec = messages.get(p.message)
        if spec is None:
            continue
        if p.period_cycles != spec.period_ns // ic or \
                p.first_cycle != schedule.first_cycle.get(p.message):
            bad("periodicity",
                f"message {p.message} on link {p.link}: placement does not "
                f"repeat the assigned cycle", message=p.message, link=p.link.key)

    # Per-placement window checks.
    for p in schedule.placements:
        if p.offset_ns < config.sync_window_ns:
            bad("sync_clearance",
                f"message {p.message} on link {p.link} starts at {p.offset_ns} ns "
                f"inside the sync window", message=p.message, link=p.link.key)
        if p.end_ns > ic:
            bad("cycle_fit",
                f"message {p.message} on link {p.link} ends at {p.end_ns} ns "
                f"beyond the integration cycle", message=p.message, link=p.link.key)

    # Release at the sender's outgoing links; deadline at each receiver.
    for mid in sorted(messages):
        spec = messages[mid]
        tree = trees[mid]
        first = schedule.first_cycle.get(mid)
        if first is None:
            continue
        base = first * ic
        for link in tree.root_links:
            p = placed.get((mid, link.key))
            if p is not None and base + p.offset_ns < spec.release_ns:
                bad("release",
                    f"message {mid} leaves at {base + p.offset_ns} ns before "
                    f"release {spec.release_ns} ns", message=mid, link=link.key)
        for receiver in sorted(tree.final_links):
            link = tree.final_links[receiver]
            p = placed.get((mid, link.key))
            if p is not None and base + p.end_ns > spec.deadline_ns:
                bad("deadline",
                    f"message {mid} reaches receiver {receiver} at "
                    f"{base + p.end_ns} ns after deadline {spec.deadline_ns} ns",
                    message=mid, link=link.key)

    # Precedence: each hop waits for the upstream transmission plus the
    # switch delay.
    tau = config.switch_delay_ns
    for mid in sorted(messages):
        tree = trees[mid]
        for link in tree.edges:
            parent = tree.parent_of[link]
            if parent is None:
                continue
            child_p = placed.get((mid, link.key))
            parent_p = placed.get((mid, parent.key))
            if child_p is None or parent_p is None:
                continue
            need = parent_p.offset_ns + parent_p.duration_ns + tau
            if child_p.offset_ns < need:
                bad("precedence",
                    f"message {mid}: link {link} starts at {child_p.offset_ns} ns, "
                    f"needs {need} ns after upstream link {parent}",
                    message=mid, link=link.key)

    # Contention: expand occurrences and look for overlaps per (link, cycle).
    for (link_key, cyc), entries in sorted(occurrence_map(schedule).items()):
        for (s1, e1, m1), (s2, e2, m2) in zip(entries, entries[1:]):
            if s2 < e1:
                bad("contention_free",
                    f"messages {m1} and {m2} overlap on link "
                    f"{link_key[0]}->{link_key[1]} in cycle {cyc}",
                    message=m2, link=link_key, cycle=cyc)

    checks = {name: True for name in CONSTRAINT_CLASSES}
    for v in violations:
        checks[v.constraint] = False
    return ValidationReport(checks=checks, violations=tuple(violations))


def critical_gap(schedule: TtSchedule, config: ScheduleConfig,
                 topology: NetworkTopology) -> int:
    """Shortest, over all (link, cycle) pairs, of the longest TT-free
    stretch between the sync window and the cycle end."""
    ic = config.integration_cycle_ns
    sync = config.sync_window_ns
    occ = occurrence_map(schedule)
    worst = ic - sync
    for link in sorted(topology.links):
        for cyc in range(config.cluster_cycles):
            entries = occ.get((link.key, cyc), ())
            longest = 0
            cursor = sync
            for s, e, _ in entries:
                longest = max(longest, s - cursor)
                cursor = max(cursor, e)
            longest = max(longest, ic - cursor)
            worst = min(worst, longest)
    return worst


def merge_intervals(intervals) -> list[tuple[int, int]]:
    merged: list[tuple[int, int]] = []
    for s, e in sorted(intervals):
        if s >= e:
            continue
        if merged and s <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], e))
        else:
            merged.append((s, e))
    return merged


def tt_blocking(busy_intervals, frame_bits: int, bandwidth_bps: int,
                config: ScheduleConfig) -> int:
    """Worst wait of an RC frame under timely block on one link.

    ``busy_intervals`` are the link's TT busy [start, end) pairs over one
    cluster cycle; the pattern repeats. The frame may start at t when its
    whole transmission fits before the next busy interval. The maximum of
    (earliest start - arrival) over all arrival phases occurs just after a
    gap becomes too small for the frame, so only those boundary phases are
    evaluated.
    """
    frame_ns = transmission_time(frame_bits, bandwidth_bps)
    cc = config.cluster_cycle_ns
    merged = merge_intervals(busy_intervals)
    if merged and (merged[0][0] < 0 or merged[-1][1] > cc):
        raise SemanticError("busy intervals must lie within one cluster cycle")
    if not merged or frame_ns == 0:
        return 0

    free: list[tuple[int, int]] = []
    cursor = 0
    for s, e in merged:
        if s > cursor:
            free.append((cursor, s))
        cursor = e
    if cursor < cc:
        free.append((cursor, cc))
    # The timeline is periodic: a trailing gap continues into the leading one.
    if len(free) >= 2 and free[0][0] == 0 and free[-1][1] == cc:
        first = free.pop(0)
        last = free.pop()
        free.append((last[0], first[1] + cc))
    elif len(free) == 1 and free[0] == (0, cc):
        return 0

    windows = sorted((gs, ge - frame_ns) for gs, ge in free if ge - gs >= frame_ns)
    if not windows:
        raise UnboundedBlockingError(
            f"a {frame_ns} ns frame fits in no TT-free gap of the cluster cycle")
    worst = 0
    for i, (_, w_end) in enumerate(windows):
        if i + 1 < len(windows):
            next_start = windows[i + 1][0]
        else:
            next_start = windows[0][0] + cc
        worst = max(worst, next_start - (w_end + 1))
    return worst


@dataclass(frozen=True)
class ResolvedVirtualLink:
    """Virtual link with its route resolved to concrete link paths."""

    id: int
    max_frame_bits: int
    bag_ns: int
    paths: tuple[tuple[Link, ...], ...]

    @cached_property
    def links(self) -> tuple[Link, ...]:
        seen: dict[Link, None] = {}
        for path in self.paths:
            for link in path:
                seen.setdefault(link, None)
        return tuple(sorted(seen))


def resolve_virtual_links(virtual_links, table: RoutingTable) -> tuple[ResolvedVirtualLink, ...]:
    """Turn route or source/destination specs into link paths; checks that
    the bandwidth allocation gap fits at least one frame."""
    topology = table.topology
    out = []
    for vl in sorted(virtual_links, key=lambda v: v.id):
        if vl.route is not None:
            links = []
            for key in vl.route:
                link = topology.link_map.get(tuple(key))
                if link is None:
                    raise RoutingError(
                        f"virtual link {vl.id}: route link {key[0]}->{key[1]} "
                        f"not in topology")
                links.append(link)
            paths: tuple = (tuple(links),)
        else:
            paths = tuple(table.path_links(vl.source, dest)
                          for dest in sorted(vl.destinations))
        resolved = ResolvedVirtualLink(
            id=vl.id, max_frame_bits=vl.max_frame_bits, bag_ns=vl.bag_ns,
            paths=paths)
        slowest_tx = max(transmission_time(vl.max_frame_bits, l.bandwidth_bps)
                         for l in resolved.links)
        if vl.bag_ns < slowest_tx:
            raise SemanticError(
                f"virtual link {vl.id}: bandwidth allocation gap {vl.bag_ns} ns "
                f"is shorter than one frame transmission ({slowest_tx} ns)")
        out.append(resolved)
    return tuple(out)


@dataclass(frozen=True)
class RcDelayRow:
    link: tuple[int, int]
    tt_blocking_ns: int
    interference_ns: int
    transmission_ns: int
    hop_delay_ns: int


@dataclass(frozen=True)
class RcDelayEntry:
    virtual_link: int
    bound_ns: int
    rows: tuple[RcDelayRow, ...]


@dataclass(frozen=True)
class RcDelayReport:
    label: str
    entries: tuple[RcDelayEntry, ...]


def link_busy_intervals(schedule: TtSchedule, link: Link,
                        config: ScheduleConfig) -> list[tuple[int, int]]:
    """TT busy time on one link over the cluster cycle, sync slots included."""
    ic = config.integration_cycle_ns
    intervals = []
    for cyc in range(config.cluster_cycles):
        if config.sync_window_ns > 0:
            intervals.append((cyc * ic, cyc * ic + config.sync_window_ns))
    for p in schedule.placements:
        if p.link.key != link.key:
            continue
        for cyc in p.cycles(schedule.cluster_cycles):
            intervals.append((cyc * ic + p.offset_ns, cyc * ic + p.end_ns))
    return merge_intervals(intervals)


def rc_worst_case_delay(schedule: TtSchedule, resolved_vls,
                        config: ScheduleConfig) -> RcDelayReport:
    """Per virtual link: sum over route links of TT blocking, one maximal
    frame from every other virtual link sharing the link, the frame's own
    transmission, and the switch delay on every hop but the last. For a
    multicast route the bound is the worst destination path.
    """
    sharing: dict[tuple[int, int], list[ResolvedVirtualLink]] = {}
    for vl in resolved_vls:
        for link in vl.links:
            sharing.setdefault(link.key, []).append(vl)

    blocking_cache: dict[tuple[tuple[int, int], int], int] = {}
    entries = []
    for vl in resolved_vls:
        rows = {}
        for link in vl.links:
            cache_key = (link.key, vl.max_frame_bits)
            if cache_key not in blocking_cache:
                busy = link_busy_intervals(schedule, link, config)
                blocking_cache[cache_key] = tt_blocking(
                    busy, vl.max_frame_bits, link.bandwidth_bps, config)
            interference = sum(
                transmission_time(other.max_frame_bits, link.bandwidth_bps)
                for other in sharing[link.key] if other.id != vl.id)
            nonfinal = any(link in path[:-1] for path in vl.paths)
            rows[link.key] = RcDelayRow(
                link=link.key,
                tt_blocking_ns=blocking_cache[cache_key],
                interference_ns=interference,
                transmission_ns=transmission_time(vl.max_frame_bits,
                                                  link.bandwidth_bps),
                hop_delay_ns=config.switch_delay_ns if nonfinal else 0)
        bound = 0
        for path in vl.paths:
            total = 0
            for position, link in enumerate(path):
                row = rows[link.key]
                total += row.tt_blocking_ns + row.interference_ns + row.transmission_ns
                if position + 1 < len(path):
                    total += config.switch_delay_ns
            bound = max(bound, total)
        entries.append(RcDelayEntry(
            virtual_link=vl.id, bound_ns=bound,
            rows=tuple(rows[k] for k in sorted(rows))))
    return RcDelayReport(label=RC_BOUND_LABEL, entries=tuple(entries))
