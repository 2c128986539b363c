"""Core domain types and elementary timing arithmetic.

All times are integer nanoseconds and transmission times round up, so
schedules are bit-reproducible and every validation is exact. The types
here are immutable after construction and safe to share between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

from .errors import InvalidConfigError, InvalidInputError, SemanticError

NS_PER_SEC = 1_000_000_000

#: Largest legal Ethernet frame (1530 bytes) in bits.
MAX_FRAME_BITS = 1530 * 8

#: Wire length of a minimal Ethernet frame: 64-byte frame plus 8 bytes of
#: preamble/SFD plus the 12-byte interframe gap. The synchronization slot
#: reserved at the start of each integration cycle defaults to one such
#: frame on the slowest link.
SYNC_FRAME_BITS = 672

#: Octets a frame occupies on the wire beyond its payload: 18 bytes of
#: Ethernet header and FCS, 8 bytes preamble/SFD, 12 bytes interframe gap.
#: A 46-byte payload therefore becomes 84 octets = 672 bits.
WIRE_OVERHEAD_BYTES = 38

ENDPOINT = "endpoint"
REDISTRIBUTION = "redistribution"

#: Recommended store-and-forward switch delay envelope, ns. Values outside
#: this range are accepted as explicit overrides.
SWITCH_DELAY_DEFAULT_NS = 1000
SWITCH_DELAY_RANGE_NS = (1000, 2400)


def transmission_time(length_bits: int, bandwidth_bps: int) -> int:
    """Time in ns to put ``length_bits`` on a link, rounded up."""
    if bandwidth_bps <= 0:
        raise InvalidConfigError(f"bandwidth must be positive, got {bandwidth_bps}")
    if length_bits < 0:
        raise InvalidInputError(f"frame length must be non-negative, got {length_bits}")
    return -(-length_bits * NS_PER_SEC // bandwidth_bps)


def derive_cycles(periods) -> tuple[int, int]:
    """Return (integration cycle, cluster cycle) = (gcd, lcm) of periods."""
    periods = list(periods)
    if not periods:
        raise InvalidInputError("cannot derive cycles from an empty period list")
    if any(p <= 0 for p in periods):
        raise InvalidInputError("periods must be positive")
    return math.gcd(*periods), math.lcm(*periods)


def wire_bits(payload_bytes: int) -> int:
    """Wire size in bits of a frame carrying ``payload_bytes`` of payload."""
    if payload_bytes < 0:
        raise InvalidInputError("payload must be non-negative")
    return (payload_bytes + WIRE_OVERHEAD_BYTES) * 8


@dataclass(frozen=True)
class Node:
    id: int
    kind: str

    def __post_init__(self):
        if self.kind not in (ENDPOINT, REDISTRIBUTION):
            raise SemanticError(f"node {self.id}: unknown kind '{self.kind}'")


@dataclass(frozen=True, order=True)
class Link:
    """One direction of a physical connection."""

    source: int
    dest: int
    bandwidth_bps: int

    def __post_init__(self):
        if self.source == self.dest:
            raise SemanticError(f"link {self.source}->{self.dest}: self-loops are not allowed")
        if self.bandwidth_bps <= 0:
            raise SemanticError(f"link {self.source}->{self.dest}: bandwidth must be positive")

    @property
    def key(self) -> tuple[int, int]:
        return (self.source, self.dest)

    def __str__(self) -> str:
        return f"{self.source}->{self.dest}"


@dataclass(frozen=True)
class NetworkTopology:
    """Directed link graph; both directions of a physical link are present."""

    nodes: tuple[Node, ...]
    links: tuple[Link, ...]

    def __post_init__(self):
        # Canonical member order makes serialization round-trips exact.
        object.__setattr__(self, "nodes",
                           tuple(sorted(self.nodes, key=lambda n: n.id)))
        object.__setattr__(self, "links", tuple(sorted(self.links)))
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise SemanticError("duplicate node ids in topology")
        id_set = set(ids)
        seen = set()
        for link in self.links:
            if link.source not in id_set or link.dest not in id_set:
                raise SemanticError(f"link {link}: endpoint not among nodes")
            if link.key in seen:
                raise SemanticError(f"duplicate link {link}")
            seen.add(link.key)
        for link in self.links:
            if (link.dest, link.source) not in seen:
                raise SemanticError(f"link {link}: reverse direction missing")
        self._check_connected(id_set)

    def _check_connected(self, id_set):
        if not self.nodes:
            raise SemanticError("topology has no nodes")
        adjacency: dict[int, list[int]] = {i: [] for i in id_set}
        for link in self.links:
            adjacency[link.source].append(link.dest)
        start = next(iter(sorted(id_set)))
        seen = {start}
        stack = [start]
        while stack:
            for nxt in adjacency[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        if seen != id_set:
            missing = sorted(id_set - seen)
            raise SemanticError(f"topology is not connected (unreached nodes {missing})")

    @cached_property
    def node_kinds(self) -> dict[int, str]:
        return {n.id: n.kind for n in self.nodes}

    @cached_property
    def endpoints(self) -> tuple[int, ...]:
        return tuple(sorted(n.id for n in self.nodes if n.kind == ENDPOINT))

    @cached_property
    def link_map(self) -> dict[tuple[int, int], Link]:
        return {l.key: l for l in self.links}

    @cached_property
    def out_neighbors(self) -> dict[int, tuple[int, ...]]:
        nb: dict[int, list[int]] = {n.id: [] for n in self.nodes}
        for link in self.links:
            nb[link.source].append(link.dest)
        return {i: tuple(sorted(v)) for i, v in nb.items()}

    @cached_property
    def in_neighbors(self) -> dict[int, tuple[int, ...]]:
        nb: dict[int, list[int]] = {n.id: [] for n in self.nodes}
        for link in self.links:
            nb[link.dest].append(link.source)
        return {i: tuple(sorted(v)) for i, v in nb.items()}

    def slowest_bandwidth(self) -> int:
        return min(l.bandwidth_bps for l in self.links)


@dataclass(frozen=True)
class MessageSpec:
    """One Time-Triggered message; lengths are wire bits including overhead."""

    id: int
    period_ns: int
    length_bits: int
    release_ns: int
    deadline_ns: int
    sender: int
    receivers: frozenset[int]

    def __post_init__(self):
        if not isinstance(self.receivers, frozenset):
            object.__setattr__(self, "receivers", frozenset(self.receivers))
        m = f"message {self.id}"
        if self.period_ns <= 0:
            raise SemanticError(f"{m}: period must be positive")
        if not 0 < self.length_bits <= MAX_FRAME_BITS:
            raise SemanticError(
                f"{m}: length {self.length_bits} bits outside (0, {MAX_FRAME_BITS}]")
        if self.release_ns < 0:
            raise SemanticError(f"{m}: release is negative")
        if self.release_ns > self.deadline_ns:
            raise SemanticError(f"{m}: release exceeds deadline")
        if self.deadline_ns > self.period_ns:
            raise SemanticError(f"{m}: deadline exceeds period")
        if not self.receivers:
            raise SemanticError(f"{m}: receiver set is empty")
        if self.sender in self.receivers:
            raise SemanticError(f"{m}: sender is also a receiver")

    def validate_against(self, topology: NetworkTopology) -> None:
        kinds = topology.node_kinds
        for node in [self.sender, *sorted(self.receivers)]:
            if node not in kinds:
                raise SemanticError(f"message {self.id}: node {node} not in topology")
            if kinds[node] != ENDPOINT:
                raise SemanticError(
                    f"message {self.id}: node {node} is not a communication endpoint")


@dataclass(frozen=True)
class VirtualLink:
    """Rate-Constrained channel: either an explicit link path or endpoints.

    ``bag_ns`` is the bandwidth allocation gap, the minimum spacing between
    consecutive frames of the channel.
    """

    id: int
    max_frame_bits: int
    bag_ns: int
    route: tuple[tuple[int, int], ...] | None = None
    source: int | None = None
    destinations: frozenset[int] | None = None

    def __post_init__(self):
        if self.destinations is not None and not isinstance(self.destinations, frozenset):
            object.__setattr__(self, "destinations", frozenset(self.destinations))
        v = f"virtual link {self.id}"
        if not 0 < self.max_frame_bits <= MAX_FRAME_BITS:
            raise SemanticError(f"{v}: frame size out of range")
        if self.bag_ns <= 0:
            raise SemanticError(f"{v}: bandwidth allocation gap must be positive")
        has_route = self.route is not None
        has_ends = self.source is not None and self.destinations is not None
        if has_route == has_ends:
            raise SemanticError(f"{v}: give either a route or source/destinations")
        if has_route:
            if not self.route:
                raise SemanticError(f"{v}: route is empty")
            for (a, b), (c, d) in zip(self.route, self.route[1:]):
                if b != c:
                    raise SemanticError(f"{v}: route links are not contiguous")
        elif not self.destinations:
            raise SemanticError(f"{v}: destination set is empty")


@dataclass(frozen=True)
class ScheduleConfig:
    """Resolved timing parameters shared by all scheduling stages."""

    integration_cycle_ns: int
    cluster_cycle_ns: int
    switch_delay_ns: int
    sync_window_ns: int

    def __post_init__(self):
        if self.integration_cycle_ns <= 0:
            raise InvalidConfigError("integration cycle must be positive")
        if self.cluster_cycle_ns % self.integration_cycle_ns != 0:
            raise InvalidConfigError("integration cycle must divide the cluster cycle")
        if self.switch_delay_ns < 0:
            raise InvalidConfigError("switch delay must be non-negative")
        if not 0 <= self.sync_window_ns < self.integration_cycle_ns:
            raise InvalidConfigError("sync window must lie in [0, integration cycle)")

    @property
    def cluster_cycles(self) -> int:
        return self.cluster_cycle_ns // self.integration_cycle_ns


def default_sync_window(topology: NetworkTopology) -> int:
    """Sync slot length: one minimal frame on the slowest link."""
    return transmission_time(SYNC_FRAME_BITS, topology.slowest_bandwidth())


def resolve_config(topology: NetworkTopology, messages, *,
                   integration_cycle_ns: int | None = None,
                   switch_delay_ns: int = SWITCH_DELAY_DEFAULT_NS,
                   sync_window_ns: int | None = None) -> ScheduleConfig:
    """Derive the full ScheduleConfig for an instance.

    The integration cycle defaults to the gcd of the message periods; an
    explicit override must still divide every period.
    """
    periods = [m.period_ns for m in messages]
    if periods:
        gcd, lcm = derive_cycles(periods)
    elif integration_cycle_ns is None:
        raise SemanticError("an instance without messages needs an explicit integration cycle")
    else:
        gcd = lcm = integration_cycle_ns
    ic = integration_cycle_ns if integration_cycle_ns is not None else gcd
    for m in messages:
        if m.period_ns % ic != 0:
            raise SemanticError(
                f"message {m.id}: period {m.period_ns} is not a multiple of the "
                f"integration cycle {ic}")
    cc = math.lcm(ic, lcm) if periods else ic
    sync = default_sync_window(topology) if sync_window_ns is None else sync_window_ns
    return ScheduleConfig(
        integration_cycle_ns=ic,
        cluster_cycle_ns=cc,
        switch_delay_ns=switch_delay_ns,
        sync_window_ns=sync,
    )
