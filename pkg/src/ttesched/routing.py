"""Shortest-path routing and expansion of messages into per-link instances.

Every link has unit weight, so routes minimize hop count. Ties are broken
toward the smallest node id, which makes routing deterministic and lets
the per-receiver paths of one message merge into a tree.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .errors import RoutingError, UnreachablePairError
from .model import Link, MessageSpec, NetworkTopology, transmission_time

_INF = 10 ** 9


@dataclass(frozen=True)
class RoutingTable:
    """All-pairs hop distances plus deterministic path reconstruction.

    Paths are built backward from the target: the predecessor of a node is
    its smallest-id in-neighbor that lies one hop closer to the source.
    Because the predecessor depends only on (source, node), all paths out
    of one source form a tree.
    """

    topology: NetworkTopology
    dist: dict[tuple[int, int], int]
    next_hop: dict[tuple[int, int], int]

    def distance(self, source: int, dest: int) -> int:
        return self.dist[(source, dest)]

    def path_nodes(self, source: int, dest: int) -> tuple[int, ...]:
        """Node sequence of the canonical shortest path."""
        if source == dest:
            return (source,)
        if (source, dest) not in self.dist:
            raise RoutingError(f"unknown node pair ({source}, {dest})")
        nodes = [dest]
        current = dest
        while current != source:
            want = self.dist[(source, current)] - 1
            current = self._predecessor(source, current, want)
            nodes.append(current)
        nodes.reverse()
        return tuple(nodes)

    def _predecessor(self, source: int, node: int, want: int) -> int:
        for candidate in self.topology.in_neighbors[node]:
            if self.dist[(source, candidate)] == want:
                return candidate
        raise RoutingError(f"no predecessor of node {node} toward source {source}")

    def path_links(self, source: int, dest: int) -> tuple[Link, ...]:
        nodes = self.path_nodes(source, dest)
        link_map = self.topology.link_map
        return tuple(link_map[(a, b)] for a, b in zip(nodes, nodes[1:]))


def all_pairs_shortest_paths(topology: NetworkTopology) -> RoutingTable:
    """Floyd-Warshall over unit link weights.

    Raises :class:`UnreachablePairError` naming the first node pair without
    a route (only possible for a disconnected graph).
    """
    ids = sorted(n.id for n in topology.nodes)
    dist = {(a, b): 0 if a == b else _INF for a in ids for b in ids}
    for link in topology.links:
        dist[(link.source, link.dest)] = 1
    for k in ids:
        for i in ids:
            d_ik = dist[(i, k)]
            if d_ik >= _INF:
                continue
            for j in ids:
                via = d_ik + dist[(k, j)]
                if via < dist[(i, j)]:
                    dist[(i, j)] = via
    for a in ids:
        for b in ids:
            if dist[(a, b)] >= _INF:
                raise UnreachablePairError(a, b)

    in_neighbors = topology.in_neighbors

    def first_hop(a: int, b: int) -> int:
        # Walk the canonical path backward from b until one step from a.
        current = b
        while dist[(a, current)] > 1:
            want = dist[(a, current)] - 1
            current = next(c for c in in_neighbors[current] if dist[(a, c)] == want)
        return current

    next_hop = {(a, b): first_hop(a, b) for a in ids for b in ids if a != b}
    return RoutingTable(topology=topology, dist=dist, next_hop=next_hop)


@dataclass(frozen=True)
class RouteTree:
    """Multicast routing of one message: a tree of links rooted at the sender."""

    message: int
    root: int
    edges: tuple[Link, ...]
    paths: dict[int, tuple[Link, ...]]

    @cached_property
    def parent_of(self) -> dict[Link, Link | None]:
        """Link feeding each tree link (None for links leaving the sender)."""
        incoming = {link.dest: link for link in self.edges}
        return {link: incoming.get(link.source) for link in self.edges}

    @cached_property
    def children_of(self) -> dict[Link, tuple[Link, ...]]:
        children: dict[Link, list[Link]] = {link: [] for link in self.edges}
        for link, parent in self.parent_of.items():
            if parent is not None:
                children[parent].append(link)
        return {link: tuple(kids) for link, kids in children.items()}

    @cached_property
    def root_links(self) -> tuple[Link, ...]:
        return tuple(l for l in self.edges if l.source == self.root)

    @cached_property
    def final_links(self) -> dict[int, Link]:
        """Last link before each receiver."""
        return {receiver: path[-1] for receiver, path in self.paths.items()}


def route_message(message: MessageSpec, table: RoutingTable) -> RouteTree:
    """Union of canonical shortest paths to each receiver, merged into a tree."""
    known = {n.id for n in table.topology.nodes}
    if message.sender not in known:
        raise RoutingError(f"message {message.id}: sender {message.sender} not in topology")
    edges: dict[Link, None] = {}
    paths = {}
    for receiver in sorted(message.receivers):
        if receiver not in known:
            raise RoutingError(f"message {message.id}: receiver {receiver} not in topology")
        try:
            path = table.path_links(message.sender, receiver)
        except (KeyError, RoutingError) as exc:
            raise RoutingError(
                f"message {message.id}: receiver {receiver} unreachable") from exc
        paths[receiver] = path
        for link in path:
            edges.setdefault(link, None)
    return RouteTree(message=message.id, root=message.sender,
                     edges=tuple(edges), paths=paths)


def route_all(messages, table: RoutingTable) -> dict[int, RouteTree]:
    return {m.id: route_message(m, table) for m in sorted(messages, key=lambda m: m.id)}


def message_instances(trees, messages) -> tuple[tuple[int, Link, int], ...]:
    """Flatten route trees into (message id, link, transmission time) rows.

    One row per link a message passes; shared prefixes of multicast paths
    appear once.
    """
    by_id = {m.id: m for m in messages}
    rows = []
    for mid in sorted(trees):
        tree = trees[mid]
        spec = by_id[mid]
        for link in tree.edges:
            rows.append((mid, link, transmission_time(spec.length_bits, link.bandwidth_bps)))
    return tuple(rows)
