"""Deterministic benchmark instance generation.

Topology kinds: a star (one switch), a snowflake (a star of stars), a
preferential-attachment random tree, and the same tree with extra
redundant links. Trees are post-processed so no internal node has degree
two, which removes long linear segments, and resampled until every
endpoint pair is within a small hop bound for the same reason. Message
parameters follow the benchmark conventions: payloads of 46..256 bytes
converted to wire bits, periods of the form 2^n * 3^m integration cycles,
random release/deadline windows with r < d <= t, and an integration cycle
of 1000 ns per message.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .errors import InvalidConfigError
from .model import (ENDPOINT, REDISTRIBUTION, Link, MessageSpec, Node,
                    NetworkTopology, VirtualLink, wire_bits)

TOPOLOGY_KINDS = ("star", "snowflake", "barabasi-albert-tree",
                  "random-with-redundant-links")

#: Per-message share of the integration cycle, ns.
IC_PER_MESSAGE_NS = 1000


@dataclass(frozen=True)
class GeneratorConfig:
    topology: str = "mixed"
    endpoints: int = 20
    messages: int = 20
    bandwidth_bps: int = 1_000_000_000
    payload_min_bytes: int = 46
    payload_max_bytes: int = 256
    #: Periods are 2^n * 3^m integration cycles with n in [0, max_doublings]
    #: and m in {0, 1}. Draws are weighted toward the base period: schedules
    #: pack tightly only when most messages repeat in most cycles, since a
    #: sparse-period frame must dodge every occupant of every cycle it uses.
    max_doublings: int = 2
    doubling_weights: tuple[float, ...] = (0.7, 0.2, 0.1)
    triple_probability: float = 0.1
    #: Geometric receiver-count parameter; mean receivers = 1/(1-p) capped
    #: at receiver_cap. The cap tames the per-link load tail, which keeps
    #: the instances schedulable under the porosity baseline as well.
    receiver_continue: float = 0.4
    receiver_cap: int = 4
    #: Releases are drawn from [0, ic / release_divisor]; deadlines from
    #: [t - ic / deadline_divisor, t].
    release_divisor: int = 16
    deadline_divisor: int = 16
    switch_delay_ns: int = 1000
    integration_cycle_ns: int | None = None
    seed: int = 0
    #: Trees are resampled until all endpoint pairs are within this many hops
    #: and no single link separates more than max_cut_endpoints endpoints
    #: from the rest (long linear segments and near-bisections concentrate
    #: load in ways real hub-dominated installations do not).
    max_route_hops: int = 4
    max_cut_endpoints: int = 7
    #: Spoke switches in the snowflake; default is isqrt(endpoints).
    snowflake_spokes: int | None = None
    #: Extra undirected switch-switch edges for the redundant variant.
    redundant_fraction: float = 0.2
    virtual_links: int = 0
    vl_payload_min_bytes: int = 512
    vl_payload_max_bytes: int = 1492

    def resolved_ic(self) -> int:
        if self.integration_cycle_ns is not None:
            return self.integration_cycle_ns
        return IC_PER_MESSAGE_NS * self.messages


def _rng(config: GeneratorConfig, stream: str) -> random.Random:
    return random.Random(f"{config.seed}:{stream}")


def _to_topology(switches, endpoint_ids, undirected_edges, bandwidth) -> NetworkTopology:
    nodes = [Node(i, REDISTRIBUTION) for i in sorted(switches)]
    nodes += [Node(i, ENDPOINT) for i in sorted(endpoint_ids)]
    links = []
    for a, b in sorted(undirected_edges):
        links.append(Link(a, b, bandwidth))
        links.append(Link(b, a, bandwidth))
    return NetworkTopology(nodes=tuple(nodes), links=tuple(links))


def _star(config: GeneratorConfig) -> NetworkTopology:
    hub = 0
    endpoints = range(1, config.endpoints + 1)
    edges = {(hub, e) for e in endpoints}
    return _to_topology([hub], endpoints, edges, config.bandwidth_bps)


def _snowflake(config: GeneratorConfig) -> NetworkTopology:
    """Hub switch, one ring of spoke switches, endpoints on the spokes."""
    spokes = config.snowflake_spokes or max(2, math.isqrt(config.endpoints))
    hub = 0
    spoke_ids = list(range(1, spokes + 1))
    endpoint_ids = list(range(spokes + 1, spokes + 1 + config.endpoints))
    edges = {(hub, s) for s in spoke_ids}
    for i, e in enumerate(endpoint_ids):
        edges.add((spoke_ids[i % spokes], e))
    return _to_topology([hub] + spoke_ids, endpoint_ids, edges, config.bandwidth_bps)


def _grow_attachment_tree(rng: random.Random, leaf_target: int):
    """Preferential-attachment tree grown until it has ``leaf_target`` leaves."""
    adjacency = {0: [1], 1: [0]}
    stubs = [0, 1]  # one entry per incident edge end; sampling it weights by degree
    while sum(1 for n, nb in adjacency.items() if len(nb) == 1) < leaf_target:
        new = len(adjacency)
        anchor = stubs[rng.randrange(len(stubs))]
        adjacency[new] = [anchor]
        adjacency[anchor].append(new)
        stubs.append(anchor)
        stubs.append(new)
    return adjacency


def _contract_degree_two(adjacency):
    """Remove internal nodes with exactly two neighbors, splicing the chain."""
    changed = True
    while changed:
        changed = False
        for node in sorted(adjacency):
            nb = adjacency[node]
            if len(nb) == 2:
                a, b = nb
                adjacency[a] = [x for x in adjacency[a] if x != node] + [b]
                adjacency[b] = [x for x in adjacency[b] if x != node] + [a]
                del adjacency[node]
                changed = True
                break
    return adjacency


def _tree_topology(config: GeneratorConfig, rng: random.Random) -> NetworkTopology:
    # The growth loop exits with exactly the requested leaf count, and
    # contraction never changes any remaining node's degree class.
    adjacency = _contract_degree_two(_grow_attachment_tree(rng, config.endpoints))
    leaves = sorted(n for n, nb in adjacency.items() if len(nb) == 1)
    switches = sorted(n for n in adjacency if n not in set(leaves))
    relabel = {old: i for i, old in enumerate(switches)}
    relabel.update({old: len(switches) + i for i, old in enumerate(leaves)})
    edges = set()
    for node, nb in adjacency.items():
        for other in nb:
            a, b = relabel[node], relabel[other]
            edges.add((min(a, b), max(a, b)))
    return _to_topology([relabel[s] for s in switches],
                        [relabel[e] for e in leaves], edges,
                        config.bandwidth_bps)


def _add_redundant_links(topology: NetworkTopology, config: GeneratorConfig,
                         rng: random.Random) -> NetworkTopology:
    switches = sorted(n.id for n in topology.nodes if n.kind == REDISTRIBUTION)
    extra = math.ceil(config.redundant_fraction * len(topology.nodes))
    present = {(l.source, l.dest) for l in topology.links}
    candidates = [(a, b) for i, a in enumerate(switches) for b in switches[i + 1:]
                  if (a, b) not in present]
    rng.shuffle(candidates)
    chosen = candidates[:extra]
    links = list(topology.links)
    for a, b in chosen:
        bw = config.bandwidth_bps
        links.append(Link(a, b, bw))
        links.append(Link(b, a, bw))
    return NetworkTopology(nodes=topology.nodes, links=tuple(sorted(links)))


def _endpoint_diameter(topology: NetworkTopology) -> int:
    """Largest hop distance between any two endpoints (BFS per endpoint)."""
    worst = 0
    for source in topology.endpoints:
        dist = {source: 0}
        frontier = [source]
        while frontier:
            nxt = []
            for node in frontier:
                for other in topology.out_neighbors[node]:
                    if other not in dist:
                        dist[other] = dist[node] + 1
                        nxt.append(other)
            frontier = nxt
        worst = max(worst, max(dist[e] for e in topology.endpoints))
    return worst


def _max_edge_cut(topology: NetworkTopology) -> int:
    """Most endpoints any single tree edge separates from the rest."""
    endpoints = set(topology.endpoints)
    undirected = {(l.source, l.dest) for l in topology.links if l.source < l.dest}
    worst = 0
    for a, b in sorted(undirected):
        seen = {a}
        stack = [a]
        while stack:
            node = stack.pop()
            for other in topology.out_neighbors[node]:
                if other not in seen and not (node == a and other == b):
                    seen.add(other)
                    stack.append(other)
        if b in seen:
            continue  # edge on a cycle, not a separator
        side = len(seen & endpoints)
        worst = max(worst, min(side, len(endpoints) - side))
    return worst


def generate_topology(config: GeneratorConfig) -> NetworkTopology:
    """Build the requested topology kind, deterministically from the seed."""
    kind = config.topology
    rng = _rng(config, "topology")
    if kind == "mixed":
        kind = TOPOLOGY_KINDS[rng.randrange(len(TOPOLOGY_KINDS))]
    if config.endpoints < 2:
        raise InvalidConfigError("at least two endpoints are required")
    if kind == "star":
        return _star(config)
    if kind == "snowflake":
        return _snowflake(config)
    if kind not in TOPOLOGY_KINDS:
        raise InvalidConfigError(f"unknown topology kind '{config.topology}'")

    best = None
    for attempt in range(64):
        topology = _tree_topology(config, rng)
        if kind == "random-with-redundant-links":
            topology = _add_redundant_links(topology, config, rng)
        diameter = _endpoint_diameter(topology)
        cut = _max_edge_cut(topology)
        score = (max(diameter - config.max_route_hops, 0),
                 max(cut - config.max_cut_endpoints, 0))
        if best is None or score < best[0]:
            best = (score, topology)
        if score == (0, 0):
            return topology
    return best[1]


def generate_messages(topology: NetworkTopology,
                      config: GeneratorConfig) -> tuple[MessageSpec, ...]:
    """Random message set over the topology's endpoints."""
    if len(topology.endpoints) < 2:
        raise InvalidConfigError("topology has fewer than two endpoints")
    rng = _rng(config, "messages")
    ic = config.resolved_ic()
    endpoints = list(topology.endpoints)
    messages = []
    for mid in range(config.messages):
        sender = endpoints[rng.randrange(len(endpoints))]
        cap = min(config.receiver_cap, len(endpoints) - 1)
        count = 1
        while rng.random() < config.receiver_continue and count < cap:
            count += 1
        others = [e for e in endpoints if e != sender]
        receivers = frozenset(rng.sample(others, count))
        payload = rng.randint(config.payload_min_bytes, config.payload_max_bytes)
        weights = config.doubling_weights[:config.max_doublings + 1]
        n = rng.choices(range(len(weights)), weights=weights)[0]
        m = 1 if rng.random() < config.triple_probability else 0
        period = (2 ** n) * (3 ** m) * ic
        release = rng.randint(0, ic // config.release_divisor)
        deadline = rng.randint(period - ic // config.deadline_divisor, period)
        messages.append(MessageSpec(
            id=mid, period_ns=period, length_bits=wire_bits(payload),
            release_ns=release, deadline_ns=deadline,
            sender=sender, receivers=receivers))
    return tuple(messages)


def generate_virtual_links(topology: NetworkTopology,
                           config: GeneratorConfig) -> tuple[VirtualLink, ...]:
    """Unicast RC channels between random endpoint pairs."""
    rng = _rng(config, "virtual-links")
    endpoints = list(topology.endpoints)
    out = []
    for vid in range(config.virtual_links):
        source = endpoints[rng.randrange(len(endpoints))]
        dest = rng.choice([e for e in endpoints if e != source])
        payload = rng.randint(config.vl_payload_min_bytes, config.vl_payload_max_bytes)
        bag_ms = rng.choice((1, 2, 4, 8))
        out.append(VirtualLink(
            id=vid, max_frame_bits=wire_bits(payload), bag_ns=bag_ms * 1_000_000,
            source=source, destinations=frozenset({dest})))
    return tuple(out)
