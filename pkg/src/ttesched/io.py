"""Versioned, canonical file formats.

Everything is JSON with units spelled out in the field names and a schema
tag in the document head. Serialization is canonical (sorted keys, sorted
collections, two-space indent, trailing newline), so equal in-memory
values produce identical bytes and re-runs diff clean. Parsers reject
unknown fields by name and never raise anything but the structured
diagnostics from :mod:`ttesched.errors`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import (InternalConsistencyError, ParseError, SemanticError,
                     UnknownFieldError)
from .model import (Link, MessageSpec, NetworkTopology, Node, ScheduleConfig,
                    VirtualLink, resolve_config, transmission_time)
from .scheduler import Placement, TtSchedule

INSTANCE_SCHEMA = "tt-instance/1"
SCHEDULE_SCHEMA = "tt-schedule/1"
REPORT_SCHEMA = "tt-report/1"
GANTT_SCHEMA = "tt-gantt/1"
BENCH_SCHEMA = "tt-bench/1"


@dataclass(frozen=True)
class ConfigSection:
    """Optional overrides carried verbatim in the instance file."""

    integration_cycle_ns: int | None = None
    switch_delay_ns: int = 1000
    sync_window_ns: int | None = None


@dataclass(frozen=True)
class InstanceFile:
    topology: NetworkTopology
    messages: tuple[MessageSpec, ...]
    config: ConfigSection = ConfigSection()
    virtual_links: tuple[VirtualLink, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "messages",
                           tuple(sorted(self.messages, key=lambda m: m.id)))
        object.__setattr__(self, "virtual_links",
                           tuple(sorted(self.virtual_links, key=lambda v: v.id)))

    def resolve(self) -> ScheduleConfig:
        return resolve_config(
            self.topology, self.messages,
            integration_cycle_ns=self.config.integration_cycle_ns,
            switch_delay_ns=self.config.switch_delay_ns,
            sync_window_ns=self.config.sync_window_ns)


def canonical_json(document) -> bytes:
    return (json.dumps(document, indent=2, sort_keys=True) + "\n").encode()


def _require(obj, context: str, required: tuple[str, ...],
             optional: tuple[str, ...] = ()) -> None:
    if not isinstance(obj, dict):
        raise ParseError(f"{context}: expected an object")
    for key in obj:
        if key not in required and key not in optional:
            raise UnknownFieldError(f"{context}.{key}")
    for key in required:
        if key not in obj:
            raise ParseError(f"{context}: missing field '{key}'")


_MISSING = object()


def _int(obj, context: str, key: str, default=_MISSING):
    if key not in obj:
        if default is _MISSING:
            raise ParseError(f"{context}: missing field '{key}'")
        return default
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"{context}.{key}: expected an integer")
    return value


def _opt_int(obj, context: str, key: str):
    value = obj.get(key)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"{context}.{key}: expected an integer or null")
    return value


def _int_list(value, context: str):
    if not isinstance(value, list) or any(
            isinstance(v, bool) or not isinstance(v, int) for v in value):
        raise ParseError(f"{context}: expected a list of integers")
    return value


def _load(data) -> dict:
    if isinstance(data, bytes):
        data = data.decode("utf-8", errors="replace")
    try:
        return json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None


def parse_instance(data: bytes | str) -> InstanceFile:
    """Parse and fully validate an instance document."""
    doc = _load(data)
    _require(doc, "instance", ("schema", "topology", "messages"),
             ("config", "virtual_links"))
    if doc["schema"] != INSTANCE_SCHEMA:
        raise ParseError(f"instance.schema: expected '{INSTANCE_SCHEMA}', "
                         f"got '{doc['schema']}'")

    topo = doc["topology"]
    _require(topo, "topology", ("nodes", "links"))
    nodes = []
    for i, node in enumerate(topo["nodes"]):
        ctx = f"topology.nodes[{i}]"
        _require(node, ctx, ("id", "kind"))
        kind = node["kind"]
        if not isinstance(kind, str):
            raise ParseError(f"{ctx}.kind: expected a string")
        nodes.append(Node(id=_int(node, ctx, "id"), kind=kind))
    links = []
    for i, link in enumerate(topo["links"]):
        ctx = f"topology.links[{i}]"
        _require(link, ctx, ("source", "dest", "bandwidth_bps"))
        links.append(Link(source=_int(link, ctx, "source"),
                          dest=_int(link, ctx, "dest"),
                          bandwidth_bps=_int(link, ctx, "bandwidth_bps")))
    topology = NetworkTopology(nodes=tuple(nodes), links=tuple(links))

    messages = []
    seen_ids = set()
    for i, msg in enumerate(doc["messages"]):
        ctx = f"messages[{i}]"
        _require(msg, ctx, ("id", "period_ns", "length_bits", "release_ns",
                            "deadline_ns", "sender", "receivers"))
        spec = MessageSpec(
            id=_int(msg, ctx, "id"),
            period_ns=_int(msg, ctx, "period_ns"),
            length_bits=_int(msg, ctx, "length_bits"),
            release_ns=_int(msg, ctx, "release_ns"),
            deadline_ns=_int(msg, ctx, "deadline_ns"),
            sender=_int(msg, ctx, "sender"),
            receivers=frozenset(_int_list(msg["receivers"], f"{ctx}.receivers")))
        if spec.id in seen_ids:
            raise SemanticError(f"duplicate message id {spec.id}")
        seen_ids.add(spec.id)
        spec.validate_against(topology)
        messages.append(spec)

    config = ConfigSection()
    if "config" in doc:
        ctx = "config"
        _require(doc["config"], ctx, (),
                 ("integration_cycle_ns", "switch_delay_ns", "sync_window_ns"))
        config = ConfigSection(
            integration_cycle_ns=_opt_int(doc["config"], ctx, "integration_cycle_ns"),
            switch_delay_ns=_int(doc["config"], ctx, "switch_delay_ns", 1000),
            sync_window_ns=_opt_int(doc["config"], ctx, "sync_window_ns"))

    virtual_links = []
    seen_vl = set()
    for i, vl in enumerate(doc.get("virtual_links", [])):
        ctx = f"virtual_links[{i}]"
        _require(vl, ctx, ("id", "max_frame_bits", "bag_ns"),
                 ("route", "source", "destinations"))
        route = None
        if "route" in vl:
            raw = vl["route"]
            if not isinstance(raw, list):
                raise ParseError(f"{ctx}.route: expected a list of [source, dest] pairs")
            route = tuple(tuple(_int_list(hop, f"{ctx}.route[{k}]"))
                          for k, hop in enumerate(raw))
            if any(len(hop) != 2 for hop in route):
                raise ParseError(f"{ctx}.route: each hop must be a [source, dest] pair")
        destinations = None
        if "destinations" in vl:
            destinations = frozenset(_int_list(vl["destinations"], f"{ctx}.destinations"))
        spec = VirtualLink(
            id=_int(vl, ctx, "id"),
            max_frame_bits=_int(vl, ctx, "max_frame_bits"),
            bag_ns=_int(vl, ctx, "bag_ns"),
            route=route,
            source=_opt_int(vl, ctx, "source"),
            destinations=destinations)
        if spec.id in seen_vl:
            raise SemanticError(f"duplicate virtual link id {spec.id}")
        seen_vl.add(spec.id)
        virtual_links.append(spec)

    instance = InstanceFile(topology=topology, messages=tuple(messages),
                            config=config, virtual_links=tuple(virtual_links))
    instance.resolve()  # surfaces config-level invariant violations
    return instance


def serialize_instance(instance: InstanceFile) -> bytes:
    doc = {
        "schema": INSTANCE_SCHEMA,
        "topology": {
            "nodes": [{"id": n.id, "kind": n.kind}
                      for n in sorted(instance.topology.nodes, key=lambda n: n.id)],
            "links": [{"source": l.source, "dest": l.dest,
                       "bandwidth_bps": l.bandwidth_bps}
                      for l in sorted(instance.topology.links)],
        },
        "messages": [{
            "id": m.id, "period_ns": m.period_ns, "length_bits": m.length_bits,
            "release_ns": m.release_ns, "deadline_ns": m.deadline_ns,
            "sender": m.sender, "receivers": sorted(m.receivers),
        } for m in sorted(instance.messages, key=lambda m: m.id)],
        "config": {
            "integration_cycle_ns": instance.config.integration_cycle_ns,
            "switch_delay_ns": instance.config.switch_delay_ns,
            "sync_window_ns": instance.config.sync_window_ns,
        },
    }
    if instance.virtual_links:
        vls = []
        for vl in sorted(instance.virtual_links, key=lambda v: v.id):
            entry = {"id": vl.id, "max_frame_bits": vl.max_frame_bits,
                     "bag_ns": vl.bag_ns}
            if vl.route is not None:
                entry["route"] = [list(hop) for hop in vl.route]
            else:
                entry["source"] = vl.source
                entry["destinations"] = sorted(vl.destinations)
            vls.append(entry)
        doc["virtual_links"] = vls
    return canonical_json(doc)


def write_schedule(schedule: TtSchedule, instance: InstanceFile,
                   manifest_hash: str | None = None) -> bytes:
    """Canonical schedule document; placements ordered by message then link."""
    known_messages = {m.id for m in instance.messages}
    link_map = instance.topology.link_map
    for p in schedule.placements:
        if p.message not in known_messages:
            raise InternalConsistencyError(
                f"schedule references unknown message {p.message}")
        if p.link.key not in link_map:
            raise InternalConsistencyError(
                f"schedule references unknown link {p.link}")
    metrics = {"makespan_ns": schedule.makespan_ns}
    if schedule.critical_gap_ns is not None:
        metrics["critical_gap_ns"] = schedule.critical_gap_ns
    if schedule.lower_bound_ns is not None:
        metrics["lower_bound_ns"] = schedule.lower_bound_ns
        metrics["lower_bound_optimal"] = schedule.lower_bound_optimal
    if schedule.min_preserved_gap_ns is not None:
        metrics["min_preserved_gap_ns"] = schedule.min_preserved_gap_ns
    doc = {
        "schema": SCHEDULE_SCHEMA,
        "manifest_hash": manifest_hash,
        "objective": schedule.objective,
        "feasible": schedule.feasible,
        "first_cycle": [{"message": mid, "cycle": schedule.first_cycle[mid]}
                        for mid in sorted(schedule.first_cycle)],
        "placements": [{
            "message": p.message, "source": p.link.source, "dest": p.link.dest,
            "offset_ns": p.offset_ns,
        } for p in sorted(schedule.placements,
                          key=lambda p: (p.message, p.link.key))],
        "metrics": metrics,
    }
    return canonical_json(doc)


def parse_schedule(data: bytes | str, instance: InstanceFile) -> TtSchedule:
    """Rebuild a TtSchedule against its instance; durations are recomputed."""
    doc = _load(data)
    _require(doc, "schedule", ("schema", "first_cycle", "placements", "metrics"),
             ("manifest_hash", "objective", "feasible"))
    if doc["schema"] != SCHEDULE_SCHEMA:
        raise ParseError(f"schedule.schema: expected '{SCHEDULE_SCHEMA}', "
                         f"got '{doc['schema']}'")
    config = instance.resolve()
    messages = {m.id: m for m in instance.messages}
    link_map = instance.topology.link_map

    first_cycle = {}
    for i, row in enumerate(doc["first_cycle"]):
        ctx = f"schedule.first_cycle[{i}]"
        _require(row, ctx, ("message", "cycle"))
        first_cycle[_int(row, ctx, "message")] = _int(row, ctx, "cycle")

    placements = []
    for i, row in enumerate(doc["placements"]):
        ctx = f"schedule.placements[{i}]"
        _require(row, ctx, ("message", "source", "dest", "offset_ns"))
        mid = _int(row, ctx, "message")
        key = (_int(row, ctx, "source"), _int(row, ctx, "dest"))
        if mid not in messages:
            raise SemanticError(f"{ctx}: unknown message {mid}")
        if key not in link_map:
            raise SemanticError(f"{ctx}: unknown link {key[0]}->{key[1]}")
        if mid not in first_cycle:
            raise SemanticError(f"{ctx}: message {mid} has no cycle assignment")
        spec = messages[mid]
        link = link_map[key]
        placements.append(Placement(
            message=mid, link=link, offset_ns=_int(row, ctx, "offset_ns"),
            duration_ns=transmission_time(spec.length_bits, link.bandwidth_bps),
            first_cycle=first_cycle[mid],
            period_cycles=spec.period_ns // config.integration_cycle_ns))

    metrics = doc["metrics"]
    _require(metrics, "schedule.metrics", ("makespan_ns",),
             ("critical_gap_ns", "lower_bound_ns", "lower_bound_optimal",
              "min_preserved_gap_ns"))
    return TtSchedule(
        objective=doc.get("objective", "makespan"),
        placements=tuple(sorted(placements, key=lambda p: (p.message, p.link.key))),
        first_cycle=first_cycle,
        makespan_ns=_int(metrics, "schedule.metrics", "makespan_ns"),
        feasible=bool(doc.get("feasible", True)),
        cycle_ns=config.integration_cycle_ns,
        cluster_cycles=config.cluster_cycles,
        sync_window_ns=config.sync_window_ns,
        lower_bound_ns=_opt_int(metrics, "schedule.metrics", "lower_bound_ns"),
        lower_bound_optimal=metrics.get("lower_bound_optimal"),
        critical_gap_ns=_opt_int(metrics, "schedule.metrics", "critical_gap_ns"),
        min_preserved_gap_ns=_opt_int(metrics, "schedule.metrics",
                                      "min_preserved_gap_ns"))


def write_gantt(schedule: TtSchedule, instance: InstanceFile,
                manifest_hash: str | None = None) -> bytes:
    """Delimiter-separated timeline: one row per occupied interval per
    (link, integration cycle), sync slots included."""
    config = instance.resolve()
    lines = [f"# {GANTT_SCHEMA} manifest_hash={manifest_hash or '-'}",
             "link_source,link_dest,cycle,kind,message,start_ns,end_ns"]
    rows = []
    for link in sorted(instance.topology.links):
        for cyc in range(config.cluster_cycles):
            if config.sync_window_ns > 0:
                rows.append((link.source, link.dest, cyc, "sync", "",
                             0, config.sync_window_ns))
    for p in sorted(schedule.placements, key=lambda p: (p.link.key, p.message)):
        for cyc in p.cycles(schedule.cluster_cycles):
            rows.append((p.link.source, p.link.dest, cyc, "tt", p.message,
                         p.offset_ns, p.end_ns))
    rows.sort(key=lambda r: (r[0], r[1], r[2], r[5], str(r[4])))
    for r in rows:
        lines.append(",".join(str(x) for x in r))
    return ("\n".join(lines) + "\n").encode()
