"""Run a scenario end to end and collect metrics, invariant counters and a trace."""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import state as sm
from .agent import MAX_DEPTH, Delivery, HybridNode, Transition
from .ids import NodeId, StreamId, node_key
from .messages import ControlMessage
from .netsim import Envelope, Network
from .scenario import Directive, ScenarioSpec
from .scene import ObjectState, supersedes

REPORT_SCHEMA = 1
FORMATS = ("json", "csv")

VIOLATION_KEYS = (
    "depth", "capacity", "redirect_legitimacy", "serving_coherence",
    "server_coherence", "convergence", "rejected_isolation", "self_listing",
)


def latency_stats(values) -> dict:
    if len(values) == 0:
        return {"count": 0, "min": None, "mean": None, "p99": None, "max": None}
    a = np.asarray(values, dtype=float)
    return {"count": int(a.size), "min": float(a.min()), "mean": float(a.mean()),
            "p99": float(np.percentile(a, 99)), "max": float(a.max())}


@dataclass
class MetricsReport:
    scenario: str
    seed: int
    t_end: float
    events: int = 0
    streams: dict = field(default_factory=dict)
    max_hop_count: int = 0
    messages: dict = field(default_factory=dict)
    transitions: dict = field(default_factory=dict)
    final_states: dict = field(default_factory=dict)
    join_peers: dict = field(default_factory=dict)
    counters: dict = field(default_factory=dict)
    violations: dict = field(default_factory=lambda: {k: 0 for k in VIOLATION_KEYS})

    @property
    def violation_total(self) -> int:
        return sum(self.violations.values())

    @property
    def exit_status(self) -> int:
        return 1 if self.violation_total else 0

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "scenario": self.scenario,
            "seed": self.seed,
            "t_end": self.t_end,
            "events": self.events,
            "streams": self.streams,
            "max_hop_count": self.max_hop_count,
            "messages": self.messages,
            "transitions": self.transitions,
            "final_states": self.final_states,
            "join_peers": self.join_peers,
            "counters": self.counters,
            "violations": self.violations,
        }


@dataclass
class RunResult:
    spec: ScenarioSpec
    report: MetricsReport
    nodes: dict[NodeId, HybridNode]
    network: Network
    trace: list[dict]
    mismatches: list[str]

    @property
    def exit_status(self) -> int:
        return self.report.exit_status

    def deliveries(self, stream: Optional[StreamId] = None) -> list[tuple[NodeId, Delivery]]:
        out = []
        for nid in sorted(self.nodes, key=node_key):
            for d in self.nodes[nid].deliveries:
                if stream is None or d.stream == stream:
                    out.append((nid, d))
        return out


class Auditor:
    """Structural invariants checked after every control event."""

    def __init__(self, nodes: dict[NodeId, HybridNode]):
        self.nodes = nodes
        self.counters = Counter()
        self.max_chain = 0

    def __call__(self, item) -> None:
        if isinstance(item, Envelope) and not isinstance(item.payload, ControlMessage):
            return
        self.check()

    def check(self) -> None:
        for nid, node in self.nodes.items():
            if not node.alive:
                continue
            if node.consumer_count() > node.qos.max_consumers:
                self.counters["capacity"] += 1
            if node.state is sm.NodeState.ACTIVE_FORWARDER:
                for s in node.local_streams:
                    e = node.producers.get(s)
                    if e is None or e.provider != nid:
                        self.counters["self_listing"] += 1
            for stream, entry in node.producers.items():
                if stream.origin == nid:
                    continue
                depth = self.chain_depth(stream, entry.provider)
                self.max_chain = max(self.max_chain, depth or 0)
                if depth is not None and depth > MAX_DEPTH:
                    self.counters["depth"] += 1

    def chain_depth(self, stream: StreamId, provider: NodeId) -> Optional[int]:
        """Hops from the origin to a consumer of ``provider``; None if the chain is broken."""
        depth = 1
        seen = set()
        while provider != stream.origin:
            if provider in seen:
                return MAX_DEPTH + 1
            seen.add(provider)
            up = self.nodes.get(provider)
            if up is None or not up.alive:
                return None
            e = up.producers.get(stream)
            if e is None:
                return None
            provider = e.provider
            depth += 1
        return depth


def _expected_object(node: HybridNode, nodes: dict[NodeId, HybridNode], obj: str):
    """LWW winner over every checkable stream bound to ``obj`` that ``node`` holds; None to skip."""
    best = None
    contributors = 0
    for stream in list(node.producers) + list(node.local_streams):
        if node.object_for(stream) != obj:
            continue
        origin = nodes.get(stream.origin)
        last = origin.last_published.get(stream) if origin else None
        if last is None:
            continue
        if stream.origin != node.id:
            entry = node.producers.get(stream)
            if entry is None or entry.since > last.origin_time:
                return None
        contributors += 1
        if best is None or supersedes(last, best):
            best = ObjectState.from_sample(last)
    return best if contributors else None


def check_convergence(nodes: dict[NodeId, HybridNode]) -> tuple[int, list[str]]:
    """Compare every replica with the origins' last published samples.

    Returns the number of objects compared and a description of each mismatch.
    """
    checked = 0
    mismatches = []
    for nid in sorted(nodes, key=node_key):
        node = nodes[nid]
        if not node.alive:
            continue
        objs = {node.object_for(s) for s in node.producers if s.origin != nid}
        for obj in sorted(objs):
            expected = _expected_object(node, nodes, obj)
            if expected is None:
                continue
            checked += 1
            got = node.scene.get(obj)
            if got != expected:
                mismatches.append(f"{nid}:{obj}: expected seq {expected.last_seq} "
                                  f"from {expected.last_source}, got "
                                  f"{None if got is None else (got.last_seq, got.last_source)}")
    return checked, mismatches


def check_rejected_isolation(nodes: dict[NodeId, HybridNode]) -> int:
    bad = 0
    for node in nodes.values():
        for stream in node.failed:
            if stream in node.producers:
                continue
            for other in nodes.values():
                if node.id in other.consumers.get(stream, {}):
                    bad += 1
    return bad


def build(spec: ScenarioSpec, record_trace: bool = True):
    trace: list[dict] = []
    recorder = trace.append if record_trace else None
    net = Network(spec.links, seed=spec.seed, recorder=recorder)

    def on_transition(tr: Transition) -> None:
        if record_trace:
            trace.append(tr.to_record())

    nodes = {}
    for ns in spec.nodes:
        nodes[ns.id] = HybridNode(ns.id, net, qos=ns.qos, sensors=ns.sensors,
                                  gui_script=ns.gui_script, timing=spec.timing,
                                  objects=spec.objects, on_transition=on_transition)
    for d in spec.timeline:
        net.schedule(d.at, d.node, _directive(nodes[d.node], d), _label(d))
    return net, nodes, trace


def _label(d: Directive) -> str:
    return f"directive:{d.action}:{d.node}" + (f":{d.stream.token}" if d.stream else "")


def _directive(node: HybridNode, d: Directive):
    if d.action == "join":
        return node.join
    if d.action == "leave":
        return node.leave
    if d.action == "subscribe":
        return lambda: node.want(d.stream)
    if d.action == "unsubscribe":
        return lambda: node.unsubscribe(d.stream)
    raise ValueError(d.action)


def run_scenario(spec: ScenarioSpec, record_trace: bool = True) -> RunResult:
    net, nodes, trace = build(spec, record_trace)
    auditor = Auditor(nodes)
    net.after_event = auditor
    events = net.run_until(spec.t_end)
    events += net.drain()
    auditor.check()

    checked, mismatches = check_convergence(nodes)
    report = MetricsReport(spec.name, spec.seed, spec.t_end, events)

    streams: dict[str, dict] = {}
    max_hop = 0
    per_stream: dict[StreamId, list[tuple[NodeId, Delivery]]] = {}
    for nid in sorted(nodes, key=node_key):
        for d in nodes[nid].deliveries:
            per_stream.setdefault(d.stream, []).append((nid, d))
    for stream in sorted(set(spec.streams()) | set(per_stream)):
        dl = per_stream.get(stream, [])
        by_hop: dict[int, list[float]] = {}
        counts: Counter = Counter()
        for nid, d in dl:
            by_hop.setdefault(d.hop_count, []).append(d.latency_ms)
            counts[nid] += 1
            max_hop = max(max_hop, d.hop_count)
        origin = nodes.get(stream.origin)
        streams[stream.token] = {
            "published": origin._seq.get(stream, 0) if origin else 0,
            "latency_ms": latency_stats([d.latency_ms for _, d in dl]),
            "latency_ms_by_hop": {str(h): latency_stats(v) for h, v in sorted(by_hop.items())},
            "deliveries": {n: counts[n] for n in sorted(counts, key=node_key)},
            "max_hop_count": max((d.hop_count for _, d in dl), default=0),
        }
    report.streams = streams
    report.max_hop_count = max_hop
    report.messages = {k: net.sent_by_kind[k] for k in sorted(net.sent_by_kind)}
    report.transitions = {
        nid: [[t.t, t.before.value, t.after.value, t.event.value, t.action.value]
              for t in nodes[nid].transitions]
        for nid in sorted(nodes, key=node_key)
    }
    report.final_states = {nid: nodes[nid].state.value for nid in sorted(nodes, key=node_key)}
    report.join_peers = {nid: (None if nodes[nid].join_result is None else
                               sorted(nodes[nid].join_result, key=node_key))
                         for nid in sorted(nodes, key=node_key)}

    counters: Counter = Counter()
    violations = {k: 0 for k in VIOLATION_KEYS}
    for node in nodes.values():
        for k, v in node.counters.items():
            if k.startswith("violation."):
                violations[k.split(".", 1)[1]] = violations.get(k.split(".", 1)[1], 0) + v
            else:
                counters[k] += v
        counters["artt_negative_samples"] += node.artt.counters["negative_rtt"]
    counters["convergence_checked"] = checked
    for k, v in net.counters.items():
        counters[f"net.{k}"] += v
    for k, v in auditor.counters.items():
        violations[k] = violations.get(k, 0) + v
    violations["convergence"] += len(mismatches)
    violations["rejected_isolation"] += check_rejected_isolation(nodes)
    if max_hop > MAX_DEPTH:
        violations["depth"] += 1
    report.counters = {k: counters[k] for k in sorted(counters)}
    report.violations = {k: violations[k] for k in sorted(violations)}
    return RunResult(spec, report, nodes, net, trace, mismatches)


# --- export -----------------------------------------------------------------

def _flatten(prefix: str, value, out: list) -> None:
    if isinstance(value, dict):
        for k in sorted(value, key=str):
            _flatten(f"{prefix}.{k}" if prefix else str(k), value[k], out)
    elif isinstance(value, list) and value and isinstance(value[0], list):
        for i, v in enumerate(value):
            out.append((f"{prefix}[{i}]", ";".join(map(str, v))))
    elif isinstance(value, list):
        out.append((prefix, ";".join(map(str, value))))
    else:
        out.append((prefix, "" if value is None else value))


def export(report: MetricsReport, fmt: str = "json") -> bytes:
    if fmt == "json":
        return (json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n").encode()
    if fmt == "csv":
        rows: list = []
        _flatten("", report.to_dict(), rows)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric", "value"])
        w.writerows(rows)
        return buf.getvalue().encode()
    raise ValueError(f"unknown export format {fmt!r}; expected one of {', '.join(FORMATS)}")


def export_trace(trace: list[dict]) -> bytes:
    return "".join(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n" for r in trace).encode()
