"""Scenario documents: parsing, validation and the built-in deployments.

A scenario is a YAML document (``schema: 1``) describing nodes, links,
protocol timing and a timeline of join/leave/subscribe/unsubscribe
directives. :func:`load_scenario` reports every validation problem at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Optional

import yaml

from .agent import ProtocolTiming
from .ids import NodeId, SourceKind, StreamId
from .netsim import LinkModel
from .qos import QosConfig
from .sensors import (Circle, Fixed, GuiScript, Keyframe, Rotate, ScriptEntry, Scripted,
                      SensorConfig, SetPose, Translate)

SCHEMA_VERSION = 1
ACTIONS = ("join", "leave", "subscribe", "unsubscribe")


class ScenarioError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid scenario:\n  " + "\n  ".join(self.errors))


@dataclass(frozen=True)
class NodeSpec:
    id: NodeId
    qos: QosConfig = QosConfig()
    sensors: tuple[SensorConfig, ...] = ()
    gui_script: GuiScript = field(default_factory=GuiScript)

    def streams(self) -> list[StreamId]:
        out = [StreamId(self.id, SourceKind.SENSOR, i) for i in range(len(self.sensors))]
        if self.gui_script:
            out.append(StreamId(self.id, SourceKind.GUI, 0))
        return out


@dataclass(frozen=True)
class Directive:
    at: float
    action: str
    node: NodeId
    stream: Optional[StreamId] = None


@dataclass(frozen=True)
class ScenarioSpec:
    nodes: tuple[NodeSpec, ...]
    links: LinkModel = LinkModel()
    timeline: tuple[Directive, ...] = ()
    seed: int = 0
    t_end: float = 10_000.0
    timing: ProtocolTiming = ProtocolTiming()
    objects: dict = field(default_factory=dict)  # StreamId -> object id
    name: str = "scenario"
    description: str = ""

    def node(self, node_id: NodeId) -> NodeSpec:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def streams(self) -> list[StreamId]:
        return [s for n in self.nodes for s in n.streams()]

    def with_overrides(self, seed: Optional[int] = None, t_end: Optional[float] = None) -> "ScenarioSpec":
        kw: dict[str, Any] = {}
        if seed is not None:
            kw["seed"] = seed
        if t_end is not None:
            kw["t_end"] = float(t_end)
        return replace(self, **kw) if kw else self


# --- parsing ---------------------------------------------------------------

TOP_KEYS = {"schema", "name", "description", "seed", "t_end", "links", "timing", "nodes", "timeline", "objects"}
LINK_KEYS = {"base_latency_ms", "bandwidth_bps", "overrides", "jitter"}
NODE_KEYS = {"id", "qos", "sensors", "gui_script"}
QOS_KEYS = {"max_consumers", "artt_threshold_ms", "ping_period_ms", "window"}
SENSOR_KEYS = {"rate_hz", "trajectory", "start_ms", "stop_ms"}
TIMING_KEYS = {"join_timeout_ms", "subscribe_timeout_ms", "retry_backoff_ms", "max_retries", "gui_idle_timeout_ms"}


class _Collector:
    def __init__(self):
        self.errors: list[str] = []

    def err(self, msg: str) -> None:
        self.errors.append(msg)

    def keys(self, where: str, mapping: Any, allowed: set) -> dict:
        if mapping is None:
            return {}
        if not isinstance(mapping, dict):
            self.err(f"{where}: expected a mapping")
            return {}
        for k in mapping:
            if k not in allowed:
                self.err(f"{where}: unknown key {k!r}")
        return mapping

    def build(self, where: str, fn, *args, **kw):
        try:
            return fn(*args, **kw)
        except (TypeError, ValueError) as exc:
            self.err(f"{where}: {exc}")
            return None


def _vec(v, n, where, c: _Collector):
    if not isinstance(v, (list, tuple)) or len(v) != n:
        c.err(f"{where}: expected a list of {n} numbers")
        return None
    try:
        return tuple(float(x) for x in v)
    except (TypeError, ValueError):
        c.err(f"{where}: expected numbers")
        return None


def _trajectory(doc, where, c: _Collector):
    if doc is None:
        return Circle(0.5, 10.0)
    if not isinstance(doc, dict) or len(doc) != 1:
        c.err(f"{where}: trajectory must be one of circle/fixed/scripted")
        return None
    (kind, body), = doc.items()
    body = body or {}
    if kind == "circle":
        c.keys(where + ".circle", body, {"radius", "period_s", "plane"})
        return c.build(where, Circle, float(body.get("radius", 0.5)), float(body.get("period_s", 10.0)),
                       body.get("plane", "xy"))
    if kind == "fixed":
        c.keys(where + ".fixed", body, {"position", "orientation"})
        pos = _vec(body.get("position", [0, 0, 0]), 3, where + ".position", c)
        q = _vec(body.get("orientation", [1, 0, 0, 0]), 4, where + ".orientation", c)
        return c.build(where, Fixed, pos, q) if pos and q else None
    if kind == "scripted":
        c.keys(where + ".scripted", body, {"keyframes"})
        frames = []
        for i, kf in enumerate(body.get("keyframes") or []):
            c.keys(f"{where}.keyframes[{i}]", kf, {"t", "position", "orientation"})
            pos = _vec(kf.get("position"), 3, f"{where}.keyframes[{i}].position", c)
            q = _vec(kf.get("orientation", [1, 0, 0, 0]), 4, f"{where}.keyframes[{i}].orientation", c)
            if pos and q:
                frames.append(Keyframe(float(kf.get("t", 0.0)), pos, q))
        return c.build(where, Scripted, tuple(frames))
    c.err(f"{where}: unknown trajectory {kind!r}")
    return None


_GUI_COMMANDS = ("set_pose", "translate", "rotate")


def _gui_script(doc, where, c: _Collector) -> GuiScript:
    entries = []
    for i, e in enumerate(doc or []):
        w = f"{where}[{i}]"
        if not isinstance(e, dict) or "t" not in e:
            c.err(f"{w}: entry needs a 't' and one command")
            continue
        c.keys(w, e, {"t", *_GUI_COMMANDS})
        cmds = [k for k in _GUI_COMMANDS if k in e]
        if len(cmds) != 1:
            c.err(f"{w}: exactly one of {', '.join(_GUI_COMMANDS)} required")
            continue
        t = float(e["t"])
        body = e[cmds[0]]
        if cmds[0] == "set_pose":
            c.keys(w + ".set_pose", body, {"position", "orientation"})
            pos = _vec((body or {}).get("position"), 3, w + ".position", c)
            q = _vec((body or {}).get("orientation", [1, 0, 0, 0]), 4, w + ".orientation", c)
            if pos and q:
                entries.append(ScriptEntry(t, SetPose(pos, q)))
        elif cmds[0] == "translate":
            d = _vec(body, 3, w + ".translate", c)
            if d:
                entries.append(ScriptEntry(t, Translate(d)))
        else:
            c.keys(w + ".rotate", body, {"axis", "angle_deg"})
            axis = _vec((body or {}).get("axis"), 3, w + ".axis", c)
            if axis:
                entries.append(ScriptEntry(t, Rotate(axis, float(body.get("angle_deg", 0.0)))))
    script = c.build(where, GuiScript, entries)
    return script if script is not None else GuiScript()


def _stream(token, where, c: _Collector) -> Optional[StreamId]:
    try:
        return StreamId.parse(str(token))
    except ValueError as exc:
        c.err(f"{where}: {exc}")
        return None


def parse_scenario(doc: Any) -> ScenarioSpec:
    c = _Collector()
    if not isinstance(doc, dict):
        raise ScenarioError(["scenario document must be a mapping"])
    c.keys("scenario", doc, TOP_KEYS)
    if doc.get("schema") != SCHEMA_VERSION:
        c.err(f"scenario: schema must be {SCHEMA_VERSION}, got {doc.get('schema')!r}")
    t_end = float(doc.get("t_end", 10_000.0))
    if not t_end > 0:
        c.err("scenario: t_end must be positive")

    ldoc = c.keys("links", doc.get("links"), LINK_KEYS)
    overrides = {}
    for i, o in enumerate(ldoc.get("overrides") or []):
        c.keys(f"links.overrides[{i}]", o, {"from", "to", "latency_ms", "directed"})
        try:
            a, b, lat = o["from"], o["to"], float(o["latency_ms"])
        except (KeyError, TypeError, ValueError):
            c.err(f"links.overrides[{i}]: needs from, to, latency_ms")
            continue
        overrides[(a, b)] = lat
        if not o.get("directed", False):
            overrides.setdefault((b, a), lat)
    jitter = c.keys("links.jitter", ldoc.get("jitter"), {"half_width_ms", "distribution"})
    if jitter.get("distribution", "uniform") != "uniform":
        c.err("links.jitter: only the uniform distribution is supported")
    links = c.build("links", LinkModel, float(ldoc.get("base_latency_ms", 0.2)),
                    float(ldoc.get("bandwidth_bps", 100_000_000)), overrides,
                    float(jitter.get("half_width_ms", 0.0)))

    tdoc = c.keys("timing", doc.get("timing"), TIMING_KEYS)
    timing = c.build("timing", ProtocolTiming, **{k: (int(v) if k == "max_retries" else float(v))
                                                   for k, v in tdoc.items() if k in TIMING_KEYS})

    nodes: list[NodeSpec] = []
    raw_nodes = doc.get("nodes")
    if not raw_nodes:
        c.err("scenario: nodes list is empty")
        raw_nodes = []
    seen: set = set()
    for i, nd in enumerate(raw_nodes):
        w = f"nodes[{i}]"
        if not isinstance(nd, dict) or "id" not in nd:
            c.err(f"{w}: node needs an id")
            continue
        c.keys(w, nd, NODE_KEYS)
        nid = str(nd["id"])
        if "/" in nid:
            c.err(f"{w}: node id {nid!r} may not contain '/'")
        if nid in seen:
            c.err(f"{w}: duplicate node id {nid!r}")
        seen.add(nid)
        qdoc = c.keys(w + ".qos", nd.get("qos"), QOS_KEYS)
        qos = c.build(w + ".qos", QosConfig, **qdoc) if qdoc.keys() <= QOS_KEYS else None
        sensors = []
        for j, sd in enumerate(nd.get("sensors") or []):
            sw = f"{w}.sensors[{j}]"
            sd = c.keys(sw, sd, SENSOR_KEYS)
            traj = _trajectory(sd.get("trajectory"), sw + ".trajectory", c)
            stop = sd.get("stop_ms")
            cfg = c.build(sw, SensorConfig, float(sd.get("rate_hz", 60.0)), traj,
                          float(sd.get("start_ms", 0.0)), None if stop is None else float(stop))
            if cfg is not None and traj is not None:
                sensors.append(cfg)
        script = _gui_script(nd.get("gui_script"), w + ".gui_script", c)
        nodes.append(NodeSpec(nid, qos or QosConfig(), tuple(sensors), script))

    declared = {s for n in nodes for s in n.streams()}
    node_ids = {n.id for n in nodes}
    for (a, b) in overrides:
        for x in (a, b):
            if x not in node_ids:
                c.err(f"links.overrides: unknown node {x!r}")

    timeline = []
    for i, d in enumerate(doc.get("timeline") or []):
        w = f"timeline[{i}]"
        if not isinstance(d, dict) or "at" not in d:
            c.err(f"{w}: directive needs 'at' and one action")
            continue
        c.keys(w, d, {"at", *ACTIONS})
        acts = [a for a in ACTIONS if a in d]
        if len(acts) != 1:
            c.err(f"{w}: exactly one of {', '.join(ACTIONS)} required")
            continue
        at = float(d["at"])
        if not 0 <= at < t_end:
            c.err(f"{w}: time {at} outside [0, t_end)")
        act = acts[0]
        body = d[act]
        if act in ("join", "leave"):
            nid = str(body)
            stream = None
        else:
            c.keys(f"{w}.{act}", body, {"node", "stream"})
            body = body or {}
            nid = str(body.get("node"))
            stream = _stream(body.get("stream"), f"{w}.{act}", c)
            if stream is not None:
                if stream not in declared:
                    c.err(f"{w}: undeclared stream {stream.token!r}")
                elif stream.origin == nid:
                    c.err(f"{w}: node {nid!r} cannot subscribe to its own stream {stream.token!r}")
        if nid not in node_ids:
            c.err(f"{w}: unknown node {nid!r}")
        timeline.append(Directive(at, act, nid, stream))

    objects = {}
    for tok, obj in (doc.get("objects") or {}).items():
        s = _stream(tok, "objects", c)
        if s is not None:
            if s not in declared:
                c.err(f"objects: undeclared stream {s.token!r}")
            objects[s] = str(obj)

    if c.errors:
        raise ScenarioError(c.errors)
    timeline.sort(key=lambda d: d.at)  # stable: equal times keep document order
    return ScenarioSpec(tuple(nodes), links, tuple(timeline), int(doc.get("seed", 0)), t_end,
                        timing, objects, str(doc.get("name", "scenario")),
                        str(doc.get("description", "")).strip())


def load_scenario(text: str) -> ScenarioSpec:
    """Parse scenario text (YAML) or a built-in name into a validated spec."""
    if text.strip() in BUILTINS:
        text = BUILTINS[text.strip()]
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError([f"unparseable document: {exc}"]) from None
    return parse_scenario(doc)


# --- built-in deployments ----------------------------------------------------

FIG5 = """\
schema: 1
name: fig5
description: >
  Five-node deployment on a 100 Mbps LAN. N1 and N3 each carry an optical
  tracker (60 Hz); N1 also manipulates the scene through a GUI. N2, N4 and
  N5 only visualize. Every site has an HMD and an ARC display, which have no
  protocol role and are not modelled.
seed: 0
t_end: 10000
links:
  base_latency_ms: 0.2
  bandwidth_bps: 100000000
nodes:
  - id: N1
    qos: {max_consumers: 8}
    sensors:
      - rate_hz: 60
        start_ms: 500
        trajectory: {circle: {radius: 0.5, period_s: 10, plane: xy}}
    gui_script:
      - {t: 3000, set_pose: {position: [0.1, 0.2, 0.0], orientation: [1, 0, 0, 0]}}
      - {t: 3200, translate: [0.05, 0.0, 0.0]}
      - {t: 3400, rotate: {axis: [0, 0, 1], angle_deg: 30}}
      - {t: 3600, translate: [0.0, -0.05, 0.02]}
  - id: N2
  - id: N3
    qos: {max_consumers: 8}
    sensors:
      - rate_hz: 60
        start_ms: 700
        trajectory: {circle: {radius: 0.3, period_s: 8, plane: xz}}
  - id: N4
  - id: N5
timeline:
  - {at: 0, join: N1}
  - {at: 10, join: N2}
  - {at: 20, join: N3}
  - {at: 30, join: N4}
  - {at: 40, join: N5}
  - {at: 100, subscribe: {node: N2, stream: N1/sensor/0}}
  - {at: 100, subscribe: {node: N2, stream: N1/gui/0}}
  - {at: 100, subscribe: {node: N2, stream: N3/sensor/0}}
  - {at: 110, subscribe: {node: N4, stream: N1/sensor/0}}
  - {at: 110, subscribe: {node: N4, stream: N1/gui/0}}
  - {at: 110, subscribe: {node: N4, stream: N3/sensor/0}}
  - {at: 120, subscribe: {node: N5, stream: N1/sensor/0}}
  - {at: 120, subscribe: {node: N5, stream: N1/gui/0}}
  - {at: 120, subscribe: {node: N5, stream: N3/sensor/0}}
  - {at: 130, subscribe: {node: N1, stream: N3/sensor/0}}
  - {at: 130, subscribe: {node: N3, stream: N1/sensor/0}}
"""

FIG5_DELEGATE = """\
schema: 1
name: fig5-delegate
description: >
  The fig5 deployment with N1 limited to a single direct consumer. N2, N4 and N5
  subscribe to N1's tracker; N2 is admitted directly and the later two are
  delegated to it.
seed: 0
t_end: 5000
links:
  base_latency_ms: 0.2
  bandwidth_bps: 100000000
nodes:
  - id: N1
    qos: {max_consumers: 1}
    sensors:
      - rate_hz: 60
        start_ms: 500
        trajectory: {circle: {radius: 0.5, period_s: 10, plane: xy}}
  - id: N2
    qos: {max_consumers: 4}
  - id: N3
    qos: {max_consumers: 8}
    sensors:
      - rate_hz: 60
        start_ms: 700
        trajectory: {circle: {radius: 0.3, period_s: 8, plane: xz}}
  - id: N4
  - id: N5
timeline:
  - {at: 0, join: N1}
  - {at: 10, join: N2}
  - {at: 20, join: N3}
  - {at: 30, join: N4}
  - {at: 40, join: N5}
  - {at: 100, subscribe: {node: N2, stream: N1/sensor/0}}
  - {at: 100, subscribe: {node: N2, stream: N3/sensor/0}}
  - {at: 200, subscribe: {node: N4, stream: N1/sensor/0}}
  - {at: 200, subscribe: {node: N4, stream: N3/sensor/0}}
  - {at: 300, subscribe: {node: N5, stream: N1/sensor/0}}
  - {at: 300, subscribe: {node: N5, stream: N3/sensor/0}}
"""

FIG5_SATURATED = FIG5_DELEGATE.replace("name: fig5-delegate", "name: fig5-saturated").replace(
    "  - id: N2\n    qos: {max_consumers: 4}", "  - id: N2\n    qos: {max_consumers: 1}").replace(
    "N2 is admitted directly and the later two are\n  delegated to it.",
    "N2 is admitted directly, N4 is delegated to it,\n  and N5 finds every candidate saturated.")

BUILTINS = {"fig5": FIG5, "fig5-delegate": FIG5_DELEGATE, "fig5-saturated": FIG5_SATURATED}
