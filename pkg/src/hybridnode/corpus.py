"""Seeded generator of random scenarios for property checks."""

from __future__ import annotations

import random

from .ids import StreamId
from .netsim import LinkModel
from .qos import QosConfig
from .scenario import Directive, NodeSpec, ScenarioSpec
from .sensors import Circle, GuiScript, Rotate, ScriptEntry, SensorConfig, SetPose, Translate


def random_scenario(seed: int, *, min_nodes: int = 2, max_nodes: int = 10,
                    t_end: float = 3000.0, rate_hz: float = 30.0) -> ScenarioSpec:
    """Random nodes, capacities 1-4, link latencies, sources and subscribe times."""
    rng = random.Random(seed)
    n = rng.randint(min_nodes, max_nodes)
    ids = [f"N{i}" for i in range(1, n + 1)]
    producer_ids = {nid for nid in ids if rng.random() < 0.4}
    if not producer_ids:
        producer_ids.add(rng.choice(ids))

    nodes = []
    for nid in ids:
        sensors = []
        script = GuiScript()
        if nid in producer_ids:
            for _ in range(rng.choice((1, 1, 2))):
                start = round(rng.uniform(200.0, 900.0), 3)
                stop = None if rng.random() < 0.5 else round(start + rng.uniform(600.0, 1800.0), 3)
                traj = Circle(round(rng.uniform(0.1, 1.0), 3), round(rng.uniform(2.0, 12.0), 3),
                              rng.choice(("xy", "xz", "yz")))
                sensors.append(SensorConfig(rate_hz, traj, start, stop))
        if rng.random() < 0.2 or (nid in producer_ids and not sensors):
            times = sorted(rng.sample(range(400, 2200, 10), rng.randint(2, 4)))
            entries = []
            for t in times:
                kind = rng.randrange(3)
                if kind == 0:
                    cmd = SetPose((rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)))
                elif kind == 1:
                    cmd = Translate((rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), 0.0))
                else:
                    cmd = Rotate((0.0, 0.0, 1.0), rng.uniform(-90, 90))
                entries.append(ScriptEntry(float(t), cmd))
            script = GuiScript(entries)
        nodes.append(NodeSpec(nid, QosConfig(max_consumers=rng.randint(1, 4)), tuple(sensors), script))

    overrides = {}
    for a in ids:
        for b in ids:
            if a < b and rng.random() < 0.3:
                lat = round(rng.uniform(0.1, 5.0), 3)
                overrides[(a, b)] = overrides[(b, a)] = lat
    jitter = round(rng.uniform(0.01, 0.3), 3) if rng.random() < 0.3 else 0.0
    links = LinkModel(round(rng.uniform(0.1, 2.0), 3), 100_000_000.0, overrides, jitter)

    timeline = []
    join_at = {}
    for nid in ids:
        join_at[nid] = round(rng.uniform(0.0, 150.0), 3)
        timeline.append(Directive(join_at[nid], "join", nid))
    streams: list[StreamId] = [s for ns in nodes for s in ns.streams()]
    for ns in nodes:
        for s in streams:
            if s.origin != ns.id and rng.random() < 0.6:
                at = round(rng.uniform(join_at[ns.id], 700.0), 3)
                timeline.append(Directive(at, "subscribe", ns.id, s))
    timeline.sort(key=lambda d: d.at)
    return ScenarioSpec(tuple(nodes), links, tuple(timeline), seed, t_end, name=f"random-{seed}")


def corpus(count: int = 100, base_seed: int = 0, **kw) -> list[ScenarioSpec]:
    return [random_scenario(base_seed + i, **kw) for i in range(count)]
