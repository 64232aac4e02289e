"""Deterministic discrete-event transport.

Envelopes and timers share one heap ordered by ``(time, global_seq)``;
``global_seq`` is assigned at send/schedule time, so equal-time events run
in the order they were created. Transport is reliable and never duplicates.
"""

from __future__ import annotations

import heapq
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from .ids import NodeId, node_key


@dataclass(frozen=True)
class LinkModel:
    base_latency_ms: float = 0.2
    bandwidth_bps: float = 100_000_000.0
    overrides: dict = field(default_factory=dict)  # (src, dst) -> latency ms
    jitter_half_width_ms: float = 0.0

    def __post_init__(self):
        if self.base_latency_ms < 0:
            raise ValueError("base latency must be >= 0")
        if not self.bandwidth_bps > 0:
            raise ValueError("bandwidth must be > 0")
        if self.jitter_half_width_ms < 0:
            raise ValueError("jitter half width must be >= 0")
        for pair, lat in self.overrides.items():
            if lat < 0:
                raise ValueError(f"negative latency on link {pair}")

    def latency(self, src: NodeId, dst: NodeId) -> float:
        return self.overrides.get((src, dst), self.base_latency_ms)

    def transmission_ms(self, size_bytes: int) -> float:
        return size_bytes * 8 / self.bandwidth_bps * 1000.0


@dataclass(frozen=True)
class Envelope:
    payload: Any
    src: NodeId
    dst: NodeId
    send_time: float
    deliver_time: float
    global_seq: int
    size_bytes: int


@dataclass
class Timer:
    at: float
    node: NodeId
    callback: Callable[[], None]
    label: str
    global_seq: int
    cancelled: bool = False

    def cancel(self) -> None:
        self.cancelled = True


class Network:
    def __init__(self, links: Optional[LinkModel] = None, seed: int = 0,
                 recorder: Optional[Callable[[dict], None]] = None):
        self.links = links or LinkModel()
        self.rng = random.Random(seed)
        self.recorder = recorder
        self.now = 0.0
        self._queue: list = []
        self._seq = 0
        self._handlers: dict[NodeId, Callable[[Envelope], None]] = {}
        self.counters = Counter()
        self.sent_by_kind = Counter()
        self.after_event: Optional[Callable[[Any], None]] = None
        self._last_delivery: dict[tuple[NodeId, NodeId], float] = {}

    # attachment ------------------------------------------------------------

    def attach(self, node: NodeId, handler: Callable[[Envelope], None]) -> None:
        self._handlers[node] = handler

    def detach(self, node: NodeId) -> None:
        self._handlers.pop(node, None)

    def attached(self) -> list[NodeId]:
        return sorted(self._handlers, key=node_key)

    def is_attached(self, node: NodeId) -> bool:
        return node in self._handlers

    # sending ---------------------------------------------------------------

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def send(self, src: NodeId, dst: NodeId, payload, size_bytes: Optional[int] = None) -> Optional[Envelope]:
        if size_bytes is None:
            size_bytes = payload.size_bytes
        kind = str(getattr(payload, "kind", type(payload).__name__))
        if dst not in self._handlers:
            self.counters["dropped_unknown_destination"] += 1
            return None
        latency = self.links.latency(src, dst) + self.links.transmission_ms(size_bytes)
        hw = self.links.jitter_half_width_ms
        if hw > 0:
            deliver = self.now + max(0.0, latency + self.rng.uniform(-hw, hw))
        else:
            # a short frame must not overtake a longer one sent earlier on the same pair
            deliver = max(self.now + latency, self._last_delivery.get((src, dst), 0.0))
            self._last_delivery[(src, dst)] = deliver
        env = Envelope(payload, src, dst, self.now, deliver, self._next_seq(), size_bytes)
        heapq.heappush(self._queue, (env.deliver_time, env.global_seq, env))
        self.counters["sent"] += 1
        self.sent_by_kind[kind] += 1
        return env

    def broadcast(self, src: NodeId, payload, size_bytes: Optional[int] = None) -> list[Envelope]:
        out = []
        for dst in self.attached():
            if dst != src:
                env = self.send(src, dst, payload, size_bytes)
                if env is not None:
                    out.append(env)
        return out

    def schedule(self, at: float, node: NodeId, callback: Callable[[], None], label: str) -> Timer:
        if at < self.now:
            raise ValueError(f"cannot schedule in the past ({at} < {self.now})")
        timer = Timer(at, node, callback, label, self._next_seq())
        heapq.heappush(self._queue, (at, timer.global_seq, timer))
        return timer

    # running ---------------------------------------------------------------

    def pending(self) -> int:
        return len(self._queue)

    def in_flight(self) -> int:
        return sum(1 for _, _, item in self._queue if isinstance(item, Envelope))

    def _dispatch(self, item) -> None:
        # every item created by this event's handler gets a seq above ``mark``
        mark = self._seq
        if isinstance(item, Envelope):
            handler = self._handlers.get(item.dst)
            if self.recorder is not None:
                self.recorder(self._envelope_record(item, handler is not None, mark))
            if handler is None:
                self.counters["dropped_detached"] += 1
            else:
                self.counters["delivered"] += 1
                handler(item)
        else:
            if self.recorder is not None:
                self.recorder({"v": 1, "type": "timer", "seq": item.global_seq, "t": item.at, "mark": mark,
                               "node": item.node, "label": item.label,
                               "cancelled": item.cancelled})
            if not item.cancelled:
                item.callback()
        if self.after_event is not None:
            self.after_event(item)

    def run_until(self, t_end: float) -> int:
        """Process every event with time <= ``t_end``; return how many ran."""
        n = 0
        while self._queue and self._queue[0][0] <= t_end:
            t, _, item = heapq.heappop(self._queue)
            self.now = t
            self._dispatch(item)
            n += 1
        self.now = max(self.now, t_end)
        return n

    def drain(self) -> int:
        """Deliver everything in flight, discarding timers, until no envelope remains.

        Handlers may still send; those envelopes are delivered too. Timers are
        discarded without being recorded or counted.
        """
        n = 0
        while self._queue:
            t, _, item = heapq.heappop(self._queue)
            if not isinstance(item, Envelope):
                self.counters["timers_discarded"] += 1
                continue
            self.now = t
            self._dispatch(item)
            n += 1
        return n

    @staticmethod
    def _envelope_record(env: Envelope, delivered: bool, mark: int) -> dict:
        rec = {"v": 1, "type": "msg", "seq": env.global_seq, "mark": mark, "t": env.deliver_time,
               "sent": env.send_time, "from": env.src, "to": env.dst,
               "bytes": env.size_bytes, "delivered": delivered}
        rec["payload"] = env.payload.to_record() if hasattr(env.payload, "to_record") else repr(env.payload)
        return rec
