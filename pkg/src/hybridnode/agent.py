"""Behavior agent: the per-node controller of a hybrid node.

Each :class:`HybridNode` is a single logical actor driven by the network's
event loop. It bootstraps by broadcast, advertises its local streams, admits
subscribers directly while it has spare capacity, and otherwise delegates
the subscriber to one of its own direct consumers. Delegation is never
recursive, so no consumer is more than two hops from a stream's origin.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Optional

from . import state as sm
from .ids import NodeId, SourceKind, StreamId, node_key
from .messages import ControlMessage, DataMessage, MsgKind
from .netsim import Envelope, Network, Timer
from .qos import ArttTable, Candidate, QosConfig, admit, select_forwarder
from .scene import SceneReplica
from .sensors import GuiScript, PoseSample, SensorConfig, gui_commands, next_sample
from .state import NodeEvent, NodeState, ServerAction

MAX_DEPTH = 2


class ProtocolError(Exception):
    """A local API was misused (not a remote fault)."""


@dataclass(frozen=True)
class ProtocolTiming:
    join_timeout_ms: float = 50.0
    subscribe_timeout_ms: float = 1000.0
    retry_backoff_ms: float = 500.0
    max_retries: int = 3
    gui_idle_timeout_ms: float = 250.0

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        for name in ("join_timeout_ms", "subscribe_timeout_ms", "retry_backoff_ms", "gui_idle_timeout_ms"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class ProviderEntry:
    provider: NodeId
    origin: NodeId
    since: float = 0.0


@dataclass(frozen=True)
class ConsumerEntry:
    peer: NodeId
    admitted_at: float


@dataclass(frozen=True)
class SubscriptionDecision:
    kind: str  # "Accept" | "Redirect" | "Reject"
    forwarder: Optional[NodeId] = None
    reason: Optional[str] = None

    ACCEPT = "Accept"
    REDIRECT = "Redirect"
    REJECT = "Reject"


@dataclass
class _Pending:
    provider: NodeId
    retries: int = 0
    token: int = 0
    timer: Optional[Timer] = None


@dataclass(frozen=True)
class Delivery:
    t: float
    stream: StreamId
    seq: int
    origin_time: float
    hop_count: int
    provider: NodeId

    @property
    def latency_ms(self) -> float:
        return self.t - self.origin_time


@dataclass(frozen=True)
class Transition:
    t: float
    node: NodeId
    before: NodeState
    after: NodeState
    event: NodeEvent
    action: ServerAction

    def to_record(self) -> dict:
        return {"v": 1, "type": "state", "t": self.t, "node": self.node,
                "from": self.before.value, "to": self.after.value,
                "event": self.event.value, "action": self.action.value}


@dataclass
class RedirectRecord:
    t: float
    stream: StreamId
    requester: NodeId
    forwarder: NodeId
    forwarder_was_consumer: bool


class HybridNode:
    def __init__(self, node_id: NodeId, network: Network, *,
                 qos: QosConfig = QosConfig(),
                 sensors: tuple[SensorConfig, ...] = (),
                 gui_script: Optional[GuiScript] = None,
                 timing: ProtocolTiming = ProtocolTiming(),
                 objects: Optional[dict[StreamId, str]] = None,
                 on_transition=None):
        self.id = node_id
        self.net = network
        self.qos = qos
        self.timing = timing
        self.sensors = tuple(sensors)
        self.gui_script = gui_script or GuiScript()
        self._objects = objects or {}
        self._on_transition = on_transition

        self.state = NodeState.PASSIVE
        self.server_on = False
        self.alive = False

        self.local_streams: dict[StreamId, object] = {}
        for i, cfg in enumerate(self.sensors):
            self.local_streams[StreamId(node_id, SourceKind.SENSOR, i)] = cfg
        if self.gui_script:
            self.local_streams[StreamId(node_id, SourceKind.GUI, 0)] = self.gui_script

        self.peers: dict[NodeId, tuple[StreamId, ...]] = {}
        self.join_result: Optional[dict[NodeId, tuple[StreamId, ...]]] = None
        self.known: dict[StreamId, NodeId] = {}
        self.wanted: dict[StreamId, None] = {}
        self.producers: dict[StreamId, ProviderEntry] = {}
        self.consumers: dict[StreamId, dict[NodeId, ConsumerEntry]] = {}
        # origin side: stream -> forwarder -> downstream consumers it was handed
        self.delegations: dict[StreamId, dict[NodeId, dict[NodeId, None]]] = {}
        # forwarder side: stream -> consumers received through delegation
        self.delegated_in: dict[StreamId, dict[NodeId, None]] = {}
        self._pending: dict[StreamId, _Pending] = {}
        self._parked: dict[tuple[StreamId, NodeId], None] = {}
        self._refused: dict[tuple[StreamId, NodeId], None] = {}
        self._token = 0

        self.artt = ArttTable(qos.window)
        self.peer_spare: dict[NodeId, int] = {}
        self._pings: dict[int, tuple[NodeId, float]] = {}
        self._nonce = 0

        self.scene = SceneReplica()
        self.last_published: dict[StreamId, PoseSample] = {}
        self._seq: dict[StreamId, int] = {}
        self._sensor_active = [False] * len(self.sensors)
        self._gui_active = False
        self._gui_until = 0.0
        self._level = False

        self.transitions: list[Transition] = []
        self.deliveries: list[Delivery] = []
        self.redirects: list[RedirectRecord] = []
        self.failed: dict[StreamId, None] = {}
        self.counters = Counter()

    # --- helpers -------------------------------------------------------------

    @property
    def now(self) -> float:
        return self.net.now

    def object_for(self, stream: StreamId) -> str:
        return self._objects.get(stream, stream.token)

    def consumer_count(self) -> int:
        return sum(len(c) for c in self.consumers.values())

    def spare_capacity(self) -> int:
        return self.qos.max_consumers - self.consumer_count()

    def _send(self, dst: NodeId, msg) -> None:
        self.net.send(self.id, dst, msg)

    def _ctl(self, kind: MsgKind, **kw) -> ControlMessage:
        return ControlMessage(kind, self.id, **kw)

    def _schedule(self, at: float, fn, label: str) -> Timer:
        def fire():
            if self.alive:
                fn()
        return self.net.schedule(at, self.id, fire, f"{self.id}:{label}")

    def _fire(self, event: NodeEvent) -> sm.TransitionResult:
        before = self.state
        res = sm.step(before, event)
        if not res.applied:
            self.counters["absorbed_events"] += 1
            return res
        self.state = res.next
        if res.server_action is ServerAction.TURN_ON:
            self.server_on = True
        elif res.server_action is ServerAction.TURN_OFF:
            self.server_on = False
        if self.server_on != sm.server_active(self.state):
            self.counters["violation.server_coherence"] += 1
        tr = Transition(self.now, self.id, before, res.next, event, res.server_action)
        self.transitions.append(tr)
        if self._on_transition is not None:
            self._on_transition(tr)
        self._sync_self_listing()
        return res

    def _sync_self_listing(self) -> None:
        if sm.is_producing(self.state):
            for s in self.local_streams:
                if s not in self.producers:
                    self.producers[s] = ProviderEntry(self.id, self.id, self.now)
        else:
            for s in self.local_streams:
                self.producers.pop(s, None)

    # --- lifecycle -----------------------------------------------------------

    def join(self) -> None:
        """Attach, broadcast a join query and start local sources."""
        if self.alive:
            return
        self.alive = True
        self.state = NodeState.PASSIVE
        self.net.attach(self.id, self.receive)
        self.net.broadcast(self.id, self._ctl(MsgKind.JOIN_QUERY,
                                              known_streams=tuple(sorted(self.local_streams))))
        self._schedule(self.now + self.timing.join_timeout_ms, self._join_done, "join-timeout")
        self._schedule(self.now + self.qos.ping_period_ms, self._ping_round, "ping")
        self._start_sources()

    def _join_done(self) -> None:
        self.join_result = dict(self.peers)

    def leave(self) -> None:
        """Tear down subscriptions in both directions, then detach."""
        if not self.alive:
            return
        for stream in list(self.producers):
            if stream.origin != self.id:
                self.unsubscribe(stream)
        for stream, cons in list(self.consumers.items()):
            for peer in sorted(cons, key=node_key):
                self._send(peer, self._ctl(MsgKind.UNSUBSCRIBE, stream=stream))
        self.consumers.clear()
        self.delegated_in.clear()
        for p in self._pending.values():
            if p.timer:
                p.timer.cancel()
        self._pending.clear()
        self.wanted.clear()
        self.alive = False
        self.net.detach(self.id)

    # --- local sources -------------------------------------------------------

    def _start_sources(self) -> None:
        for i, cfg in enumerate(self.sensors):
            stream = StreamId(self.id, SourceKind.SENSOR, i)
            if cfg.stop_ms is not None and cfg.stop_ms <= self.now:
                continue
            k = 0
            while cfg.tick_time(k) < self.now:
                k += 1
            at = cfg.tick_time(k)
            if cfg.stop_ms is not None and at >= cfg.stop_ms:
                continue
            self._schedule(max(at, self.now), lambda i=i, s=stream, k=k: self._sensor_tick(i, s, k),
                           f"sensor{i}")
            if cfg.stop_ms is not None:
                self._schedule(cfg.stop_ms, lambda i=i: self._sensor_stop(i), f"sensor{i}-stop")
        if self.gui_script:
            stream = StreamId(self.id, SourceKind.GUI, 0)
            samples = list(gui_commands(self.gui_script, stream))
            for sample in samples:
                if sample.origin_time >= self.now:
                    self._schedule(sample.origin_time, lambda s=sample: self._gui_command(s), "gui")

    def _sensor_tick(self, i: int, stream: StreamId, k: int) -> None:
        cfg = self.sensors[i]
        t = cfg.tick_time(k)
        if not self._sensor_active[i]:
            self._sensor_active[i] = True
            self._update_level()
        seq = self._seq.get(stream, 0)
        sample = next_sample(cfg, stream, t, seq)
        if sample is not None:
            self._seq[stream] = seq + 1
            self.publish(stream, sample)
        nxt = cfg.tick_time(k + 1)
        if cfg.active_at(nxt):
            self._schedule(nxt, lambda: self._sensor_tick(i, stream, k + 1), f"sensor{i}")

    def _sensor_stop(self, i: int) -> None:
        if self._sensor_active[i]:
            self._sensor_active[i] = False
            self._update_level()

    def _gui_command(self, sample: PoseSample) -> None:
        if not self._gui_active:
            self._gui_active = True
            self._update_level()
        self._gui_until = sample.origin_time + self.timing.gui_idle_timeout_ms
        self._seq[sample.stream] = sample.seq + 1
        self.publish(sample.stream, sample)
        self._schedule(self._gui_until, self._gui_idle, "gui-idle")

    def _gui_idle(self) -> None:
        if self._gui_active and self.now >= self._gui_until:
            self._gui_active = False
            self._update_level()

    def _update_level(self) -> None:
        level = any(self._sensor_active) or self._gui_active
        if level != self._level:
            self._level = level
            self.local_producer_edge(level)

    def local_producer_edge(self, now_active: bool) -> None:
        """Feed a rising/falling edge of local production to the state machine."""
        if now_active:
            self._fire(NodeEvent.SENSOR_ON)
            for stream in self.local_streams:
                self.advertise(stream)
        else:
            self._fire(NodeEvent.SENSOR_OFF)

    def advertise(self, stream: StreamId) -> None:
        if stream.origin != self.id or stream not in self.local_streams:
            raise ProtocolError(f"{self.id} cannot advertise foreign stream {stream}")
        self.net.broadcast(self.id, self._ctl(MsgKind.ADVERTISE, stream=stream))

    # --- publishing and data --------------------------------------------------

    def publish(self, stream: StreamId, sample: PoseSample) -> int:
        """Apply locally and fan out to direct consumers; returns sends made."""
        if stream.origin != self.id:
            raise ProtocolError(f"{self.id} cannot publish foreign stream {stream}")
        if not sm.is_producing(self.state):
            self.counters["drop.publish_while_passive"] += 1
            return 0
        self.scene.apply_update(self.object_for(stream), sample)
        self.last_published[stream] = sample
        return self._fan_out(stream, sample.hopped())

    def _fan_out(self, stream: StreamId, sample: PoseSample) -> int:
        targets = self.consumers.get(stream)
        if not targets:
            return 0
        if not sm.server_active(self.state):
            self.counters["violation.serving_coherence"] += 1
            return 0
        msg = DataMessage(self.id, sample)
        for peer in sorted(targets, key=node_key):
            self._send(peer, msg)
        return len(targets)

    def on_data(self, sender: NodeId, sample: PoseSample) -> None:
        stream = sample.stream
        entry = self.producers.get(stream)
        if entry is None or entry.provider != sender or stream.origin == self.id:
            self.counters["drop.stale_route"] += 1
            return
        if sample.hop_count > MAX_DEPTH:
            self.counters["violation.depth"] += 1
        self.scene.apply_update(self.object_for(stream), sample)
        self.deliveries.append(Delivery(self.now, stream, sample.seq, sample.origin_time,
                                        sample.hop_count, sender))
        if self.consumers.get(stream):
            if sample.hop_count + 1 > MAX_DEPTH:
                self.counters["violation.depth"] += 1
                return
            self._fan_out(stream, sample.hopped())

    # --- subscribing (consumer side) -------------------------------------------

    def want(self, stream: StreamId) -> None:
        """Scenario directive: subscribe to ``stream`` as soon as it is known."""
        if stream.origin == self.id:
            raise ProtocolError(f"{self.id} cannot subscribe to its own stream {stream}")
        self.wanted[stream] = None
        if stream in self.known:
            self._maybe_subscribe(stream)

    def _learn(self, stream: StreamId) -> None:
        if stream.origin == self.id:
            return
        self.known[stream] = stream.origin
        self._maybe_subscribe(stream)

    def _maybe_subscribe(self, stream: StreamId) -> None:
        if (self.alive and stream in self.wanted and stream not in self.producers
                and stream not in self._pending):
            self.subscribe(stream.origin, stream)

    def subscribe(self, provider: NodeId, stream: StreamId, retries: int = 0) -> None:
        """Send Subscribe to ``provider``; the outcome arrives asynchronously."""
        if stream.origin == self.id:
            raise ProtocolError(f"{self.id} cannot subscribe to its own stream {stream}")
        old = self._pending.get(stream)
        if old is not None and old.timer is not None:
            old.timer.cancel()
        self._token += 1
        p = _Pending(provider, retries, self._token)
        self._pending[stream] = p
        self.failed.pop(stream, None)
        self._send(provider, self._ctl(MsgKind.SUBSCRIBE, stream=stream))
        self.counters["subscribe_sent"] += 1
        p.timer = self._schedule(self.now + self.timing.subscribe_timeout_ms,
                                 lambda: self._subscribe_timeout(stream, p.token), "subscribe-timeout")

    def _subscribe_timeout(self, stream: StreamId, token: int) -> None:
        p = self._pending.get(stream)
        if p is None or p.token != token:
            return
        self.counters["subscribe_timeouts"] += 1
        self._attempt_failed(stream, p)

    def _attempt_failed(self, stream: StreamId, p: _Pending) -> None:
        if p.timer is not None:
            p.timer.cancel()
        if p.retries < self.timing.max_retries:
            self.counters["retries"] += 1
            self._token += 1
            p.token = self._token
            p.provider = stream.origin
            p.timer = None
            retries = p.retries + 1
            token = p.token

            def retry():
                cur = self._pending.get(stream)
                if cur is p and cur.token == token:
                    self.subscribe(stream.origin, stream, retries)
            self._schedule(self.now + self.timing.retry_backoff_ms, retry, "subscribe-retry")
        else:
            self.counters["subscribe_failures"] += 1
            self._pending.pop(stream, None)
            self.wanted.pop(stream, None)
            self.failed[stream] = None

    def _on_ack(self, sender: NodeId, stream: StreamId) -> None:
        p = self._pending.get(stream)
        if p is None or p.provider != sender:
            self.counters["stale_responses"] += 1
            return
        if p.timer is not None:
            p.timer.cancel()
        del self._pending[stream]
        self.producers[stream] = ProviderEntry(sender, stream.origin, self.now)

    def _on_redirect(self, sender: NodeId, stream: StreamId, forwarder: NodeId) -> None:
        p = self._pending.get(stream)
        if p is None or p.provider != sender:
            self.counters["stale_responses"] += 1
            return
        self.counters["redirects_received"] += 1
        if p.timer is not None:
            p.timer.cancel()
        p.provider = forwarder
        self._send(forwarder, self._ctl(MsgKind.SUBSCRIBE, stream=stream))
        self.counters["subscribe_sent"] += 1
        token = p.token
        p.timer = self._schedule(self.now + self.timing.subscribe_timeout_ms,
                                 lambda: self._subscribe_timeout(stream, token), "subscribe-timeout")

    def _on_reject(self, sender: NodeId, stream: StreamId) -> None:
        p = self._pending.get(stream)
        if p is None or p.provider != sender:
            self.counters["stale_responses"] += 1
            return
        self.counters["rejects_received"] += 1
        self._attempt_failed(stream, p)

    def unsubscribe(self, stream: StreamId) -> None:
        self.wanted.pop(stream, None)
        p = self._pending.pop(stream, None)
        if p is not None and p.timer is not None:
            p.timer.cancel()
        entry = self.producers.get(stream)
        if entry is None or stream.origin == self.id:
            if p is None:
                self.counters["drop.unknown_unsubscribe"] += 1
            return
        del self.producers[stream]
        self._send(entry.provider, self._ctl(MsgKind.UNSUBSCRIBE, stream=stream))
        self._revoke_downstream(stream)

    def _revoke_downstream(self, stream: StreamId) -> None:
        """We stopped receiving a stream we forward: cut every downstream consumer."""
        cons = self.consumers.pop(stream, None)
        if not cons:
            return
        for peer in sorted(cons, key=node_key):
            self._send(peer, self._ctl(MsgKind.UNSUBSCRIBE, stream=stream))
        self.delegated_in.pop(stream, None)
        self._maybe_forward_off()

    def _maybe_forward_off(self) -> None:
        if sm.is_forwarding(self.state) and not any(self.delegated_in.values()):
            self._fire(NodeEvent.FORWARD_OFF)

    # --- serving (provider side) ---------------------------------------------

    def handle_subscribe(self, requester: NodeId, stream: StreamId) -> Optional[SubscriptionDecision]:
        """Decide a Subscribe from ``requester`` and send the response.

        Returns None when the request is parked at a forwarder awaiting the
        origin's DelegateForward for it.
        """
        if stream.origin != self.id:
            return self._handle_forwarded_subscribe(requester, stream)
        if stream not in self.local_streams:
            self._send(requester, self._ctl(MsgKind.REJECT, stream=stream, reason="unknown-stream"))
            return SubscriptionDecision(SubscriptionDecision.REJECT, reason="unknown-stream")
        cons = self.consumers.setdefault(stream, {})
        if requester in cons or admit(self.qos, self.artt, self.consumer_count(), requester):
            if requester not in cons:
                self._add_consumer(stream, requester)
            self._send(requester, self._ctl(MsgKind.SUBSCRIBE_ACK, stream=stream))
            return SubscriptionDecision(SubscriptionDecision.ACCEPT)
        candidates = [Candidate(c, self.artt.artt(c), self.peer_spare.get(c, 0))
                      for c in cons if c != requester]
        choice = select_forwarder(candidates)
        if choice is None:
            self.counters["rejects"] += 1
            self._send(requester, self._ctl(MsgKind.REJECT, stream=stream, reason="no-capacity"))
            return SubscriptionDecision(SubscriptionDecision.REJECT, reason="no-capacity")
        legit = choice in cons
        if not legit:
            self.counters["violation.redirect_legitimacy"] += 1
        self.redirects.append(RedirectRecord(self.now, stream, requester, choice, legit))
        self.counters["redirects"] += 1
        self.delegations.setdefault(stream, {}).setdefault(choice, {})[requester] = None
        self._send(choice, self._ctl(MsgKind.DELEGATE_FORWARD, stream=stream, new_consumer=requester))
        self._send(requester, self._ctl(MsgKind.REDIRECT_TO, stream=stream, forwarder=choice))
        return SubscriptionDecision(SubscriptionDecision.REDIRECT, forwarder=choice)

    def _handle_forwarded_subscribe(self, requester: NodeId, stream: StreamId):
        if requester in self.consumers.get(stream, {}):
            self._send(requester, self._ctl(MsgKind.SUBSCRIBE_ACK, stream=stream))
            return SubscriptionDecision(SubscriptionDecision.ACCEPT)
        key = (stream, requester)
        if key in self._refused:
            del self._refused[key]
            self._send(requester, self._ctl(MsgKind.REJECT, stream=stream, reason="forwarder-full"))
            return SubscriptionDecision(SubscriptionDecision.REJECT, reason="forwarder-full")
        entry = self.producers.get(stream)
        if entry is not None and entry.provider == stream.origin:
            self._parked[key] = None
            return None
        self._send(requester, self._ctl(MsgKind.REJECT, stream=stream, reason="unknown-stream"))
        return SubscriptionDecision(SubscriptionDecision.REJECT, reason="unknown-stream")

    def _add_consumer(self, stream: StreamId, peer: NodeId) -> None:
        self.consumers.setdefault(stream, {})[peer] = ConsumerEntry(peer, self.now)
        if self.consumer_count() > self.qos.max_consumers:
            self.counters["violation.capacity"] += 1
        self._ping(peer)

    def on_delegate(self, origin: NodeId, stream: StreamId, new_consumer: NodeId) -> bool:
        entry = self.producers.get(stream)
        key = (stream, new_consumer)
        ok = (entry is not None and entry.provider == stream.origin == origin
              and self.spare_capacity() > 0 and new_consumer != self.id)
        if not ok:
            self.counters["delegations_refused"] += 1
            self._send(origin, self._ctl(MsgKind.DELEGATE_NACK, stream=stream, new_consumer=new_consumer))
            if key in self._parked:
                del self._parked[key]
                self._send(new_consumer, self._ctl(MsgKind.REJECT, stream=stream, reason="forwarder-full"))
            else:
                self._refused[key] = None
            return False
        if new_consumer not in self.consumers.get(stream, {}):
            self._add_consumer(stream, new_consumer)
        self.delegated_in.setdefault(stream, {})[new_consumer] = None
        if not sm.is_forwarding(self.state):
            self._fire(NodeEvent.FORWARD_ON)
        if key in self._parked:
            del self._parked[key]
            self._send(new_consumer, self._ctl(MsgKind.SUBSCRIBE_ACK, stream=stream))
        return True

    def on_unsubscribe(self, peer: NodeId, stream: StreamId) -> None:
        cons = self.consumers.get(stream)
        if cons and peer in cons:
            del cons[peer]
            if not cons:
                del self.consumers[stream]
            d = self.delegations.get(stream)
            if d is not None:
                d.pop(peer, None)
            down = self.delegated_in.get(stream)
            if down is not None and peer in down:
                del down[peer]
                if not down:
                    del self.delegated_in[stream]
                    self._send(stream.origin, self._ctl(MsgKind.FORWARD_OFF, stream=stream))
                self._maybe_forward_off()
            return
        entry = self.producers.get(stream)
        if entry is not None and entry.provider == peer and stream.origin != self.id:
            # provider-side teardown
            del self.producers[stream]
            self._revoke_downstream(stream)
            if peer == stream.origin:
                self.wanted.pop(stream, None)
            else:
                self._maybe_subscribe(stream)
            return
        self.counters["drop.unknown_unsubscribe"] += 1

    # --- RTT probing -----------------------------------------------------

    def _ping(self, peer: NodeId) -> None:
        self._nonce += 1
        self._pings[self._nonce] = (peer, self.now)
        self._send(peer, self._ctl(MsgKind.PING, nonce=self._nonce))

    def _ping_round(self) -> None:
        peers: dict[NodeId, None] = {}
        for cons in self.consumers.values():
            for p in cons:
                peers[p] = None
        for p in sorted(peers, key=node_key):
            self._ping(p)
        self._schedule(self.now + self.qos.ping_period_ms, self._ping_round, "ping")

    # --- dispatch --------------------------------------------------------

    def receive(self, env: Envelope) -> None:
        msg = env.payload
        if isinstance(msg, DataMessage):
            self.on_data(msg.sender, msg.sample)
            return
        k = msg.kind
        s = msg.stream
        if k is MsgKind.JOIN_QUERY:
            self.peers[msg.sender] = msg.known_streams
            for stream in msg.known_streams:
                self._learn(stream)
            self._send(msg.sender, self._ctl(MsgKind.JOIN_RESPONSE,
                                             known_streams=tuple(sorted(self.local_streams))))
        elif k is MsgKind.JOIN_RESPONSE:
            self.peers[msg.sender] = msg.known_streams
            for stream in msg.known_streams:
                self._learn(stream)
        elif k is MsgKind.ADVERTISE:
            self._learn(s)
        elif k is MsgKind.SUBSCRIBE:
            self.handle_subscribe(msg.sender, s)
        elif k is MsgKind.SUBSCRIBE_ACK:
            self._on_ack(msg.sender, s)
        elif k is MsgKind.REDIRECT_TO:
            self._on_redirect(msg.sender, s, msg.forwarder)
        elif k is MsgKind.DELEGATE_FORWARD:
            self.on_delegate(msg.sender, s, msg.new_consumer)
        elif k is MsgKind.DELEGATE_NACK:
            d = self.delegations.get(s, {}).get(msg.sender)
            if d is not None:
                d.pop(msg.new_consumer, None)
                if not d:
                    del self.delegations[s][msg.sender]
            self.counters["rejects"] += 1
        elif k is MsgKind.REJECT:
            self._on_reject(msg.sender, s)
        elif k is MsgKind.UNSUBSCRIBE:
            self.on_unsubscribe(msg.sender, s)
        elif k is MsgKind.FORWARD_OFF:
            self.delegations.get(s, {}).pop(msg.sender, None)
        elif k is MsgKind.PING:
            self._send(msg.sender, self._ctl(MsgKind.PONG, nonce=msg.nonce, spare=self.spare_capacity()))
        elif k is MsgKind.PONG:
            sent = self._pings.pop(msg.nonce, None)
            if sent is not None and sent[0] == msg.sender:
                if not self.artt.record_rtt(msg.sender, self.now - sent[1]):
                    self.counters["drop.negative_rtt"] += 1
                self.peer_spare[msg.sender] = msg.spare
        else:  # pragma: no cover
            raise ProtocolError(f"unhandled message kind {k}")
